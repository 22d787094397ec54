"""Steady-state short-circuit equilibrium solver for converter-dominated grids."""

from .converter import FSS, PSS, USS, VscSpec, admissible_states, q_reference
from .elements import PqNodeSpec, PvNodeSpec, SlackSpec, TheveninSpec
from .model import ModelError, NetworkModel, analyze
from .network import NO_FAULT, Branch, Bus, FaultSpec, assemble, fault_stamp
from .phasor import (PhaseTriple, PowerElements, SequenceTriple, from_polar,
                     power_elements, to_phase, to_sequence)
from .saturation import (EquilibriumPoint, NoEquilibrium, exhaustive_oracle,
                         run_algorithm)
from .solver import SolveOptions, SolveOutcome, flat_start, solve
from .system import Combination, CombinationSpace, build_residual

__version__ = "0.1.0"

__all__ = [
    "Branch", "Bus", "Combination", "CombinationSpace", "EquilibriumPoint",
    "FSS", "FaultSpec", "ModelError", "NO_FAULT", "NetworkModel",
    "NoEquilibrium", "PSS", "PhaseTriple", "PowerElements", "PqNodeSpec",
    "PvNodeSpec", "SequenceTriple", "SlackSpec", "SolveOptions",
    "SolveOutcome", "TheveninSpec", "USS", "VscSpec", "admissible_states",
    "analyze", "assemble", "build_residual", "exhaustive_oracle",
    "fault_stamp", "flat_start", "from_polar", "power_elements",
    "q_reference", "run_algorithm", "solve", "to_phase", "to_sequence",
]
