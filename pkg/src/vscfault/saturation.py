"""Outer iteration over converter saturation states.

``run_algorithm`` repeatedly solves the system for the current state
assignment, maps the solution through the per-mode update rules and stops
at a fixed point; repeating a previously tested combination triggers the
loop-avoidance fallback (lowest untested combination number).
``exhaustive_oracle`` brute-forces every combination instead and filters
the survivors, serving as the reference the iterative path is checked
against.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .converter import FSS, PSS, USS, VscSpec
from .model import ModelInfo, NetworkModel, analyze
from .network import NO_FAULT, FaultSpec
from .phasor import PowerElements, SequenceTriple
from .solver import SolveOptions, SolveOutcome, flat_start, solve
from .system import Combination, CombinationSpace, PackedSystem, build_residual

LIMIT_SLACK = 1e-6  # relative tolerance on |i+| <= i_max checks


@dataclass(frozen=True)
class ConverterView:
    """Solved quantities of one converter, as seen by the update rules."""

    spec: VscSpec
    state: str
    u_mag: float
    i_mag: float
    p_con: float
    q_con: float


def converter_views(system: PackedSystem, x: np.ndarray,
                    states: tuple[str, ...]) -> list[ConverterView]:
    views = []
    for k, conv in enumerate(system.model.converters):
        u = system.bus_voltage(x, conv.bus)
        i = system.element_current(x, conv.name)
        s_pos = u.pos * np.conj(i.pos)
        s_neg = u.neg * np.conj(i.neg)
        views.append(ConverterView(
            spec=conv, state=states[k], u_mag=abs(u.pos), i_mag=abs(i.pos),
            p_con=float(s_pos.real + s_neg.real),
            q_con=float(s_pos.imag + s_neg.imag)))
    return views


def _next_state(view: ConverterView, fault_active: bool) -> str:
    spec, st = view.spec, view.state
    if spec.mode == "PQ":
        um = max(view.u_mag, 1e-9)
        if fault_active:
            i_q_req = spec.i_d0 + spec.k_isp * (spec.u_ref_gs - um)
        else:
            i_q_req = spec.q_disp / um
        i_tot_req = math.hypot(spec.p_disp / um, i_q_req)
        if i_q_req > spec.i_max:
            return FSS
        if i_tot_req > spec.i_max:
            return PSS
        return USS
    if spec.mode == "PV":
        if st == USS:
            return PSS if view.i_mag > spec.i_max * (1 + LIMIT_SLACK) else USS
        if st == PSS:
            return USS if abs(view.p_con) > abs(spec.p_disp) else PSS
        return PSS if view.u_mag > spec.u_ref_pv * (1 + LIMIT_SLACK) else FSS
    # GF
    if st == USS:
        return FSS if view.i_mag > spec.i_max * (1 + LIMIT_SLACK) else USS
    return USS if view.u_mag > spec.u_ref_gf * (1 + LIMIT_SLACK) else FSS


def ds_update(system: PackedSystem, outcome: SolveOutcome,
              states: tuple[str, ...]) -> Optional[tuple[str, ...]]:
    """Map a solve outcome to the next state vector.

    When the solve failed, only PV converters tested in PSS move (to FSS,
    the no-solution signal of a deep fault); with none present there is
    nothing to learn from the failure and ``None`` is returned so the
    caller falls back to a fresh combination.
    """
    if not outcome.converged:
        if any(c.mode == "PV" and st == PSS
               for c, st in zip(system.model.converters, states)):
            return tuple(FSS if (c.mode == "PV" and st == PSS) else st
                         for c, st in zip(system.model.converters, states))
        return None
    views = converter_views(system, outcome.x, states)
    return tuple(_next_state(v, system.fault.active) for v in views)


def x_new_fallback(tested_fs, space: CombinationSpace) -> Optional[tuple[str, ...]]:
    """Deterministic untested-combination pick: lowest untested f."""
    tested = set(tested_fs)
    for f in range(1, space.n_combinations + 1):
        if f not in tested:
            return space.decode(f)
    return None


@dataclass
class IterationStep:
    n_t: int
    f: int
    states: tuple[str, ...]
    converged: bool
    residual_norm: float
    solver_iters: int
    next_states: Optional[tuple[str, ...]]
    fallback: bool = False


@dataclass
class IterationTrace:
    steps: list[IterationStep] = field(default_factory=list)
    termination: str = ""

    @property
    def tested_fs(self) -> list[int]:
        return [s.f for s in self.steps]


@dataclass
class EquilibriumPoint:
    """Solved short-circuit equilibrium."""

    bus_voltages: dict[str, SequenceTriple]
    element_currents: dict[str, SequenceTriple]
    converter_states: dict[str, str]
    converter_powers: dict[str, PowerElements]
    omega: float
    residual_norm: float
    n_outer: int
    f: int
    x: np.ndarray
    trace: IterationTrace


@dataclass
class NoEquilibrium:
    reason: str  # "n_t_max exhausted" | "all combinations tested"
    trace: IterationTrace


def _equilibrium_from(system: PackedSystem, outcome: SolveOutcome,
                      n_outer: int, trace: IterationTrace) -> EquilibriumPoint:
    x = outcome.x
    return EquilibriumPoint(
        bus_voltages={b: system.bus_voltage(x, b) for b in system.admittance.bus_ids},
        element_currents={e.name: system.element_current(x, e.name)
                          for e in system.model.elements},
        converter_states=system.converter_states(),
        converter_powers={c.name: system.element_powers(x, c.name)
                          for c in system.model.converters},
        omega=system.omega(x),
        residual_norm=outcome.residual_norm,
        n_outer=n_outer,
        f=system.combination.f,
        x=x,
        trace=trace,
    )


def _solve_combination(model, fault, comb, info, opts, warm_x=None):
    """One inner solve; retries from flat start if a fully-saturated
    converter lands on the reactive-absorption branch."""
    system = build_residual(model, fault, comb, info=info)
    x0 = warm_x if warm_x is not None else flat_start(system)
    outcome = solve(system, x0, opts)
    if outcome.converged and _fss_q_negative(system, outcome.x, comb.states):
        if warm_x is not None:
            retry = solve(system, flat_start(system), opts)
            if retry.converged and not _fss_q_negative(system, retry.x, comb.states):
                outcome = retry
    return system, outcome


def _fss_q_negative(system, x, states) -> bool:
    return any(v.state == FSS and v.q_con < -1e-9
               for v in converter_views(system, x, states))


def run_algorithm(model: NetworkModel, fault: FaultSpec = NO_FAULT,
                  x0_states: Optional[tuple[str, ...]] = None,
                  n_t_max: int = 12,
                  opts: Optional[SolveOptions] = None,
                  info: Optional[ModelInfo] = None):
    """Iterative identification of the short-circuit equilibrium point.

    Returns an :class:`EquilibriumPoint`, or :class:`NoEquilibrium` with
    the full iteration trace when the state iteration does not reach a
    fixed point within ``n_t_max`` outer solves.
    """
    if n_t_max < 1:
        raise ValueError("n_t_max must be at least 1")
    info = info or analyze(model)
    space = CombinationSpace(model)
    opts = opts or SolveOptions()
    states = tuple(x0_states) if x0_states is not None else tuple(
        USS for _ in space.radices)

    trace = IterationTrace()
    warm_x = None
    for n_t in range(1, n_t_max + 1):
        comb = space.combination(states)
        system, outcome = _solve_combination(model, fault, comb, info, opts,
                                             warm_x=warm_x)
        next_states = ds_update(system, outcome, states)
        step = IterationStep(n_t=n_t, f=comb.f, states=states,
                             converged=outcome.converged,
                             residual_norm=outcome.residual_norm,
                             solver_iters=outcome.iters,
                             next_states=next_states)
        trace.steps.append(step)

        if outcome.converged and next_states == states:
            trace.termination = "fixed point"
            return _equilibrium_from(system, outcome, n_t, trace)

        if next_states is None or space.encode(next_states) in trace.tested_fs:
            next_states = x_new_fallback(trace.tested_fs, space)
            step.fallback = True
            if next_states is None:
                trace.termination = "all combinations tested"
                return NoEquilibrium("all combinations tested", trace)
        step.next_states = next_states
        states = next_states
        warm_x = outcome.x if outcome.converged else None

    trace.termination = "n_t_max exhausted"
    return NoEquilibrium("n_t_max exhausted", trace)


@dataclass
class OracleEntry:
    f: int
    states: tuple[str, ...]
    point: EquilibriumPoint


def is_valid_equilibrium(system: PackedSystem, outcome: SolveOutcome,
                         states: tuple[str, ...]) -> bool:
    """Survivor filter of the brute-force scan.

    A converged point survives when every converter respects its current
    limit, saturated converters sit on the voltage-support branch, and the
    state assignment is a fixed point of the update rules.
    """
    if not outcome.converged:
        return False
    views = converter_views(system, outcome.x, states)
    for v in views:
        if v.i_mag > v.spec.i_max * (1 + LIMIT_SLACK):
            return False
        if v.state == FSS and v.q_con < -1e-9:
            return False
    next_states = tuple(_next_state(v, system.fault.active) for v in views)
    return next_states == states


def exhaustive_oracle(model: NetworkModel, fault: FaultSpec = NO_FAULT,
                      opts: Optional[SolveOptions] = None,
                      cap: int = 4096,
                      workers: Optional[int] = None,
                      info: Optional[ModelInfo] = None) -> list[OracleEntry]:
    """Solve every combination from flat start; return the valid survivors.

    Results are ordered by combination number regardless of scheduling.
    """
    info = info or analyze(model)
    space = CombinationSpace(model)
    if space.n_combinations > cap:
        raise ValueError(
            f"{space.n_combinations} combinations exceed the cap of {cap}")
    opts = opts or SolveOptions()

    def run_one(f: int):
        comb = space.combination(f)
        system = build_residual(model, fault, comb, info=info)
        outcome = solve(system, flat_start(system), opts)
        if not is_valid_equilibrium(system, outcome, comb.states):
            return None
        trace = IterationTrace(steps=[IterationStep(
            n_t=1, f=f, states=comb.states, converged=True,
            residual_norm=outcome.residual_norm,
            solver_iters=outcome.iters, next_states=comb.states)],
            termination="oracle")
        return OracleEntry(f=f, states=comb.states,
                           point=_equilibrium_from(system, outcome, 1, trace))

    fs = range(1, space.n_combinations + 1)
    n_workers = workers if workers is not None else min(8, space.n_combinations)
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(run_one, fs))
    else:
        results = [run_one(f) for f in fs]
    return [r for r in results if r is not None]
