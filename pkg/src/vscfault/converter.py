"""Voltage-source-converter equivalent models.

Each converter contributes six real constraint equations per saturation
state. Negative and zero sequence current are always forced to zero (three
wire converter, symmetrical injection); the remaining two real equations
depend on the control mode (PQ, PV, grid-forming) and on the saturation
state (USS, PSS, FSS).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .phasor import SequenceTriple

USS = "USS"
PSS = "PSS"
FSS = "FSS"

MODES = ("PQ", "PV", "GF")

#: residual over (bus voltage, injected current, frequency)
ResidualFn = Callable[[SequenceTriple, SequenceTriple, float], float]


class SpecError(ValueError):
    """Inconsistent element specification."""


@dataclass(frozen=True)
class VscSpec:
    name: str
    bus: str
    mode: str
    i_max: float
    p_disp: float = 0.0
    q_disp: float = 0.0
    u_ref_pv: Optional[float] = None
    u_ref_gf: Optional[float] = None
    k_omega: float = 0.0
    p0: float = 0.0
    k_isp: float = 0.0
    u_ref_gs: float = 1.0
    i_d0: Optional[float] = None  # frozen pre-fault reactive current

    def __post_init__(self):
        if self.mode not in MODES:
            raise SpecError(f"vsc {self.name!r}: unknown mode {self.mode!r}")
        if self.i_max <= 0:
            raise SpecError(f"vsc {self.name!r}: i_max must be positive")
        if self.k_isp < 0 or self.k_omega < 0:
            raise SpecError(f"vsc {self.name!r}: droop gains must be non-negative")
        if self.mode == "PV" and self.u_ref_pv is None:
            raise SpecError(f"vsc {self.name!r}: PV mode requires u_ref_pv")
        if self.mode == "GF" and self.u_ref_gf is None:
            raise SpecError(f"vsc {self.name!r}: GF mode requires u_ref_gf")

    @property
    def kind(self) -> str:
        return "vsc"


def admissible_states(spec: VscSpec) -> list[str]:
    """Saturation states a converter can take; PSS does not apply to GF."""
    if spec.mode == "GF":
        return [USS, FSS]
    return [USS, PSS, FSS]


def q_reference(spec: VscSpec, u_pos_mag: float, fault_active: bool) -> float:
    """Reactive power reference; voltage-droop grid support during a fault."""
    if not fault_active:
        return spec.q_disp
    if spec.i_d0 is None:
        raise SpecError(f"vsc {spec.name!r}: i_d0 required for fault-mode reference")
    return u_pos_mag * (spec.i_d0 + spec.k_isp * (spec.u_ref_gs - u_pos_mag))


def _p_con(u: SequenceTriple, i: SequenceTriple) -> float:
    return (u.pos * np.conj(i.pos)).real + (u.neg * np.conj(i.neg)).real


def _q_con(u: SequenceTriple, i: SequenceTriple) -> float:
    return (u.pos * np.conj(i.pos)).imag + (u.neg * np.conj(i.neg)).imag


def constraints(spec: VscSpec, state: str, omega0: float = 1.0,
                fault_active: bool = True) -> list[tuple[str, ResidualFn]]:
    """Reference (unpacked) residual equations for one (mode, state) pair.

    Returns exactly six labelled residual functions. The packed kernel in
    :mod:`vscfault.kernels` evaluates the same equations; tests compare the
    two row by row.
    """
    if state not in admissible_states(spec):
        raise SpecError(f"vsc {spec.name!r}: state {state} not admissible for {spec.mode}")

    rows: list[tuple[str, ResidualFn]] = []

    if spec.mode == "PQ":
        if state == USS:
            rows.append(("p_con-p_ref", lambda u, i, w: _p_con(u, i) - spec.p_disp))
            rows.append(("q_con-q_ref", lambda u, i, w: _q_con(u, i) - q_reference(spec, abs(u.pos), fault_active)))
        elif state == PSS:
            rows.append(("q_con-q_ref", lambda u, i, w: _q_con(u, i) - q_reference(spec, abs(u.pos), fault_active)))
            rows.append(("imag-limit", lambda u, i, w: abs(i.pos) - spec.i_max))
        else:
            rows.append(("p_con", lambda u, i, w: _p_con(u, i)))
            rows.append(("imag-limit", lambda u, i, w: abs(i.pos) - spec.i_max))
    elif spec.mode == "PV":
        if state == USS:
            rows.append(("p_con-p_disp", lambda u, i, w: _p_con(u, i) - spec.p_disp))
            rows.append(("umag-ref", lambda u, i, w: abs(u.pos) - spec.u_ref_pv))
        elif state == PSS:
            rows.append(("umag-ref", lambda u, i, w: abs(u.pos) - spec.u_ref_pv))
            rows.append(("imag-limit", lambda u, i, w: abs(i.pos) - spec.i_max))
        else:
            rows.append(("p_con", lambda u, i, w: _p_con(u, i)))
            rows.append(("imag-limit", lambda u, i, w: abs(i.pos) - spec.i_max))
    else:  # GF
        if state == USS:
            rows.append(("umag-ref", lambda u, i, w: abs(u.pos) - spec.u_ref_gf))
        else:
            rows.append(("imag-limit", lambda u, i, w: abs(i.pos) - spec.i_max))
        rows.append(("freq-droop",
                     lambda u, i, w: w - omega0 + spec.k_omega * (_p_con(u, i) - spec.p0)))

    rows.append(("i_neg.re", lambda u, i, w: i.neg.real))
    rows.append(("i_neg.im", lambda u, i, w: i.neg.imag))
    rows.append(("i_zero.re", lambda u, i, w: i.zero.real))
    rows.append(("i_zero.im", lambda u, i, w: i.zero.imag))
    return rows
