"""Non-power-electronics element models.

Thevenin equivalent, slack bus, constant-power node and PV node. These
elements have a single operating state and contribute six real constraint
equations each; a Thevenin/slack may additionally carry the system
frequency equation when frequency is a solved unknown.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .converter import ResidualFn, SpecError, VscSpec
from .phasor import T_TO_PHASE, SequenceTriple


@dataclass(frozen=True)
class TheveninSpec:
    """Voltage source behind impedance; the bulk AC grid equivalent.

    ``droop=True`` adds the grid frequency characteristic
    w = w0 + k_omega_th * (p_con_th - p0_th) evaluated at the terminal bus.
    """

    name: str
    bus: str
    u_th: complex
    z_th: complex
    droop: bool = False
    k_omega_th: float = 0.0
    p0_th: float = 0.0

    def __post_init__(self):
        if self.z_th == 0:
            raise SpecError(f"thevenin {self.name!r}: z_th must be nonzero")
        if self.k_omega_th < 0:
            raise SpecError(f"thevenin {self.name!r}: k_omega_th must be non-negative")

    @property
    def kind(self) -> str:
        return "thevenin"


@dataclass(frozen=True)
class SlackSpec:
    name: str
    bus: str
    u_ref: complex

    @property
    def kind(self) -> str:
        return "slack"


@dataclass(frozen=True)
class PqNodeSpec:
    """Constant-power node tracking the same p+jq reference on each phase."""

    name: str
    bus: str
    p_ref: float
    q_ref: float

    @property
    def kind(self) -> str:
        return "pq_node"


@dataclass(frozen=True)
class PvNodeSpec:
    name: str
    bus: str
    u_ref: float
    p_ref: float

    @property
    def kind(self) -> str:
        return "pv_node"


NonPeSpec = Union[TheveninSpec, SlackSpec, PqNodeSpec, PvNodeSpec]
ElementSpec = Union[VscSpec, NonPeSpec]


def _phase_quantities(u: SequenceTriple, i: SequenceTriple):
    up = T_TO_PHASE @ u.as_array()
    ip = T_TO_PHASE @ i.as_array()
    return up, ip


def constraints(spec: NonPeSpec) -> list[tuple[str, ResidualFn]]:
    """Reference residual equations (six labelled real rows)."""
    rows: list[tuple[str, ResidualFn]] = []

    if isinstance(spec, TheveninSpec):
        def i_pos(u, i, w):
            return i.pos - (spec.u_th - u.pos) / spec.z_th

        def i_neg(u, i, w):
            return i.neg + u.neg / spec.z_th

        def i_zero(u, i, w):
            return i.zero + u.zero / spec.z_th

        for label, fn in (("i_pos", i_pos), ("i_neg", i_neg), ("i_zero", i_zero)):
            rows.append((label + ".re", lambda u, i, w, f=fn: f(u, i, w).real))
            rows.append((label + ".im", lambda u, i, w, f=fn: f(u, i, w).imag))

    elif isinstance(spec, SlackSpec):
        rows.append(("u_pos.re", lambda u, i, w: (u.pos - spec.u_ref).real))
        rows.append(("u_pos.im", lambda u, i, w: (u.pos - spec.u_ref).imag))
        rows.append(("u_neg.re", lambda u, i, w: u.neg.real))
        rows.append(("u_neg.im", lambda u, i, w: u.neg.imag))
        rows.append(("u_zero.re", lambda u, i, w: u.zero.real))
        rows.append(("u_zero.im", lambda u, i, w: u.zero.imag))

    elif isinstance(spec, PqNodeSpec):
        s_ref = complex(spec.p_ref, spec.q_ref)

        def phase_residual(u, i, w, ph):
            up, ip = _phase_quantities(u, i)
            if up[ph] == 0:
                return complex(np.inf, np.inf)
            return ip[ph] - np.conj(s_ref / up[ph])

        for ph, label in enumerate("abc"):
            rows.append((f"i_{label}.re", lambda u, i, w, p=ph: phase_residual(u, i, w, p).real))
            rows.append((f"i_{label}.im", lambda u, i, w, p=ph: phase_residual(u, i, w, p).imag))

    elif isinstance(spec, PvNodeSpec):
        def p_total(u, i, w):
            s = (u.pos * np.conj(i.pos) + u.neg * np.conj(i.neg)
                 + u.zero * np.conj(i.zero))
            return s.real

        rows.append(("p_total-p_ref", lambda u, i, w: p_total(u, i, w) - spec.p_ref))
        rows.append(("umag-ref", lambda u, i, w: abs(u.pos) - spec.u_ref))
        rows.append(("u_neg.re", lambda u, i, w: u.neg.real))
        rows.append(("u_neg.im", lambda u, i, w: u.neg.imag))
        rows.append(("u_zero.re", lambda u, i, w: u.zero.real))
        rows.append(("u_zero.im", lambda u, i, w: u.zero.imag))

    else:
        raise SpecError(f"unknown non-PE element {spec!r}")

    return rows


def frequency_residual(spec: ElementSpec, u: SequenceTriple, i: SequenceTriple,
                       omega: float, omega0: float) -> float:
    """Extra frequency row carried by the designated Thevenin/slack element."""
    if isinstance(spec, TheveninSpec) and spec.droop:
        p_th = (u.pos * np.conj(i.pos)).real + (u.neg * np.conj(i.neg)).real
        return omega - omega0 - spec.k_omega_th * (p_th - spec.p0_th)
    return omega - omega0
