"""Sequence-domain admittance assembly and fault stamping.

The admittance matrix is dense with shape (3D, 3D) for D buses, ordered as
three D-sized blocks: positive, negative, zero sequence. Passive branches
stamp each sequence block independently; unbalanced faults are stamped in
the phase domain and transformed, which couples the sequence blocks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .phasor import T_TO_PHASE, T_TO_SEQ, PhaseTriple, SequenceTriple, to_phase

GROUND = None  # branch endpoint sentinel

FAULT_KINDS = ("3p2g", "p2p", "1p2g", "none")


class NetworkError(ValueError):
    """Invalid network description (unknown bus, zero impedance, ...)."""


@dataclass(frozen=True)
class Bus:
    id: str
    wiring: str = "four-wire"  # "three-wire" | "four-wire"; annotation only

    def __post_init__(self):
        if self.wiring not in ("three-wire", "four-wire"):
            raise NetworkError(f"bus {self.id!r}: unknown wiring {self.wiring!r}")


@dataclass(frozen=True)
class Branch:
    """Passive series element between two buses, or a shunt to ground.

    ``z_zero=None`` means the zero-sequence path is open (three-wire segment
    or a blocking transformer winding).
    """

    from_bus: str
    to_bus: Optional[str]  # None = ground
    z_pos: complex
    z_neg: complex
    z_zero: Optional[complex]

    def __post_init__(self):
        for name, z in (("z_pos", self.z_pos), ("z_neg", self.z_neg)):
            if z == 0:
                raise NetworkError(f"branch {self.from_bus}-{self.to_bus}: {name} is zero")
        if self.z_zero == 0:
            raise NetworkError(f"branch {self.from_bus}-{self.to_bus}: z_zero is zero (use None for open)")


@dataclass(frozen=True)
class FaultSpec:
    bus: str
    kind: str  # "3p2g" | "p2p" | "1p2g" | "none"
    z_ft: complex = 0.0

    def __post_init__(self):
        if self.kind not in FAULT_KINDS:
            raise NetworkError(f"unknown fault kind {self.kind!r}")
        if self.kind != "none" and self.z_ft == 0:
            raise NetworkError("fault impedance must be nonzero")

    @property
    def active(self) -> bool:
        return self.kind != "none"


NO_FAULT = FaultSpec(bus="", kind="none")


@dataclass
class SequenceAdmittance:
    """Assembled 3D x 3D sequence admittance matrix."""

    bus_ids: list[str]
    matrix: np.ndarray  # complex, shape (3D, 3D)
    index: dict[str, int] = field(init=False)

    def __post_init__(self):
        self.index = {b: k for k, b in enumerate(self.bus_ids)}

    @property
    def dimension(self) -> int:
        return len(self.bus_ids)

    def block(self, s_row: int, s_col: int) -> np.ndarray:
        """Sequence block; 0=positive, 1=negative, 2=zero."""
        d = self.dimension
        return self.matrix[s_row * d:(s_row + 1) * d, s_col * d:(s_col + 1) * d]


def assemble(buses: list[Bus], branches: list[Branch],
             fault: FaultSpec = NO_FAULT) -> SequenceAdmittance:
    """Stamp all passive branches (and the fault, if active) into Y."""
    if not buses:
        raise NetworkError("at least one bus is required")
    ids = [b.id for b in buses]
    if len(set(ids)) != len(ids):
        raise NetworkError("duplicate bus ids")
    idx = {b: k for k, b in enumerate(ids)}
    d = len(ids)
    y = np.zeros((3 * d, 3 * d), dtype=complex)

    for br in branches:
        if br.from_bus not in idx:
            raise NetworkError(f"branch references unknown bus {br.from_bus!r}")
        if br.to_bus is not None and br.to_bus not in idx:
            raise NetworkError(f"branch references unknown bus {br.to_bus!r}")
        i = idx[br.from_bus]
        j = idx[br.to_bus] if br.to_bus is not None else None
        for s, z in enumerate((br.z_pos, br.z_neg, br.z_zero)):
            if z is None:
                continue  # open zero-sequence path
            g = 1.0 / z
            a = s * d + i
            y[a, a] += g
            if j is not None:
                b = s * d + j
                y[b, b] += g
                y[a, b] -= g
                y[b, a] -= g

    if fault.active:
        if fault.bus not in idx:
            raise NetworkError(f"fault references unknown bus {fault.bus!r}")
        stamp = fault_stamp(fault)
        k = idx[fault.bus]
        for s in range(3):
            for t in range(3):
                y[s * d + k, t * d + k] += stamp[s, t]

    return SequenceAdmittance(bus_ids=ids, matrix=y)


def fault_stamp(fault: FaultSpec) -> np.ndarray:
    """3x3 sequence-domain admittance block of one fault.

    Built in the phase domain (3p2g: y_f from each phase to ground; p2p:
    y_f between phases c and a; 1p2g: y_f from phase a to ground) and
    transformed with the Fortescue pair.
    """
    if not fault.active:
        raise NetworkError("fault_stamp requires an active fault")
    y_f = 1.0 / fault.z_ft
    if fault.kind == "3p2g":
        y_ph = y_f * np.eye(3, dtype=complex)
    elif fault.kind == "p2p":
        y_ph = y_f * np.array([[1, 0, -1], [0, 0, 0], [-1, 0, 1]], dtype=complex)
    else:  # 1p2g
        y_ph = y_f * np.array([[1, 0, 0], [0, 0, 0], [0, 0, 0]], dtype=complex)
    return T_TO_SEQ @ y_ph @ T_TO_PHASE


def sequence_to_phase_voltages(bus_voltages: dict[str, SequenceTriple]) -> dict[str, PhaseTriple]:
    """Per-bus natural-frame voltages of a solved point."""
    return {bus: to_phase(u) for bus, u in bus_voltages.items()}
