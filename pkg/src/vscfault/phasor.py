"""Phasor arithmetic, symmetrical-component transforms and power decomposition.

All quantities are per-unit complex phasors. Sequence components follow the
rotation operator alpha = exp(-2j*pi/3), so the balanced positive-sequence
phase set is (1, alpha**2, alpha).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

ALPHA = complex(-0.5, -math.sqrt(3.0) / 2.0)
"""Rotation operator exp(-2j*pi/3)."""

#: phase -> sequence matrix (rows: positive, negative, zero)
T_TO_SEQ = np.array(
    [
        [1.0, ALPHA, ALPHA**2],
        [1.0, ALPHA**2, ALPHA],
        [1.0, 1.0, 1.0],
    ],
    dtype=complex,
) / 3.0

#: sequence -> phase matrix, exact inverse of T_TO_SEQ
T_TO_PHASE = np.array(
    [
        [1.0, 1.0, 1.0],
        [ALPHA**2, ALPHA, 1.0],
        [ALPHA, ALPHA**2, 1.0],
    ],
    dtype=complex,
)


class SequenceTriple(NamedTuple):
    """Positive, negative and zero sequence phasors of one quantity."""

    pos: complex
    neg: complex
    zero: complex

    def as_array(self) -> np.ndarray:
        return np.array(self, dtype=complex)


class PhaseTriple(NamedTuple):
    """Natural-frame phasors of one three-phase quantity."""

    a: complex
    b: complex
    c: complex

    def as_array(self) -> np.ndarray:
        return np.array(self, dtype=complex)


def from_polar(mag: float, angle_deg: float) -> complex:
    return cmath.rect(mag, math.radians(angle_deg))


def magnitude(x: complex) -> float:
    return abs(x)


def angle_deg(x: complex) -> float:
    """Phase angle in degrees, in (-180, 180]."""
    a = math.degrees(cmath.phase(x))
    if a <= -180.0:
        a += 360.0
    return a


def to_sequence(x: PhaseTriple) -> SequenceTriple:
    """Fortescue transform of a phase triple."""
    s = T_TO_SEQ @ x.as_array()
    return SequenceTriple(s[0], s[1], s[2])


def to_phase(x: SequenceTriple) -> PhaseTriple:
    """Inverse Fortescue transform of a sequence triple."""
    p = T_TO_PHASE @ x.as_array()
    return PhaseTriple(p[0], p[1], p[2])


@dataclass(frozen=True)
class PowerElements:
    """Constant and double-frequency power components of one element.

    ``p_con``/``q_con`` are the constant parts of the instantaneous three
    phase active/reactive power; the ``*_cos``/``*_sin`` parts multiply
    cos(2wt)/sin(2wt). Zero-sequence voltage and current never enter.
    """

    p_con: float
    p_cos: float
    p_sin: float
    q_con: float
    q_cos: float
    q_sin: float
    p_con_pos: float
    p_con_neg: float
    q_con_pos: float
    q_con_neg: float


def power_elements(u: SequenceTriple, i: SequenceTriple) -> PowerElements:
    """Decompose the power exchange for voltage ``u`` and injected current ``i``.

    The constant parts are Re/Im of u*conj(i) summed over positive and
    negative sequence. The oscillating parts come from the cross product
    c = u_pos*i_neg + u_neg*i_pos, the 2w complex amplitude of the
    instantaneous power.
    """
    s_pos = u.pos * np.conj(i.pos)
    s_neg = u.neg * np.conj(i.neg)
    cross = u.pos * i.neg + u.neg * i.pos
    return PowerElements(
        p_con=s_pos.real + s_neg.real,
        p_cos=cross.real,
        p_sin=-cross.imag,
        q_con=s_pos.imag + s_neg.imag,
        q_cos=cross.imag,
        q_sin=cross.real,
        p_con_pos=s_pos.real,
        p_con_neg=s_neg.real,
        q_con_pos=s_pos.imag,
        q_con_neg=s_neg.imag,
    )
