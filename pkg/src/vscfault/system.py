"""Square residual systems for one saturation-state combination.

``build_residual`` turns (model, fault, combination) into a
:class:`PackedSystem`: a callable real residual function backed by the
compiled kernels, plus the bookkeeping needed to read solved quantities
back out of the unknown vector.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from . import kernels
from .converter import VscSpec, admissible_states
from .elements import PqNodeSpec, PvNodeSpec, SlackSpec, TheveninSpec
from .model import ModelError, ModelInfo, NetworkModel, analyze
from .network import NO_FAULT, FaultSpec, SequenceAdmittance, assemble
from .phasor import T_TO_PHASE, PowerElements, SequenceTriple, power_elements

STATE_CODE = {"USS": 0, "PSS": 1, "FSS": 2}
KIND_CODE = {"vsc": 0, "thevenin": 1, "slack": 2, "pq_node": 3, "pv_node": 4}
MODE_CODE = {"PQ": 0, "PV": 1, "GF": 2}


@dataclass(frozen=True)
class UnknownLayout:
    """Slot map of the real unknown vector."""

    nbus: int
    nelem: int
    omega_unknown: bool

    @property
    def n_unknowns(self) -> int:
        return 6 * self.nbus + 6 * self.nelem + (1 if self.omega_unknown else 0)

    def u_slot(self, bus_idx: int, seq: int) -> int:
        return 2 * (seq * self.nbus + bus_idx)

    def i_slot(self, elem_idx: int, seq: int) -> int:
        return 6 * self.nbus + 6 * elem_idx + 2 * seq

    def bus_voltage(self, x: np.ndarray, bus_idx: int) -> SequenceTriple:
        return SequenceTriple(*(complex(x[self.u_slot(bus_idx, s)],
                                        x[self.u_slot(bus_idx, s) + 1])
                                for s in range(3)))

    def element_current(self, x: np.ndarray, elem_idx: int) -> SequenceTriple:
        return SequenceTriple(*(complex(x[self.i_slot(elem_idx, s)],
                                        x[self.i_slot(elem_idx, s) + 1])
                                for s in range(3)))

    def omega(self, x: np.ndarray, omega0: float) -> float:
        return float(x[-1]) if self.omega_unknown else omega0


@dataclass(frozen=True)
class Combination:
    """One assignment of saturation states, numbered f in [1, F]."""

    f: int
    states: tuple[str, ...]


class CombinationSpace:
    """Mixed-radix bijection between f and per-converter state vectors.

    Converter order is declaration order; the first converter is the most
    significant digit.
    """

    def __init__(self, model: NetworkModel):
        self.state_lists = tuple(tuple(admissible_states(c)) for c in model.converters)
        self.radices = tuple(len(s) for s in self.state_lists)
        n = 1
        for r in self.radices:
            n *= r
        self.n_combinations = n

    def encode(self, states) -> int:
        states = tuple(states)
        if len(states) != len(self.state_lists):
            raise ValueError(f"expected {len(self.state_lists)} states, got {len(states)}")
        f = 0
        for st, opts in zip(states, self.state_lists):
            if st not in opts:
                raise ValueError(f"state {st!r} not admissible (options {opts})")
            f = f * len(opts) + opts.index(st)
        return f + 1

    def decode(self, f: int) -> tuple[str, ...]:
        if not 1 <= f <= self.n_combinations:
            raise ValueError(f"combination number {f} out of range [1, {self.n_combinations}]")
        rem = f - 1
        digits = []
        for r in reversed(self.radices):
            digits.append(rem % r)
            rem //= r
        return tuple(opts[d] for opts, d in zip(self.state_lists, reversed(digits)))

    def combination(self, arg) -> Combination:
        if isinstance(arg, int):
            return Combination(arg, self.decode(arg))
        return Combination(self.encode(arg), tuple(arg))

    def all_states(self):
        for states in product(*self.state_lists):
            yield Combination(self.encode(states), states)


@dataclass
class PackedSystem:
    """Residual function R(x) for one combination, kernel-backed."""

    model: NetworkModel
    fault: FaultSpec
    combination: Combination
    info: ModelInfo
    layout: UnknownLayout
    admittance: SequenceAdmittance
    kind: np.ndarray
    mode: np.ndarray
    state: np.ndarray
    busi: np.ndarray
    row_off: np.ndarray
    par: np.ndarray
    _tph: np.ndarray = field(default_factory=lambda: np.ascontiguousarray(T_TO_PHASE))

    def _args(self):
        return (self.admittance.matrix, self.kind, self.mode, self.state,
                self.busi, self.row_off, self.par, self._tph,
                self.layout.nbus, self.model.omega0, self.fault.active,
                self.info.freq_element, self.info.pin_element,
                self.layout.omega_unknown)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        out = np.empty(self.layout.n_unknowns, dtype=np.float64)
        kernels.eval_residuals(np.asarray(x, dtype=np.float64), out, *self._args())
        return out

    def jacobian(self, x: np.ndarray, step: float) -> tuple[np.ndarray, np.ndarray]:
        """Residual and forward-difference Jacobian at ``x``."""
        return kernels.fd_jacobian(np.asarray(x, dtype=np.float64), step, *self._args())

    # -- readback helpers -------------------------------------------------

    def bus_voltage(self, x, bus_id: str) -> SequenceTriple:
        return self.layout.bus_voltage(x, self.admittance.index[bus_id])

    def element_current(self, x, name: str) -> SequenceTriple:
        return self.layout.element_current(x, self._elem_index[name])

    def element_powers(self, x, name: str) -> PowerElements:
        spec = self.model.element(name)
        return power_elements(self.bus_voltage(x, spec.bus),
                              self.element_current(x, name))

    def omega(self, x) -> float:
        return self.layout.omega(x, self.model.omega0)

    def converter_states(self) -> dict[str, str]:
        return {self.model.converters[k].name: st
                for k, st in enumerate(self.combination.states)}

    @property
    def _elem_index(self) -> dict[str, int]:
        return {e.name: k for k, e in enumerate(self.model.elements)}


def build_residual(model: NetworkModel, fault: FaultSpec = NO_FAULT,
                   combination: Combination | None = None,
                   info: ModelInfo | None = None) -> PackedSystem:
    """Assemble the square residual system SE_f for one combination."""
    if info is None:
        info = analyze(model)
    space = CombinationSpace(model)
    if combination is None:
        combination = space.combination(tuple("USS" for _ in space.radices))
    elif combination.states != space.decode(combination.f):
        raise ModelError(f"combination {combination} inconsistent with model")

    if fault.active:
        missing = [c.name for c in model.converters
                   if c.mode == "PQ" and c.i_d0 is None]
        if missing:
            raise ModelError(
                "i_d0 required for PQ converters under fault (set it in the case "
                f"file or run the pre-fault solve): {', '.join(missing)}")

    adm = assemble(model.buses, model.branches, fault)
    nelem = len(model.elements)
    layout = UnknownLayout(nbus=adm.dimension, nelem=nelem,
                           omega_unknown=info.omega_unknown)

    kind = np.empty(nelem, dtype=np.int64)
    mode = np.full(nelem, -1, dtype=np.int64)
    state = np.zeros(nelem, dtype=np.int64)
    busi = np.empty(nelem, dtype=np.int64)
    row_off = np.empty(nelem, dtype=np.int64)
    par = np.zeros((nelem, kernels.NPAR), dtype=np.float64)

    conv_state = dict(zip(info.converter_indices, combination.states))
    off = 0
    for k, e in enumerate(model.elements):
        kind[k] = KIND_CODE[e.kind]
        busi[k] = adm.index[e.bus]
        row_off[k] = off
        nrows = 6
        if isinstance(e, VscSpec):
            mode[k] = MODE_CODE[e.mode]
            state[k] = STATE_CODE[conv_state[k]]
            u_ref = {"PQ": 0.0, "PV": e.u_ref_pv, "GF": e.u_ref_gf}[e.mode]
            par[k, :9] = (e.i_max, e.p_disp, e.q_disp, u_ref or 0.0, e.k_isp,
                          e.u_ref_gs, e.i_d0 if e.i_d0 is not None else 0.0,
                          e.k_omega, e.p0)
            if k == info.pin_element:
                nrows += 1
        elif isinstance(e, TheveninSpec):
            par[k, :7] = (e.u_th.real, e.u_th.imag, e.z_th.real, e.z_th.imag,
                          e.k_omega_th, e.p0_th, 1.0 if e.droop else 0.0)
            if k == info.freq_element:
                nrows += 1
        elif isinstance(e, SlackSpec):
            par[k, :2] = (e.u_ref.real, e.u_ref.imag)
            if k == info.freq_element:
                nrows += 1
        elif isinstance(e, PqNodeSpec):
            par[k, :2] = (e.p_ref, e.q_ref)
        elif isinstance(e, PvNodeSpec):
            par[k, :2] = (e.u_ref, e.p_ref)
        else:
            raise ModelError(f"unsupported element {e!r}")
        off += nrows

    n_rows = 6 * adm.dimension + off
    assert n_rows == layout.n_unknowns, (
        f"residual/unknown mismatch: {n_rows} rows vs {layout.n_unknowns} unknowns")

    return PackedSystem(model=model, fault=fault, combination=combination,
                        info=info, layout=layout, admittance=adm,
                        kind=kind, mode=mode, state=state, busi=busi,
                        row_off=row_off, par=par)
