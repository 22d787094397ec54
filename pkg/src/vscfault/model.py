"""Network model container, validation and structural analysis.

``analyze`` decides the degrees of freedom that depend on the element mix:
whether the system frequency is a solved unknown, which element carries the
extra frequency equation, and which grid-forming converter (if any) pins
the voltage angle reference of an island without a stiff source.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .converter import VscSpec, admissible_states
from .elements import ElementSpec, PqNodeSpec, PvNodeSpec, SlackSpec, TheveninSpec
from .network import Branch, Bus


class ModelError(ValueError):
    """One or more model validation failures; message lists all of them."""


@dataclass
class NetworkModel:
    name: str
    buses: list[Bus]
    branches: list[Branch]
    elements: list[ElementSpec]
    omega0: float = 1.0

    def bus_index(self) -> dict[str, int]:
        return {b.id: k for k, b in enumerate(self.buses)}

    def element(self, name: str) -> ElementSpec:
        for e in self.elements:
            if e.name == name:
                return e
        raise KeyError(name)

    @property
    def converters(self) -> list[VscSpec]:
        return [e for e in self.elements if isinstance(e, VscSpec)]


@dataclass
class ModelInfo:
    """Derived structure of a validated model."""

    converter_indices: list[int]
    radices: list[int]
    n_combinations: int
    omega_unknown: bool
    freq_element: int  # element index carrying the frequency row, or -1
    pin_element: int   # GF element pinning the angle reference, or -1
    islands: list[set[str]] = field(default_factory=list)


def _islands(model: NetworkModel) -> list[set[str]]:
    ids = [b.id for b in model.buses]
    parent = {b: b for b in ids}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for br in model.branches:
        if br.to_bus is not None and br.from_bus in parent and br.to_bus in parent:
            parent[find(br.from_bus)] = find(br.to_bus)
    groups: dict[str, set[str]] = {}
    for b in ids:
        groups.setdefault(find(b), set()).add(b)
    return list(groups.values())


def analyze(model: NetworkModel) -> ModelInfo:
    """Validate the model and derive its solve structure.

    Raises :class:`ModelError` listing every violation found.
    """
    errors: list[str] = []

    if not model.buses:
        raise ModelError("model has no buses")
    ids = [b.id for b in model.buses]
    if len(set(ids)) != len(ids):
        errors.append("duplicate bus ids")
    names = [e.name for e in model.elements]
    if len(set(names)) != len(names):
        errors.append("duplicate element names")
    if not model.elements:
        errors.append("model has no elements")

    bus_set = set(ids)
    for br in model.branches:
        if br.from_bus not in bus_set:
            errors.append(f"branch {br.from_bus}-{br.to_bus}: unknown bus {br.from_bus!r}")
        if br.to_bus is not None and br.to_bus not in bus_set:
            errors.append(f"branch {br.from_bus}-{br.to_bus}: unknown bus {br.to_bus!r}")
    for e in model.elements:
        if e.bus not in bus_set:
            errors.append(f"element {e.name!r}: unknown bus {e.bus!r}")

    if errors:
        raise ModelError("; ".join(errors))

    islands = _islands(model)
    island_of = {b: k for k, isl in enumerate(islands) for b in isl}

    def is_angle_source(e):
        return isinstance(e, (TheveninSpec, SlackSpec)) or (isinstance(e, VscSpec) and e.mode == "GF")

    for k, isl in enumerate(islands):
        if not any(is_angle_source(e) for e in model.elements if e.bus in isl):
            errors.append(f"island {sorted(isl)} has no angle reference (thevenin, slack or GF)")

    conv_idx = [k for k, e in enumerate(model.elements) if isinstance(e, VscSpec)]
    radices = [len(admissible_states(model.elements[k])) for k in conv_idx]
    n_comb = 1
    for r in radices:
        n_comb *= r

    gf_idx = [k for k in conv_idx if model.elements[k].mode == "GF"]
    droop_thev = [k for k, e in enumerate(model.elements)
                  if isinstance(e, TheveninSpec) and e.droop]
    omega_unknown = bool(gf_idx) or bool(droop_thev)

    freq_element = -1
    pin_element = -1
    if omega_unknown:
        coupled_islands = {island_of[model.elements[k].bus] for k in gf_idx + droop_thev}
        if len(coupled_islands) > 1:
            errors.append("grid-forming/droop elements span multiple islands")
        else:
            isl = coupled_islands.pop()
            stiff = [k for k, e in enumerate(model.elements)
                     if isinstance(e, (TheveninSpec, SlackSpec)) and island_of[e.bus] == isl]
            droop_stiff = [k for k in stiff if isinstance(model.elements[k], TheveninSpec)
                           and model.elements[k].droop]
            if droop_stiff:
                freq_element = droop_stiff[0]
            elif stiff:
                freq_element = stiff[0]
            else:
                pin_element = gf_idx[0]

            # at most one element may pin the frequency rigidly
            rigid = [k for k in gf_idx if model.elements[k].k_omega == 0.0]
            if freq_element >= 0:
                e = model.elements[freq_element]
                if not (isinstance(e, TheveninSpec) and e.droop and e.k_omega_th != 0.0):
                    rigid.append(freq_element)
            if len(rigid) > 1:
                errors.append(
                    "more than one element pins the frequency rigidly "
                    f"({', '.join(model.elements[k].name for k in rigid)}); "
                    "give all but one a nonzero frequency droop gain")
    else:
        # without a frequency unknown a GF converter cannot coexist with a
        # stiff source: its voltage angle would be undetermined
        pass

    if errors:
        raise ModelError("; ".join(errors))

    return ModelInfo(
        converter_indices=conv_idx,
        radices=radices,
        n_combinations=n_comb,
        omega_unknown=omega_unknown,
        freq_element=freq_element,
        pin_element=pin_element,
        islands=islands,
    )
