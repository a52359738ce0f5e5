"""Ensemble descriptions shared by every analysis."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .trellis import GeneratorSpec


@dataclass(frozen=True)
class Coupled:
    m: int
    L: int = 100

    def __post_init__(self):
        if self.m < 1 or self.L < 1:
            raise ValueError(f"coupling needs m >= 1 and L >= 1, got m={self.m}, L={self.L}")


SPC = "ldpc"
Component = Union[str, GeneratorSpec]


@dataclass(frozen=True)
class EnsembleSpec:
    """(d_v, d_c)-regular single-edge-type ensemble.

    ``component`` is ``"ldpc"`` for single parity-check constraint nodes or a
    :class:`GeneratorSpec` for punctured convolutional constraint nodes.
    ``coupling`` is ``None`` for the uncoupled ensemble.
    """

    d_v: int
    d_c: int
    component: Component = SPC
    coupling: Coupled | None = None

    def __post_init__(self):
        if self.d_v < 2:
            raise ValueError(f"d_v must be >= 2, got {self.d_v}")
        if self.d_c <= self.d_v:
            raise ValueError(f"d_c must exceed d_v, got ({self.d_v},{self.d_c})")
        if self.component != SPC and not isinstance(self.component, GeneratorSpec):
            raise ValueError(f"unknown component {self.component!r}")

    @property
    def rate(self) -> float:
        return 1.0 - self.d_v / self.d_c

    @property
    def is_ldpc(self) -> bool:
        return self.component == SPC

    @property
    def states(self) -> str:
        return "LDPC" if self.is_ldpc else str(self.component.num_states)

    def uncoupled(self) -> "EnsembleSpec":
        return EnsembleSpec(self.d_v, self.d_c, self.component, None)

    def with_coupling(self, m: int, L: int = 100) -> "EnsembleSpec":
        return EnsembleSpec(self.d_v, self.d_c, self.component, Coupled(m, L))

    def label(self) -> str:
        comp = "ldpc" if self.is_ldpc else f"conv:{self.component}"
        coup = "uncoupled" if self.coupling is None else f"m={self.coupling.m},L={self.coupling.L}"
        return f"({self.d_v},{self.d_c}) {comp} {coup}"


def parse_ensemble(text: str) -> tuple[int, int]:
    try:
        dv, dc = (int(x) for x in text.split(","))
    except ValueError:
        raise ValueError(f"ensemble must look like 'dv,dc', got {text!r}") from None
    return dv, dc


def parse_component(text: str) -> Component:
    text = text.strip()
    if text.lower() in ("ldpc", "spc"):
        return SPC
    if text.startswith("conv:"):
        return GeneratorSpec.parse(text[5:])
    raise ValueError(f"component must be 'ldpc' or 'conv:NUM/DEN', got {text!r}")


def parse_coupling(text: str | None) -> Coupled | None:
    if text is None or text.strip().lower() in ("", "uncoupled", "none"):
        return None
    parts = [int(x) for x in text.split(",")]
    if len(parts) == 1:
        return Coupled(parts[0])
    if len(parts) == 2:
        return Coupled(parts[0], parts[1])
    raise ValueError(f"coupling must be 'm,L' or 'uncoupled', got {text!r}")


def make_spec(ensemble: str, component: str = "ldpc", coupling: str | None = None) -> EnsembleSpec:
    dv, dc = parse_ensemble(ensemble)
    return EnsembleSpec(dv, dc, parse_component(component), parse_coupling(coupling))


def component_text(spec: EnsembleSpec) -> str:
    return "ldpc" if spec.is_ldpc else f"conv:{spec.component}"
