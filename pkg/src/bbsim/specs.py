"""Serializable behavior-model specifications and prediction configuration.

A BehaviorSpec is plain data (kind + named parameters) so scenarios and
databases can be stored, hashed and rebuilt bit-identically. Model classes
register a factory per kind; ``build_behavior`` turns a spec back into a
live model instance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Union

ParamValue = Union[float, int, str, bool, tuple]


@dataclass(frozen=True)
class BehaviorSpec:
    kind: str
    params: Mapping[str, ParamValue] = field(default_factory=dict)
    prediction: Optional["PredictionConfig"] = None

    def __post_init__(self):
        object.__setattr__(self, "params", dict(self.params))

    def with_params(self, **updates) -> "BehaviorSpec":
        merged = dict(self.params)
        merged.update(updates)
        return BehaviorSpec(self.kind, merged, self.prediction)


@dataclass(frozen=True)
class PredictionConfig:
    """How an observing agent models everyone else.

    ``parameter_perturbation`` holds multiplicative scale factors applied to
    matching numeric parameters of the configured model specs.
    """

    default_model: BehaviorSpec
    overrides: Mapping[int, BehaviorSpec] = field(default_factory=dict)
    parameter_perturbation: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "overrides", dict(self.overrides))
        object.__setattr__(self, "parameter_perturbation", dict(self.parameter_perturbation))
        for name, scale in self.parameter_perturbation.items():
            if not scale > 0.0:
                raise ValueError(f"perturbation scale for {name!r} must be > 0")

    def model_spec_for(self, agent_id: int) -> BehaviorSpec:
        spec = self.overrides.get(agent_id, self.default_model)
        if not self.parameter_perturbation:
            return spec
        params = dict(spec.params)
        for name, scale in self.parameter_perturbation.items():
            value = params.get(name)
            if isinstance(value, (int, float)) and not isinstance(value, bool):
                params[name] = value * scale
        return BehaviorSpec(spec.kind, params, spec.prediction)


_REGISTRY: dict[str, Callable[[BehaviorSpec], object]] = {}


def register_behavior_kind(kind: str, factory: Callable[[BehaviorSpec], object]) -> None:
    _REGISTRY[kind] = factory


def build_behavior(spec: BehaviorSpec):
    """Construct a live behavior model from its spec."""
    try:
        factory = _REGISTRY[spec.kind]
    except KeyError:
        raise ValueError(f"unknown behavior kind {spec.kind!r}") from None
    return factory(spec)


DEFAULT_PREDICTION = PredictionConfig(BehaviorSpec("const_vel"))
