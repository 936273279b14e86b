"""Seeded synthetic series generators standing in for the real data sets.

Normal deviates come from an explicit Box-Muller transform of uniforms drawn
from a Philox counter-based generator, so a (kind, parameters, seed) triple
reproduces bit-identical series on any platform.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .pipeline import RawSeries

KINDS = ("RANDOM_WALK", "AR1", "SINE", "SINE_PLUS_NOISE")


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    length: int
    seed: int
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ConfigurationError(
                f"unknown generator kind {self.kind!r}; expected one of {KINDS}"
            )
        if self.length < 1:
            raise ConfigurationError("length must be at least 1")
        allowed = {
            "RANDOM_WALK": {"drift", "sigma", "start"},
            "AR1": {"phi", "sigma", "start"},
            "SINE": {"period", "amplitude", "sigma"},
            "SINE_PLUS_NOISE": {"period", "amplitude", "sigma"},
        }[self.kind]
        unknown = set(self.params) - allowed
        if unknown:
            raise ConfigurationError(
                f"unknown parameter(s) {sorted(unknown)} for {self.kind}"
            )
        p = self.params
        if p.get("sigma", 0.0) < 0:
            raise ConfigurationError("sigma must be non-negative")
        if self.kind == "AR1" and not abs(p.get("phi", 0.7)) < 1:
            raise ConfigurationError("AR1 requires |phi| < 1")
        if self.kind in ("SINE", "SINE_PLUS_NOISE") and p.get("period", 16) <= 0:
            raise ConfigurationError("period must be positive")
        if self.kind == "SINE_PLUS_NOISE" and p.get("sigma", 0.1) <= 0:
            raise ConfigurationError("SINE_PLUS_NOISE requires sigma > 0")


def standard_normals(seed: int, count: int) -> np.ndarray:
    """Box-Muller on Philox uniforms; bit-reproducible for a given seed."""
    gen = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    u1 = gen.random(count)
    u2 = gen.random(count)
    return np.sqrt(-2.0 * np.log1p(-u1)) * np.cos(2.0 * np.pi * u2)


def generate(spec: GeneratorSpec) -> RawSeries:
    """Materialize the series described by ``spec`` with integer timestamps."""
    n = spec.length
    p = spec.params
    eps = standard_normals(spec.seed, n)
    if spec.kind == "RANDOM_WALK":
        drift = p.get("drift", 0.0)
        sigma = p.get("sigma", 1.0)
        values = np.empty(n)
        values[0] = p.get("start", 0.0)
        for t in range(1, n):
            values[t] = values[t - 1] + drift + sigma * eps[t]
    elif spec.kind == "AR1":
        phi = p.get("phi", 0.7)
        sigma = p.get("sigma", 0.1)
        values = np.empty(n)
        values[0] = p.get("start", 0.0)
        for t in range(1, n):
            values[t] = phi * values[t - 1] + sigma * eps[t]
    else:
        period = p.get("period", 16)
        amplitude = p.get("amplitude", 1.0)
        sigma = p.get("sigma", 0.1 if spec.kind == "SINE_PLUS_NOISE" else 0.0)
        t = np.arange(n)
        values = amplitude * np.sin(2.0 * np.pi * t / period) + sigma * eps

    name = f"{spec.kind.lower()}_seed{spec.seed}"
    return RawSeries(name=name, timestamps=list(range(n)), values=values)
