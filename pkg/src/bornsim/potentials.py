"""Named 1-D potentials with analytic gradients."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class PotentialSpec:
    """One of free, harmonic, double_well, cosine.

    harmonic:    V = 0.5 * m * omega^2 * x^2        params: m, omega
    double_well: V = a * (x^2 - b^2)^2              params: a, b
    cosine:      V = amplitude * cos(k * x)         params: amplitude, k
    """

    name: str
    params: dict = field(default_factory=dict)

    _NAMES = ("free", "harmonic", "double_well", "cosine")

    def __post_init__(self):
        if self.name not in self._NAMES:
            raise ValueError(f"unknown potential {self.name!r}; expected one of {self._NAMES}")

    def value(self, x):
        x = np.asarray(x, dtype=float)
        p = self.params
        if self.name == "free":
            return np.zeros_like(x)
        if self.name == "harmonic":
            return 0.5 * p["m"] * p["omega"] ** 2 * x**2
        if self.name == "double_well":
            return p["a"] * (x**2 - p["b"] ** 2) ** 2
        return p["amplitude"] * np.cos(p["k"] * x)

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        p = self.params
        if self.name == "free":
            return np.zeros_like(x)
        if self.name == "harmonic":
            return p["m"] * p["omega"] ** 2 * x
        if self.name == "double_well":
            return 4.0 * p["a"] * x * (x**2 - p["b"] ** 2)
        return -p["amplitude"] * p["k"] * np.sin(p["k"] * x)
