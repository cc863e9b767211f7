"""Test functions for Laplace functionals: ramps and plateaus.

Both shapes are continuous, non-negative, bounded, and vanish left of the
edge ``a``, which is what Laplace-functional comparisons need.  A ramp
rises from 0 at ``a`` with slope ``lam`` up to ``height``; a plateau is a
ramp multiplied by a mirrored ramp falling back to 0 at ``b``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class TestFunction:
    a: float                 # left support edge
    lam: float               # rise slope
    height: float            # plateau value
    b: float = math.inf      # right shoulder; inf means pure ramp
    name: str = ""

    def __post_init__(self):
        if not (self.lam > 0 and self.height > 0):
            raise ValueError("slope and height must be positive")
        if self.b <= self.a:
            raise ValueError("right shoulder must lie right of the left edge")
        if not self.name:
            label = f"ramp(a={self.a:g},lam={self.lam:g},mu={self.height:g})"
            if math.isfinite(self.b):
                label = (
                    f"plateau(a={self.a:g},b={self.b:g},"
                    f"lam={self.lam:g},mu={self.height:g})"
                )
            object.__setattr__(self, "name", label)

    @property
    def support_left(self) -> float:
        return self.a

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        y = np.clip(self.lam * (x - self.a), 0.0, 1.0)
        if math.isfinite(self.b):
            y = y * np.clip(self.lam * (self.b - x), 0.0, 1.0)
        return self.height * y

    def shifted(self, y: float) -> "TestFunction":
        """The function x -> phi(x + y) (support edge moves to a - y)."""
        b = self.b - y if math.isfinite(self.b) else math.inf
        return replace(self, a=self.a - y, b=b, name="")


def ramp(a: float, lam: float = 1.0, height: float = 1.0) -> TestFunction:
    return TestFunction(a=a, lam=lam, height=height)


def plateau(a: float, b: float, lam: float = 1.0, height: float = 1.0) -> TestFunction:
    return TestFunction(a=a, lam=lam, height=height, b=b)


def default_battery(scale: float = 1.0) -> list[TestFunction]:
    """Twelve functions mixing ramps and plateaus, heights {0.5, 1, 2}.

    Edges span [-2, 1] scaled by ``scale`` (pass 1/alpha so the battery
    tracks the natural length scale of an exponential-intensity process).
    """
    heights = (0.5, 1.0, 2.0)
    slopes = (1.0, 2.0, 0.7)
    battery = []
    for i, a in enumerate((-2.0, -1.0)):
        for j, mu in enumerate(heights):
            battery.append(ramp(a * scale, slopes[(i + j) % 3], mu))
    for i, a in enumerate((-1.5, 0.0)):
        for j, mu in enumerate(heights):
            battery.append(
                plateau(a * scale, (a + 2.0) * scale, slopes[(i + j + 1) % 3], mu)
            )
    return battery
