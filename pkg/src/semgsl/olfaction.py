"""Reference olfaction backend: a Bayes filter over source cells fed by binary hits.

Any GSL method can take its place as long as it satisfies
:class:`OlfactionEstimator`; the fusion code only ever sees ``current()``.

Wind direction is the direction the air moves *toward* (downwind), in
radians counter-clockwise from +x.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import numpy as np

from .core import Grid2D, entropy, normalize_log
from .errors import AllZeroError


@dataclass(frozen=True)
class HitModel:
    """Probability of a hit at a point given the source position.

    ``p_fa + (p_d - p_fa) * exp(-d^2 / 2 sigma_r^2) * exp(-dtheta^2 / 2 sigma_theta^2)``,
    where d is the source-to-sensor distance and dtheta the angle between the
    source-to-sensor vector and the downwind direction.
    """

    p_d: float = 0.9
    p_fa: float = 0.05
    sigma_r: float = 3.0
    sigma_theta: float = 0.6

    def __post_init__(self):
        if not 0.0 <= self.p_fa <= self.p_d <= 1.0:
            raise ValueError("need 0 <= p_fa <= p_d <= 1")
        if self.sigma_r <= 0 or self.sigma_theta <= 0:
            raise ValueError("sigma_r and sigma_theta must be positive")


@dataclass(frozen=True)
class HitReading:
    hit: bool
    wind_direction: float = 0.0
    wind_speed: float = 0.0

    def __post_init__(self):
        if self.wind_speed < 0:
            raise ValueError("wind speed must be non-negative")


def _wrap(a):
    return (np.asarray(a) + np.pi) % (2 * np.pi) - np.pi


def hit_likelihood_field(sources, x, wind_direction, wind_speed, model: HitModel = HitModel()) -> np.ndarray:
    """Vectorized p(hit at x | source at each row of ``sources``)."""
    src = np.atleast_2d(np.asarray(sources, dtype=np.float64))
    delta = np.asarray(x, dtype=np.float64)[None, :] - src
    d2 = (delta**2).sum(axis=1)
    radial = np.exp(-d2 / (2 * model.sigma_r**2))
    if wind_speed > 0:
        dtheta = _wrap(np.arctan2(delta[:, 1], delta[:, 0]) - wind_direction)
        angular = np.where(d2 > 0, np.exp(-(dtheta**2) / (2 * model.sigma_theta**2)), 1.0)
    else:
        angular = np.ones_like(radial)
    p = model.p_fa + (model.p_d - model.p_fa) * radial * angular
    return np.clip(p, model.p_fa, model.p_d)


def hit_likelihood(source, x, wind_direction, wind_speed, model: HitModel = HitModel()) -> float:
    """p(hit at x | source at ``source``); both positions in meters."""
    return float(hit_likelihood_field([source], x, wind_direction, wind_speed, model)[0])


@runtime_checkable
class OlfactionEstimator(Protocol):
    def update(self, position, reading: HitReading) -> None: ...

    def current(self) -> np.ndarray: ...

    def expected_gain(self, position) -> float: ...


class HitBayesFilter:
    """Grid Bayes filter over the source cell driven by :class:`HitReading` events."""

    def __init__(self, grid: Grid2D, model: HitModel = HitModel()):
        self.grid = grid
        self.model = model
        self._log_w = np.where(grid.free_mask, 0.0, -np.inf)
        self._wind = (0.0, 0.0)

    def likelihood_field(self, position, wind=None) -> np.ndarray:
        direction, speed = self._wind if wind is None else wind
        return hit_likelihood_field(self.grid.centers, position, direction, speed, self.model)

    def update(self, position, reading: HitReading) -> None:
        self._wind = (reading.wind_direction, reading.wind_speed)
        lam = self.likelihood_field(position)
        lik = lam if reading.hit else 1.0 - lam
        with np.errstate(divide="ignore"):
            lw = self._log_w + np.log(lik)
        if not np.any(np.isfinite(lw)):
            # unreachable while p_fa > 0 and p_d < 1
            raise AllZeroError("hit likelihood vanished on every free cell")
        self._log_w = lw - lw[np.isfinite(lw)].max()

    def current(self) -> np.ndarray:
        return normalize_log(self._log_w)

    def expected_gain(self, position) -> float:
        """Expected entropy drop (bits) from one reading taken at ``position``."""
        p = self.current()
        lam = self.likelihood_field(position)
        p_hit = float(p @ lam)
        h_now = entropy(p)
        h_next = 0.0
        for prob, lik in ((p_hit, lam), (1.0 - p_hit, 1.0 - lam)):
            if prob > 0:
                h_next += prob * entropy(p * lik / prob)
        return max(0.0, h_now - h_next)

