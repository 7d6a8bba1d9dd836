"""Time grids, seeded Gaussian noise streams, path records, local-time
estimators and the Skorokhod reflection map.

Every simulation in the package draws its randomness through ``NoiseStream``,
which keys a counter-based Philox generator on ``(seed, replica_index)``.
Replicas are therefore independent, order-insensitive and bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ConfigError",
    "TimeGrid",
    "NoiseStream",
    "PathRecord",
    "LocalTimeAccumulator",
    "gaussian_increments",
    "occupation_local_time_step",
    "tanaka_local_time",
    "skorokhod_reflect",
    "RNG_ALGORITHM",
]

# Pinned in every config fingerprint; changing the generator invalidates goldens.
RNG_ALGORITHM = "philox4x64/numpy-ziggurat"


class ConfigError(ValueError):
    """Invalid grid, stream or experiment configuration."""


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid on [0, t_end] with n_steps steps.

    Times are always produced by index (``i * t_end / n_steps``), never by
    repeated addition, so node n_steps lands on t_end exactly.
    """

    t_end: float
    n_steps: int

    def __post_init__(self):
        if not (self.t_end > 0.0):
            raise ConfigError("TimeGrid.t_end must be positive")
        if self.n_steps < 1:
            raise ConfigError("TimeGrid.n_steps must be >= 1")

    @property
    def dt(self) -> float:
        return self.t_end / self.n_steps

    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_end, self.n_steps + 1)


@dataclass(frozen=True)
class NoiseStream:
    """Deterministic Gaussian increment source for one Monte Carlo replica.

    The Philox key is (seed, replica_index): replicas of one experiment are
    mutually independent and can be generated in any order.
    """

    seed: int
    replica_index: int = 0
    dimension: int = 1

    def __post_init__(self):
        if self.dimension < 1:
            raise ConfigError("NoiseStream.dimension must be >= 1")

    def generator(self) -> np.random.Generator:
        key = np.array([self.seed, self.replica_index], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))


def gaussian_increments(stream: NoiseStream, grid: TimeGrid) -> np.ndarray:
    """i.i.d. N(0, dt) increments, shape (n_steps, dimension).

    Bit-identical across calls for the same (seed, replica_index, grid).
    """
    rng = stream.generator()
    out = rng.standard_normal((grid.n_steps, stream.dimension))
    out *= math.sqrt(grid.dt)
    return out


def occupation_local_time_step(x, level, dx_quadratic_variation, beta: float):
    """One increment of the band-occupation local-time estimator.

    Returns (1/2beta) * 1{|x - level| <= beta} * dx_quadratic_variation.
    Total function; accepts scalars or broadcasting arrays.
    """
    x = np.asarray(x, dtype=float)
    inband = np.abs(x - level) <= beta
    res = np.where(inband, np.asarray(dx_quadratic_variation, dtype=float) / (2.0 * beta), 0.0)
    if res.ndim == 0:
        return float(res)
    return res


@dataclass
class LocalTimeAccumulator:
    """Running local-time estimate of a monitored scalar at a (moving) level.

    ``bandwidth`` follows the policy beta = c * sqrt(dt); the caller fixes c.
    The occupation estimator is nondecreasing by construction.
    """

    bandwidth: float
    estimator_kind: str = "occupation"
    value: float = 0.0
    level_description: str = "fixed"
    _steps_in_band: int = field(default=0, repr=False)

    def __post_init__(self):
        if not (self.bandwidth > 0.0):
            raise ConfigError("LocalTimeAccumulator.bandwidth must be positive")
        if self.estimator_kind not in ("occupation", "tanaka_residual"):
            raise ConfigError("unknown estimator_kind %r" % (self.estimator_kind,))

    def update(self, x: float, level: float, dx_quadratic_variation: float) -> float:
        """Accumulate one step; returns the increment."""
        inc = occupation_local_time_step(x, level, dx_quadratic_variation, self.bandwidth)
        if inc > 0.0:
            self._steps_in_band += 1
        self.value += inc
        return inc

    @staticmethod
    def bandwidth_for(dt: float, c: float = 1.0) -> float:
        return c * math.sqrt(dt)


@dataclass
class PathRecord:
    """Named per-node channels recorded on a common time grid."""

    grid: TimeGrid
    channels: dict[str, np.ndarray] = field(default_factory=dict)

    def add_channel(self, name: str, values) -> None:
        values = np.asarray(values, dtype=float)
        if values.shape != (self.grid.n_steps + 1,):
            raise ConfigError(
                "channel %r has length %d, expected n_steps+1 = %d"
                % (name, values.shape[0] if values.ndim else 0, self.grid.n_steps + 1)
            )
        if name in self.channels:
            raise ConfigError("duplicate channel %r" % (name,))
        self.channels[name] = values


def tanaka_local_time(x) -> np.ndarray:
    """Discrete Tanaka residual L_i = |x_i| - |x_0| - sum_{j<i} sign(x_j) dx_j.

    Convention sign(0) = 0.  Vectorizes over leading axes; the path axis is
    the last one.  L_0 = 0 and the residual is nondecreasing along the path.
    """
    x = np.asarray(x, dtype=float)
    dx = np.diff(x, axis=-1)
    stoch = np.cumsum(np.sign(x[..., :-1]) * dx, axis=-1)
    out = np.zeros_like(x)
    out[..., 1:] = np.abs(x[..., 1:]) - np.abs(x[..., :1]) - stoch
    return out


def skorokhod_reflect(f) -> np.ndarray:
    """Reflection map z_i = f_i - min(0, min_{j<=i} f_j) for f_0 >= 0.

    z >= 0 everywhere; z - f is nondecreasing and flat while z > 0.
    Vectorizes over leading axes.
    """
    f = np.asarray(f, dtype=float)
    if np.any(f[..., 0] < 0.0):
        raise ConfigError("skorokhod_reflect requires f_0 >= 0")
    running_min = np.minimum.accumulate(f, axis=-1)
    return f - np.minimum(0.0, running_min)
