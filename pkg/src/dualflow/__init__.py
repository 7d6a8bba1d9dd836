"""dualflow: coupled simulation of Brownian particles and set-valued dual domains.

The library simulates a scalar/planar/radial Brownian particle together with a
moving domain (interval, disk, annulus, or symmetric convex planar set) driven
by mean curvature and the particle's local times, and verifies the resulting
conditional-uniformity and generator identities statistically.
"""

from dualflow.sde import (
    TimeGrid,
    NoiseStream,
    PathRecord,
    LocalTimeAccumulator,
    gaussian_increments,
    occupation_local_time_step,
    tanaka_local_time,
    skorokhod_reflect,
)

__version__ = "0.1.0"

__all__ = [
    "TimeGrid",
    "NoiseStream",
    "PathRecord",
    "LocalTimeAccumulator",
    "gaussian_increments",
    "occupation_local_time_step",
    "tanaka_local_time",
    "skorokhod_reflect",
]
