"""One-dimensional interval duals of a Brownian particle.

Four couplings of a scalar Brownian motion X (from 0) with a moving interval:

* symmetric: D_t = [-R_t, R_t] with R = |X| + L, L the local time of X at 0;
* pitman:    R_t = X_t - 2 min_{s<=t} X_s (running-minimum dual);
* mirror:    R driven by -sign(X) dX and the local times of X at 0 and at the
             two moving endpoints;
* free:      D_t = [a_t, b_t] breathing with an independent noise W and
             inflated by the boundary local time of X.

In all four the terminal radius is a Bessel(3)-distributed quantity or the
particle is conditionally uniform in the interval; ``bessel3_cdf`` provides
the reference law.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import erf

from dualflow.sde import occupation_local_time_step, tanaka_local_time

__all__ = [
    "bessel3_cdf",
    "symmetric_dual",
    "pitman_dual",
    "mirror_dual",
    "mirror_dual_step",
    "free_dual",
]


def bessel3_cdf(x, t: float = 1.0):
    """CDF at time t of the radial part of a 3D Brownian motion from 0.

    chi distribution with 3 degrees of freedom scaled by sqrt(t):
    F(x) = erf(y/sqrt(2)) - sqrt(2/pi) * y * exp(-y^2/2),  y = x/sqrt(t).
    """
    if t <= 0.0:
        raise ValueError("bessel3_cdf needs t > 0")
    scalar = np.isscalar(x)
    y = np.atleast_1d(np.asarray(x, dtype=float)) / math.sqrt(t)
    out = erf(y / math.sqrt(2.0)) - math.sqrt(2.0 / math.pi) * y * np.exp(-0.5 * y * y)
    out = np.clip(np.where(y > 0, out, 0.0), 0.0, 1.0)
    return float(out[0]) if scalar else out


def symmetric_dual(x) -> np.ndarray:
    """Radius path R = |X| + L with L the discrete Tanaka residual of X at 0.

    X must start at 0; vectorizes over leading axes (path axis last).
    R - |X| is nondecreasing.
    """
    x = np.asarray(x, dtype=float)
    return np.abs(x) + tanaka_local_time(x)


def pitman_dual(x) -> np.ndarray:
    """Running-minimum dual R = X - 2 min_{s<=t} X_s (exact pathwise)."""
    x = np.asarray(x, dtype=float)
    return x - 2.0 * np.minimum.accumulate(x, axis=-1)


def boundary_local_time_step(gap, dx_quadratic_variation, beta: float):
    """Occupation increment of the particle at a moving boundary point.

    The boundary is reachable from the domain side only, so the collar
    {|gap| <= beta} is normalized by 1/beta (one-sided), twice the interior
    two-sided band convention.  Matching the gap's quadratic variation against
    the Skorokhod reflection requirement fixes this normalization; with the
    two-sided one the interval loses its particle at an O(1) rate.
    """
    gap = np.asarray(gap, dtype=float)
    return np.where(
        np.abs(gap) <= beta, np.asarray(dx_quadratic_variation, dtype=float) / beta, 0.0
    )


def mirror_dual_step(x, r, dx, beta: float):
    """One explicit step of the mirror dual; returns (new R, credited mask).

    dr = -sign(x) dx - 2 dL0(X) + 2 dL(R-X) + 2 dL(R+X): the center local time
    dL0 uses the two-sided band, the two moving-end local times the one-sided
    collar, all carrying the particle's step quadratic variation dx^2.  If the
    particle still lands outside [-R', R'], the deficit is credited as extra
    boundary local time in the same step (discrete Skorokhod containment);
    credit events are reported.  R is clipped at 0 from below.
    """
    x = np.asarray(x, dtype=float)
    r = np.asarray(r, dtype=float)
    dx = np.asarray(dx, dtype=float)
    qv = dx * dx
    dl_zero = occupation_local_time_step(x, 0.0, qv, beta)
    dl_top = boundary_local_time_step(r - x, qv, beta)
    dl_bot = boundary_local_time_step(r + x, qv, beta)
    new_r = r - np.sign(x) * dx - 2.0 * dl_zero + 2.0 * dl_top + 2.0 * dl_bot
    new_x = x + dx
    credited = new_r < np.abs(new_x)
    new_r = np.maximum(new_r, np.abs(new_x))
    return np.where(new_r < 0.0, 0.0, new_r), credited


def mirror_dual(x_paths, beta: float):
    """Mirror dual along full paths; returns (R paths, credit fraction per path)."""
    x = np.atleast_2d(np.asarray(x_paths, dtype=float))
    n_rep, n_nodes = x.shape
    r = np.zeros_like(x)
    credits = np.zeros(n_rep)
    for i in range(n_nodes - 1):
        dx = x[:, i + 1] - x[:, i]
        r[:, i + 1], credited = mirror_dual_step(x[:, i], r[:, i], dx, beta)
        credits += credited
    credit_fraction = credits / (n_nodes - 1)
    if np.asarray(x_paths).ndim == 1:
        return r[0], float(credit_fraction[0])
    return r, credit_fraction


def free_dual(x_paths, w_increments, a0: float, b0: float, beta: float, dt: float,
              collapse_width: float | None = None):
    """Independent-noise interval dual: db = -dW + dL, da = dW - dL.

    dL is the one-sided-collar occupation local time of X at the nearer moving
    endpoint (particle-clock quadratic variation dx^2), firing also in the
    step the particle exits the interval; within the collar of both endpoints
    the push is counted once and shared by construction.  When the estimate
    still leaves the particle outside, the deficit is credited as extra local
    time in the same step, so containment always holds.

    Paths are stopped (and excluded from statistics by the caller) only on the
    domain-measurable collapse event b - a < collapse_width (default 2 beta);
    particle-dependent discards would bias the conditional law.  Returns
    (a paths, b paths, info) with info carrying ``collapsed`` masks and the
    per-path fractions of credited and above-tolerance-credit steps.
    """
    x = np.atleast_2d(np.asarray(x_paths, dtype=float))
    dw = np.atleast_2d(np.asarray(w_increments, dtype=float))
    n_rep, n_nodes = x.shape
    if a0 >= b0:
        raise ValueError("free_dual needs a0 < b0")
    if collapse_width is None:
        collapse_width = 2.0 * beta
    a = np.full((n_rep, n_nodes), a0)
    b = np.full((n_rep, n_nodes), b0)
    collapsed = np.zeros(n_rep, dtype=bool)
    credited_steps = np.zeros(n_rep)
    big_credit_steps = np.zeros(n_rep)
    tol = 2.0 * math.sqrt(dt)
    for i in range(n_nodes - 1):
        xi, xj = x[:, i], x[:, i + 1]
        ai, bi = a[:, i], b[:, i]
        dx = xj - xi
        qv = dx * dx
        gap = np.minimum(np.abs(xi - ai), np.abs(bi - xi))
        exits = (xj < ai) | (xj > bi)
        dl = np.where(exits, qv / beta, boundary_local_time_step(gap, qv, beta))
        dwi = dw[:, i]
        a_new = ai + dwi - dl
        b_new = bi - dwi + dl
        # containment credit: inflate symmetrically until X is inside again
        deficit = np.maximum(np.maximum(a_new - xj, xj - b_new), 0.0)
        credited_steps += deficit > 0.0
        big_credit_steps += deficit > tol
        a_new -= deficit
        b_new += deficit
        newly = ~collapsed & (b_new - a_new < collapse_width)
        collapsed |= newly
        alive = ~collapsed
        a[:, i + 1] = np.where(alive, a_new, ai)
        b[:, i + 1] = np.where(alive, b_new, bi)
    info = {
        "collapsed": collapsed,
        "credit_fraction": credited_steps / (n_nodes - 1),
        "big_credit_fraction": big_credit_steps / (n_nodes - 1),
    }
    if np.asarray(x_paths).ndim == 1:
        return a[0], b[0], info
    return a, b, info
