"""Radial duals on rotationally symmetric manifolds.

A warped-product profile ds^2 = dr^2 + f(r)^2 dTheta^2 fixes the radial drift
b = (d-1) (ln f)'.  The disk dual couples the particle radius rho to a
geodesic ball radius R through the shared radial noise; the annulus dual (2D)
couples rho to the two annulus radii through the sign-flipped noise and the
particle's local time at the moving mid-circle.  The marginal domain SDEs
(no particle) drive the generator checks.

Paths stop with a typed reason instead of being resampled; reports carry
per-reason counts so statistics condition only on domain-measurable survival.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad

from dualflow.sde import NoiseStream, TimeGrid
from dualflow.stats import DynkinSummary, RegressionAccumulator

__all__ = [
    "RadialProfile",
    "euclidean_profile",
    "sphere_profile",
    "hyperbolic_profile",
    "custom_profile",
    "radial_density_sample",
    "disk_step",
    "annulus_step",
    "annulus_volume",
    "DiskEnsembleResult",
    "AnnulusEnsembleResult",
    "simulate_disk_ensemble",
    "simulate_annulus_ensemble",
    "simulate_marginal_disk",
    "simulate_marginal_annulus",
    "disk_uniform_pushforward",
    "annulus_uniform_pushforward",
    "RADIAL_OBSERVABLES",
    "STOP_OK",
    "STOP_EXPLOSION",
    "STOP_ORDERING",
    "STOP_COLLAPSE_TO_DISK",
    "STOP_COLLAR",
    "STOP_REASON_NAMES",
]

STOP_OK = 0
STOP_EXPLOSION = 1  # rho or a radius left (0, inf)
STOP_ORDERING = 2  # ordering violated beyond the 2 sqrt(dt) band
STOP_COLLAPSE_TO_DISK = 3  # annulus inner radius hit 0 (disk regime hand-off)
STOP_COLLAR = 4  # epsilon-collar stop (width or inner radius below collar)

STOP_REASON_NAMES = {
    STOP_OK: "ok",
    STOP_EXPLOSION: "explosion",
    STOP_ORDERING: "ordering-violation",
    STOP_COLLAPSE_TO_DISK: "collapse-to-disk",
    STOP_COLLAR: "collar-stop",
}


@dataclass(frozen=True)
class RadialProfile:
    """Warping function f with derivative and the implied radial drift."""

    kind: str
    dimension: int
    f: Callable
    fprime: Callable
    r_max: float = math.inf

    def b(self, r):
        """Radial drift (d-1) f'(r)/f(r)."""
        r = np.asarray(r, dtype=float)
        return (self.dimension - 1) * self.fprime(r) / self.f(r)

    def weight(self, r):
        """Radial density weight f(r)^(d-1) (the volume element factor)."""
        r = np.asarray(r, dtype=float)
        return self.f(r) ** (self.dimension - 1)

    def cumulative_weight(self, lo: float, hi: float) -> float:
        """integral_lo^hi f(r)^(d-1) dr (closed forms where available)."""
        d = self.dimension
        if self.kind == "euclidean":
            return (hi**d - lo**d) / d
        if self.kind == "sphere" and d == 2:
            return math.cos(lo) - math.cos(hi)
        if self.kind == "hyperbolic" and d == 2:
            return math.cosh(hi) - math.cosh(lo)
        val, _err = quad(lambda r: float(self.weight(r)), lo, hi, limit=200)
        return val


def euclidean_profile(dimension: int = 2) -> RadialProfile:
    return RadialProfile("euclidean", dimension, lambda r: r, lambda r: np.ones_like(np.asarray(r, dtype=float)))


def sphere_profile(dimension: int = 2) -> RadialProfile:
    return RadialProfile("sphere", dimension, np.sin, np.cos, r_max=math.pi)


def hyperbolic_profile(dimension: int = 2) -> RadialProfile:
    return RadialProfile("hyperbolic", dimension, np.sinh, np.cosh)


def custom_profile(f, fprime, dimension: int = 2, r_max: float = math.inf) -> RadialProfile:
    return RadialProfile("custom", dimension, f, fprime, r_max=r_max)


def radial_density_sample(profile: RadialProfile, r_lo: float, r_hi: float, u):
    """Inverse-CDF sample of the density proportional to f^(d-1) on (r_lo, r_hi).

    Closed-form inversion for the model profiles; bisection to 1e-12 otherwise.
    Vectorizes over ``u``.
    """
    if not (0.0 <= r_lo < r_hi):
        raise ValueError("need 0 <= r_lo < r_hi")
    u = np.asarray(u, dtype=float)
    d = profile.dimension
    if profile.kind == "euclidean":
        return (r_lo**d + u * (r_hi**d - r_lo**d)) ** (1.0 / d)
    if profile.kind == "sphere" and d == 2:
        c_lo, c_hi = math.cos(r_lo), math.cos(r_hi)
        return np.arccos(c_lo + u * (c_hi - c_lo))
    if profile.kind == "hyperbolic" and d == 2:
        c_lo, c_hi = math.cosh(r_lo), math.cosh(r_hi)
        return np.arccosh(c_lo + u * (c_hi - c_lo))
    total = profile.cumulative_weight(r_lo, r_hi)
    scalar = u.ndim == 0
    targets = np.atleast_1d(u) * total
    out = np.empty_like(targets)
    for i, target in enumerate(targets):
        lo, hi = r_lo, r_hi
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if profile.cumulative_weight(r_lo, mid) < target:
                lo = mid
            else:
                hi = mid
            if hi - lo < 1e-12:
                break
        out[i] = 0.5 * (lo + hi)
    return float(out[0]) if scalar else out


def annulus_volume(r_lo, r_hi, profile: RadialProfile) -> float:
    """mu(A(r_lo, r_hi)) = 2 pi int f(r) dr for 2D profiles."""
    if profile.dimension != 2:
        raise ValueError("annulus_volume is the 2D volume")
    return 2.0 * math.pi * profile.cumulative_weight(float(r_lo), float(r_hi))


def _implicit_radial_drift(z, profile: RadialProfile, dt: float):
    """Solve rho' = z + b(rho')/2 dt for rho' > 0 (positivity-preserving).

    Closed form for the euclidean profile; Newton from the euclidean
    initializer otherwise.  The implicit drift keeps the radial particle
    strictly positive where explicit Euler would cross zero.
    """
    z = np.asarray(z, dtype=float)
    d = profile.dimension
    euclid = 0.5 * (z + np.sqrt(z * z + 2.0 * (d - 1) * dt))
    if profile.kind == "euclidean":
        return euclid
    rho = euclid
    for _ in range(4):
        val = rho - z - 0.5 * profile.b(rho) * dt
        # d/drho of b = (d-1)(f''/f - (f'/f)^2); avoid f'' by secant-like step
        h = 1e-7 * np.maximum(rho, 1e-7)
        slope = 1.0 - 0.5 * (profile.b(rho + h) - profile.b(rho - h)) / (2.0 * h) * dt
        rho = np.maximum(rho - val / slope, 0.5 * rho)
    return rho


def disk_step(rho, R, profile: RadialProfile, dbeta, dt: float):
    """One synchronous-coupling step of the disk dual.

    The particle drift is implicit (rho' = rho + dbeta + b(rho')/2 dt), which
    keeps rho strictly positive so no particle-dependent stop can bias the
    conditional law; the domain radius stays explicit with the coupling term
    evaluated at the updated particle:
    R' = R + dbeta + (-b(R)/2 + b(rho')) dt.
    Returns (rho', R', stop codes) for explosion/ordering at the new state.
    """
    rho = np.asarray(rho, dtype=float)
    R = np.asarray(R, dtype=float)
    dbeta = np.asarray(dbeta, dtype=float)
    rho_new = _implicit_radial_drift(rho + dbeta, profile, dt)
    R_new = R + dbeta + (-0.5 * profile.b(R) + profile.b(rho_new)) * dt
    stop = np.zeros(np.broadcast(rho_new, R_new).shape, dtype=np.int8)
    stop[(rho_new <= 0.0) | (R_new <= 0.0) | (R_new >= profile.r_max)] = STOP_EXPLOSION
    stop[(stop == 0) & (rho_new >= R_new)] = STOP_ORDERING
    return rho_new, R_new, stop


def annulus_step(rho, r_minus, r_plus, L, profile: RadialProfile, dbeta, dt: float,
                 beta_bandwidth: float, collar: float = 1e-3):
    """One step of the annulus dual (2D) with skeleton local time.

    s = sign(rho - R0) (sign(0) = +1); the annulus noise is dW = s dbeta so
    the boundary follows the particle on its side of the skeleton.  The local
    time of rho at the moving mid-circle R0 uses the two-sided band estimator
    with the particle's quadratic variation dbeta^2 and inflates both radii.

    Returns (rho', r_minus', r_plus', L', stop codes).
    """
    rho = np.asarray(rho, dtype=float)
    r_minus = np.asarray(r_minus, dtype=float)
    r_plus = np.asarray(r_plus, dtype=float)
    L = np.asarray(L, dtype=float)
    dbeta = np.asarray(dbeta, dtype=float)
    r0 = 0.5 * (r_minus + r_plus)
    s = np.where(rho >= r0, 1.0, -1.0)
    b_rho = profile.b(rho)
    rho_new = _implicit_radial_drift(rho + dbeta, profile, dt)
    dw = s * dbeta
    dl = np.where(np.abs(rho - r0) <= beta_bandwidth,
                  dbeta * dbeta / (2.0 * beta_bandwidth), 0.0)
    rp_new = r_plus + dw + (-0.5 * profile.b(r_plus) + s * b_rho) * dt + 2.0 * dl
    rm_new = r_minus - dw + (-0.5 * profile.b(r_minus) - s * b_rho) * dt - 2.0 * dl
    L_new = L + dl
    stop = np.zeros(np.broadcast(rho_new, rp_new).shape, dtype=np.int8)
    tol = 2.0 * math.sqrt(dt)
    stop[(rho_new <= 0.0) | (rp_new >= profile.r_max)] = STOP_EXPLOSION
    stop[(stop == 0) & (rm_new <= 0.0)] = STOP_COLLAPSE_TO_DISK
    stop[(stop == 0) & ((rho_new < rm_new - tol) | (rho_new > rp_new + tol))] = STOP_ORDERING
    stop[(stop == 0) & ((rp_new - rm_new < 2.0 * collar) | (rm_new < collar))] = STOP_COLLAR
    return rho_new, rm_new, rp_new, L_new, stop


# radial observables k for the generator/measure checks: k(r) and k'(r)
RADIAL_OBSERVABLES = {
    "one": (lambda r: np.ones_like(np.asarray(r, dtype=float)),
            lambda r: np.zeros_like(np.asarray(r, dtype=float))),
    "r2": (lambda r: np.asarray(r, dtype=float) ** 2,
           lambda r: 2.0 * np.asarray(r, dtype=float)),
}


def _mu_k_disk(profile, R, k):
    """int_D k dmu for a 2D radial observable on a disk (vectorized in R)."""
    if profile.kind == "euclidean" and profile.dimension == 2:
        if k == "one":
            return math.pi * np.asarray(R) ** 2
        if k == "r2":
            return 0.5 * math.pi * np.asarray(R) ** 4
    raise NotImplementedError("closed-form mu(k) needs the euclidean 2D profile")


def _mu_k_annulus(profile, rm, rp, k):
    if profile.kind == "euclidean" and profile.dimension == 2:
        if k == "one":
            return math.pi * (np.asarray(rp) ** 2 - np.asarray(rm) ** 2)
        if k == "r2":
            return 0.5 * math.pi * (np.asarray(rp) ** 4 - np.asarray(rm) ** 4)
    raise NotImplementedError("closed-form mu(k) needs the euclidean 2D profile")


def _replica_increments(seed, lo, count, n_steps, grid, dimension=1):
    """Stack per-replica Gaussian increment rows (replica-keyed streams)."""
    out = np.empty((count, n_steps, dimension))
    for j in range(count):
        stream = NoiseStream(seed=seed, replica_index=lo + j, dimension=dimension)
        out[j] = stream.generator().standard_normal((n_steps, dimension))
    out *= math.sqrt(grid.dt)
    return out


@dataclass
class DiskEnsembleResult:
    rho: np.ndarray
    R: np.ndarray
    stop: np.ndarray  # stop code per replica (0 = survived)
    stop_time_index: np.ndarray

    def stop_counts(self) -> dict[str, int]:
        return {
            STOP_REASON_NAMES[c]: int(np.sum(self.stop == c))
            for c in np.unique(self.stop)
        }


def simulate_disk_ensemble(
    profile: RadialProfile,
    r0: float,
    grid: TimeGrid,
    n_replicas: int,
    seed: int,
    block: int = 2000,
    check_monotone_gap: bool = False,
) -> DiskEnsembleResult:
    """Disk dual started at R_0 = r0, rho_0 ~ density f^(d-1) on (0, r0).

    Initial radii draw from the replica's own stream (first uniform), so the
    whole replica is reproducible in isolation.
    """
    n = grid.n_steps
    rho_out = np.empty(n_replicas)
    R_out = np.empty(n_replicas)
    stop_out = np.zeros(n_replicas, dtype=np.int8)
    stop_idx = np.full(n_replicas, n, dtype=np.int64)
    for lo in range(0, n_replicas, block):
        count = min(block, n_replicas - lo)
        u0 = np.empty(count)
        inc = np.empty((count, n))
        for j in range(count):
            g = NoiseStream(seed=seed, replica_index=lo + j).generator()
            u0[j] = g.random()
            inc[j] = g.standard_normal(n)
        inc *= math.sqrt(grid.dt)
        rho = np.asarray(radial_density_sample(profile, 0.0, r0, u0), dtype=float)
        R = np.full(count, float(r0))
        stop = np.zeros(count, dtype=np.int8)
        sidx = np.full(count, n, dtype=np.int64)
        for i in range(n):
            live = stop == 0
            if not np.any(live):
                break
            rho_new, R_new, st = disk_step(rho[live], R[live], profile, inc[live, i], grid.dt)
            if check_monotone_gap:
                # exact for interior steps (rho' <= R); a jump past R trips
                # the ordering stop instead
                interior = rho_new <= R[live]
                gap_growth = (R_new - rho_new) - (R[live] - rho[live])
                if np.any(gap_growth[interior] < -1e-14):
                    raise AssertionError("disk gap R - rho decreased beyond float noise")
            rho[live] = rho_new
            R[live] = R_new
            newly = live.copy()
            newly[live] = st != 0
            stop[newly] = st[st != 0]
            sidx[newly] = i
        rho_out[lo : lo + count] = rho
        R_out[lo : lo + count] = R
        stop_out[lo : lo + count] = stop
        stop_idx[lo : lo + count] = sidx
    return DiskEnsembleResult(rho=rho_out, R=R_out, stop=stop_out, stop_time_index=stop_idx)


@dataclass
class AnnulusEnsembleResult:
    rho: np.ndarray
    r_minus: np.ndarray
    r_plus: np.ndarray
    local_time: np.ndarray
    stop: np.ndarray
    stop_time_index: np.ndarray
    r0_qv: float = 0.0  # pooled quadratic variation of the mid-radius
    rp_qv: float = 0.0  # pooled quadratic variation of the outer radius
    drift_identity_gap: float = 0.0  # max |dR0 + (b(R+)+b(R-))/4 dt| over steps

    def stop_counts(self) -> dict[str, int]:
        return {
            STOP_REASON_NAMES[c]: int(np.sum(self.stop == c))
            for c in np.unique(self.stop)
        }


def simulate_annulus_ensemble(
    profile: RadialProfile,
    r_minus0: float,
    r_plus0: float,
    grid: TimeGrid,
    n_replicas: int,
    seed: int,
    bandwidth_c: float = 1.0,
    collar: float = 1e-3,
    block: int = 2000,
    measure_acc: RegressionAccumulator | None = None,
    measure_k: str = "one",
) -> AnnulusEnsembleResult:
    """Annulus dual started at A(r_minus0, r_plus0), rho_0 ~ f-density.

    When ``measure_acc`` is given, every step of every live replica feeds the
    measure-evolution regression: observed d mu_t(k) against the predicted
    drift -1/2 (2 b_t mu_k + mu_<dk,N>) dt and diffusion -mu_k dW'
    (domain form d boundary = N (dW' + (h/2 + b_t) dt), dW' = -s dbeta,
    b_t dt = -s b(rho) dt - 2 dL).
    """
    n = grid.n_steps
    dt = grid.dt
    beta = bandwidth_c * math.sqrt(dt)
    kfun, kprime = RADIAL_OBSERVABLES[measure_k]
    res_rho = np.empty(n_replicas)
    res_rm = np.empty(n_replicas)
    res_rp = np.empty(n_replicas)
    res_L = np.empty(n_replicas)
    res_stop = np.zeros(n_replicas, dtype=np.int8)
    res_sidx = np.full(n_replicas, n, dtype=np.int64)
    r0_qv = 0.0
    rp_qv = 0.0
    drift_gap = 0.0
    for lo in range(0, n_replicas, block):
        count = min(block, n_replicas - lo)
        u0 = np.empty(count)
        inc = np.empty((count, n))
        for j in range(count):
            g = NoiseStream(seed=seed, replica_index=lo + j).generator()
            u0[j] = g.random()
            inc[j] = g.standard_normal(n)
        inc *= math.sqrt(dt)
        rho = np.asarray(radial_density_sample(profile, r_minus0, r_plus0, u0), dtype=float)
        rm = np.full(count, float(r_minus0))
        rp = np.full(count, float(r_plus0))
        L = np.zeros(count)
        stop = np.zeros(count, dtype=np.int8)
        sidx = np.full(count, n, dtype=np.int64)
        for i in range(n):
            live = stop == 0
            if not np.any(live):
                break
            db = inc[live, i]
            rho_l, rm_l, rp_l = rho[live], rm[live], rp[live]
            r0_l = 0.5 * (rm_l + rp_l)
            s = np.where(rho_l >= r0_l, 1.0, -1.0)
            dl = np.where(np.abs(rho_l - r0_l) <= beta, db * db / (2.0 * beta), 0.0)
            rho_new, rm_new, rp_new, L_new, st = annulus_step(
                rho_l, rm_l, rp_l, L[live], profile, db, dt, beta, collar
            )
            r0_qv += float(np.sum((0.5 * (rm_new + rp_new) - r0_l) ** 2))
            rp_qv += float(np.sum((rp_new - rp_l) ** 2))
            drift_gap = max(
                drift_gap,
                float(
                    np.max(
                        np.abs(
                            (0.5 * (rm_new + rp_new) - r0_l)
                            + 0.25 * (profile.b(rp_l) + profile.b(rm_l)) * dt
                        )
                    )
                ),
            )
            if measure_acc is not None:
                mu_before = _mu_k_annulus(profile, rm_l, rp_l, measure_k)
                mu_after = _mu_k_annulus(profile, rm_new, rp_new, measure_k)
                mu_bnd_k = 2.0 * math.pi * (kfun(rp_l) * rp_l + kfun(rm_l) * rm_l)
                mu_bnd_flux = 2.0 * math.pi * (-kprime(rp_l) * rp_l + kprime(rm_l) * rm_l)
                bt_dt = -s * profile.b(rho_l) * dt - 2.0 * dl
                dwp = -s * db
                x1 = -0.5 * (2.0 * mu_bnd_k * bt_dt + mu_bnd_flux * dt)
                x2 = -mu_bnd_k * dwp
                measure_acc.add(mu_after - mu_before, x1, x2)
            rho[live] = rho_new
            rm[live] = rm_new
            rp[live] = rp_new
            L[live] = L_new
            newly = live.copy()
            newly[live] = st != 0
            stop[newly] = st[st != 0]
            sidx[newly] = i
        res_rho[lo : lo + count] = rho
        res_rm[lo : lo + count] = rm
        res_rp[lo : lo + count] = rp
        res_L[lo : lo + count] = L
        res_stop[lo : lo + count] = stop
        res_sidx[lo : lo + count] = sidx
    return AnnulusEnsembleResult(
        rho=res_rho,
        r_minus=res_rm,
        r_plus=res_rp,
        local_time=res_L,
        stop=res_stop,
        stop_time_index=res_sidx,
        r0_qv=r0_qv,
        rp_qv=rp_qv,
        drift_identity_gap=drift_gap,
    )


def _disk_generator_terms(profile, R, k):
    """(F_k, L~F_k, Gamma(F_k,F_k)) for a disk of radius R (euclidean 2D)."""
    kfun, kprime = RADIAL_OBSERVABLES[k]
    f = profile.f(R)
    mu_bnd = 2.0 * math.pi * f
    mu_bnd_k = 2.0 * math.pi * kfun(R) * f
    mu_dom = math.pi * R**2
    fk = _mu_k_disk(profile, R, k)
    gen = mu_bnd_k * mu_bnd / mu_dom - 0.5 * (2.0 * math.pi * (-kprime(R)) * f)
    gamma = mu_bnd_k**2
    return fk, gen, gamma


def simulate_marginal_disk(
    profile: RadialProfile,
    r0: float,
    grid: TimeGrid,
    n_replicas: int,
    seed: int,
    k: str = "one",
    block: int = 2000,
) -> DynkinSummary:
    """Marginal (particle-free) disk diffusion dR = -(dW + (h/2 - mu_bnd/mu) dt).

    Feeds the generator check: F_k path, generator values, and carre du champ
    along every step.
    """
    n = grid.n_steps
    dt = grid.dt
    summary = DynkinSummary(t_end=grid.t_end)
    for lo in range(0, n_replicas, block):
        count = min(block, n_replicas - lo)
        inc = _replica_increments(seed, lo, count, n, grid)[:, :, 0]
        R = np.full(count, float(r0))
        fk_path = np.empty((count, n + 1))
        gen_path = np.empty((count, n))
        gamma_path = np.empty((count, n))
        fk, gen, gamma = _disk_generator_terms(profile, R, k)
        fk_path[:, 0] = fk
        for i in range(n):
            fk, gen, gamma = _disk_generator_terms(profile, R, k)
            gen_path[:, i] = gen
            gamma_path[:, i] = gamma
            mu_bnd = 2.0 * math.pi * profile.f(R)
            mu_dom = math.pi * R**2 if profile.kind == "euclidean" else None
            if mu_dom is None:
                raise NotImplementedError("marginal disk needs the euclidean profile")
            drift = -(0.5 * profile.b(R) - mu_bnd / mu_dom)
            R = R - inc[:, i] + drift * dt
            if np.any(R <= 0.0):
                raise FloatingPointError("marginal disk radius collapsed; shrink dt")
            fk_path[:, i + 1] = _mu_k_disk(profile, R, k)
        for j in range(count):
            summary.add_path(fk_path[j], gen_path[j], gamma_path[j])
    return summary


def _annulus_generator_terms(profile, rm, rp, k):
    kfun, kprime = RADIAL_OBSERVABLES[k]
    fm, fp = profile.f(rm), profile.f(rp)
    mu_bnd = 2.0 * math.pi * (fm + fp)
    mu_bnd_k = 2.0 * math.pi * (kfun(rp) * fp + kfun(rm) * fm)
    mu_dom = math.pi * (rp**2 - rm**2)
    mu_bnd_flux = 2.0 * math.pi * (-kprime(rp) * fp + kprime(rm) * fm)
    fk = _mu_k_annulus(profile, rm, rp, k)
    gen = mu_bnd_k * mu_bnd / mu_dom - 0.5 * mu_bnd_flux
    gamma = mu_bnd_k**2
    return fk, gen, gamma


def simulate_marginal_annulus(
    profile: RadialProfile,
    r_minus0: float,
    r_plus0: float,
    grid: TimeGrid,
    n_replicas: int,
    seed: int,
    k: str = "one",
    block: int = 2000,
) -> DynkinSummary:
    """Marginal annulus diffusion (h(R+) = b(R+), h(R-) = -b(R-))."""
    if profile.kind != "euclidean" or profile.dimension != 2:
        raise NotImplementedError("marginal annulus needs the euclidean 2D profile")
    n = grid.n_steps
    dt = grid.dt
    summary = DynkinSummary(t_end=grid.t_end)
    for lo in range(0, n_replicas, block):
        count = min(block, n_replicas - lo)
        inc = _replica_increments(seed, lo, count, n, grid)[:, :, 0]
        rm = np.full(count, float(r_minus0))
        rp = np.full(count, float(r_plus0))
        fk_path = np.empty((count, n + 1))
        gen_path = np.empty((count, n))
        gamma_path = np.empty((count, n))
        fk_path[:, 0] = _mu_k_annulus(profile, rm, rp, k)
        for i in range(n):
            fk, gen, gamma = _annulus_generator_terms(profile, rm, rp, k)
            gen_path[:, i] = gen
            gamma_path[:, i] = gamma
            mu_bnd = 2.0 * math.pi * (profile.f(rm) + profile.f(rp))
            mu_dom = math.pi * (rp**2 - rm**2)
            glob = mu_bnd / mu_dom
            dw = inc[:, i]
            rp_new = rp - dw - (0.5 * profile.b(rp) - glob) * dt
            rm_new = rm + dw + (-0.5 * profile.b(rm) - glob) * dt
            bad = (rm_new <= 0.0) | (rp_new - rm_new <= 0.0)
            if np.any(bad):
                raise FloatingPointError("marginal annulus degenerated; shrink dt or t_end")
            rm, rp = rm_new, rp_new
            fk_path[:, i + 1] = _mu_k_annulus(profile, rm, rp, k)
        for j in range(count):
            summary.add_path(fk_path[j], gen_path[j], gamma_path[j])
    return summary


def disk_uniform_pushforward(profile: RadialProfile):
    """U = (cumulative f^{d-1} weight up to rho) / (weight up to R)."""

    def push(rho, R):
        rho = np.asarray(rho, dtype=float)
        R = np.asarray(R, dtype=float)
        if profile.kind == "euclidean":
            return (rho / R) ** profile.dimension
        return np.array(
            [profile.cumulative_weight(0.0, r) / profile.cumulative_weight(0.0, rr)
             for r, rr in zip(rho, R)]
        )

    return push


def annulus_uniform_pushforward(profile: RadialProfile):
    """U = int_{R-}^{rho} f / int_{R-}^{R+} f (2D annulus conditional CDF)."""

    def push(rho, rm, rp):
        rho = np.asarray(rho, dtype=float)
        rm = np.asarray(rm, dtype=float)
        rp = np.asarray(rp, dtype=float)
        if profile.kind == "euclidean" and profile.dimension == 2:
            return (rho**2 - rm**2) / (rp**2 - rm**2)
        return np.array(
            [
                profile.cumulative_weight(a, r) / profile.cumulative_weight(a, b)
                for r, a, b in zip(rho, rm, rp)
            ]
        )

    return push
