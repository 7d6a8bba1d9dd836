"""Kolmogorov-Smirnov machinery, conditional-uniformity harness, generator
(Dynkin) and measure-evolution checks, and the structured pass/fail report.

All verdicts route through ``StatReport`` so every statistic carries its
threshold, the replica bookkeeping by stop reason, and the config fingerprint
needed to reproduce the run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ContractError",
    "InsufficientDataError",
    "EmpiricalSample",
    "StatReport",
    "ks_one_sample",
    "ks_two_sample",
    "ks_threshold",
    "conditional_uniformity",
    "dynkin_check",
    "measure_evolution_check",
    "tanaka_residual_check",
    "RegressionAccumulator",
]


class ContractError(ValueError):
    """Caller violated an operation precondition (unsorted input etc.)."""


class InsufficientDataError(ValueError):
    """Too few surviving replicas for a meaningful statistic."""


@dataclass(frozen=True)
class EmpiricalSample:
    """Sorted sample with at least 8 points."""

    values: np.ndarray
    n: int

    @classmethod
    def from_values(cls, values) -> "EmpiricalSample":
        v = np.sort(np.asarray(values, dtype=float))
        if v.size < 8:
            raise InsufficientDataError("need at least 8 values, got %d" % v.size)
        return cls(values=v, n=int(v.size))


def ks_one_sample(sample: EmpiricalSample, cdf) -> float:
    """sup-distance D_n = max_i max(i/n - F(x_i), F(x_i) - (i-1)/n)."""
    v = sample.values
    if np.any(np.diff(v) < 0):
        raise ContractError("sample must be sorted ascending")
    F = np.asarray(cdf(v), dtype=float)
    if np.any(np.diff(F) < -1e-12) or F.min() < -1e-12 or F.max() > 1 + 1e-12:
        raise ContractError("reference cdf must be nondecreasing with range [0,1]")
    i = np.arange(1, sample.n + 1, dtype=float)
    return float(max(np.max(i / sample.n - F), np.max(F - (i - 1) / sample.n)))


def ks_two_sample(a, b) -> float:
    """Two-sample sup-distance between empirical CDFs."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if a.size < 8 or b.size < 8:
        raise InsufficientDataError("two-sample KS needs >= 8 points per sample")
    allv = np.concatenate([a, b])
    ca = np.searchsorted(a, allv, side="right") / a.size
    cb = np.searchsorted(b, allv, side="right") / b.size
    return float(np.max(np.abs(ca - cb)))


def ks_threshold(n: int, factor: float = 2.0) -> float:
    """Default KS threshold: factor x the 99% pure-sampling quantile 1.63/sqrt(n).

    The factor-2 headroom absorbs discretization bias of the schemes; every
    report prints the threshold actually used.
    """
    return factor * 1.63 / math.sqrt(n)


@dataclass
class StatReport:
    """One named verdict: ``pass`` iff statistic <= threshold."""

    name: str
    statistic: float
    threshold: float
    fingerprint: str = ""
    stop_reasons: dict[str, int] = field(default_factory=dict)
    extras: dict[str, float] = field(default_factory=dict)
    degenerate: bool = False

    @property
    def passed(self) -> bool:
        if self.degenerate:
            return True
        return self.statistic <= self.threshold

    @property
    def verdict(self) -> str:
        if self.degenerate:
            return "degenerate input"
        return "pass" if self.passed else "fail"

    def to_text(self) -> str:
        """Stable key order, 17 significant digits; golden-file friendly."""
        lines = [
            "name = %s" % self.name,
            "statistic = %.17g" % self.statistic,
            "threshold = %.17g" % self.threshold,
            "verdict = %s" % self.verdict,
        ]
        for key in sorted(self.extras):
            lines.append("extra.%s = %.17g" % (key, self.extras[key]))
        for reason in sorted(self.stop_reasons):
            lines.append("stops.%s = %d" % (reason, self.stop_reasons[reason]))
        lines.append("fingerprint = %s" % self.fingerprint)
        return "\n".join(lines) + "\n"


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    a = a - a.mean()
    b = b - b.mean()
    den = math.sqrt(float(a @ a) * float(b @ b))
    if den == 0.0:
        return 0.0
    return float(a @ b) / den


def conditional_uniformity(
    pairs,
    pushforward,
    ks_limit: float,
    corr_limit: float,
    stratified_ks_limit: float | None = None,
    fingerprint: str = "",
    stop_reasons: dict[str, int] | None = None,
    name: str = "conditional-uniformity",
) -> StatReport:
    """Intertwining diagnostic: U = pushforward(particle, domain) vs Uniform(0,1).

    Reports the KS distance of the U-sample, the absolute Pearson correlation
    between U and the domain statistic, and (optionally) the worst KS within
    the four quartile strata of the domain statistic.  Pass requires every
    enabled piece to sit below its limit; the reported statistic is the worst
    ratio statistic/limit scaled back to the KS limit so a single threshold
    line stays meaningful.
    """
    particle = np.asarray([p for p, _ in pairs], dtype=float)
    domain = np.asarray([d for _, d in pairs], dtype=float)
    if particle.size < 100:
        raise InsufficientDataError(
            "conditional_uniformity needs >= 100 surviving pairs, got %d" % particle.size
        )
    u = np.asarray(pushforward(particle, domain), dtype=float)
    ks = ks_one_sample(EmpiricalSample.from_values(u), lambda x: np.clip(x, 0.0, 1.0))
    corr = abs(_pearson(u, domain))
    extras = {"ks": ks, "corr": corr, "n": float(u.size)}
    worst = ks / ks_limit
    worst = max(worst, corr / corr_limit)
    if stratified_ks_limit is not None:
        order = np.argsort(domain, kind="stable")
        strata = np.array_split(order, 4)
        for j, idx in enumerate(strata):
            ksj = ks_one_sample(
                EmpiricalSample.from_values(u[idx]), lambda x: np.clip(x, 0.0, 1.0)
            )
            extras["ks_stratum_%d" % j] = ksj
            worst = max(worst, ksj / stratified_ks_limit)
    return StatReport(
        name=name,
        statistic=worst * ks_limit,
        threshold=ks_limit,
        fingerprint=fingerprint,
        stop_reasons=dict(stop_reasons or {}),
        extras=extras,
    )


@dataclass
class DynkinSummary:
    """Streaming moments for the generator check of one observable."""

    f0: float = 0.0
    sum_ft: float = 0.0
    n_paths: int = 0
    sum_gen: float = 0.0  # sum over (path, step) of generator values
    sum_gamma: float = 0.0  # sum over (path, step) of carre-du-champ values
    n_steps_total: int = 0
    sum_sq_inc: float = 0.0  # sum over (path, step) of (dF)^2
    t_end: float = 0.0

    def add_path(self, f_path: np.ndarray, gen_path: np.ndarray, gamma_path: np.ndarray):
        self.f0 = float(f_path[0])
        self.sum_ft += float(f_path[-1])
        self.n_paths += 1
        self.sum_gen += float(np.sum(gen_path))
        self.sum_gamma += float(np.sum(gamma_path))
        self.n_steps_total += gen_path.size
        d = np.diff(f_path)
        self.sum_sq_inc += float(d @ d)


def dynkin_check(summary: DynkinSummary, rel_limit: float, fingerprint: str = "",
                 name: str = "dynkin") -> StatReport:
    """Compare (E F(D_t) - F(D_0))/t with the time-averaged generator, and the
    empirical quadratic-variation rate with the expected carre du champ."""
    if summary.n_paths < 100:
        raise InsufficientDataError("dynkin_check needs >= 100 paths")
    t = summary.t_end
    drift_obs = (summary.sum_ft / summary.n_paths - summary.f0) / t
    drift_pred = summary.sum_gen / summary.n_steps_total
    qv_obs = summary.sum_sq_inc / summary.n_paths / t
    qv_pred = summary.sum_gamma / summary.n_steps_total
    rel_drift = abs(drift_obs - drift_pred) / max(1e-30, abs(drift_pred))
    rel_qv = abs(qv_obs - qv_pred) / max(1e-30, abs(qv_pred))
    return StatReport(
        name=name,
        statistic=max(rel_drift, rel_qv),
        threshold=rel_limit,
        fingerprint=fingerprint,
        extras={
            "drift_observed": drift_obs,
            "drift_predicted": drift_pred,
            "qv_observed": qv_obs,
            "qv_predicted": qv_pred,
            "rel_drift": rel_drift,
            "rel_qv": rel_qv,
        },
    )


@dataclass
class RegressionAccumulator:
    """Streaming two-regressor least squares y ~ b1*x1 + b2*x2 (no intercept)."""

    s11: float = 0.0
    s22: float = 0.0
    s12: float = 0.0
    s1y: float = 0.0
    s2y: float = 0.0
    n: int = 0

    def add(self, y, x1, x2) -> None:
        y = np.asarray(y, dtype=float).ravel()
        x1 = np.asarray(x1, dtype=float).ravel()
        x2 = np.asarray(x2, dtype=float).ravel()
        self.s11 += float(x1 @ x1)
        self.s22 += float(x2 @ x2)
        self.s12 += float(x1 @ x2)
        self.s1y += float(x1 @ y)
        self.s2y += float(x2 @ y)
        self.n += y.size

    def solve(self) -> tuple[float, float]:
        det = self.s11 * self.s22 - self.s12 * self.s12
        if det == 0.0:
            raise InsufficientDataError("degenerate regressors")
        b1 = (self.s22 * self.s1y - self.s12 * self.s2y) / det
        b2 = (self.s11 * self.s2y - self.s12 * self.s1y) / det
        return b1, b2


def measure_evolution_check(
    acc: RegressionAccumulator,
    slope_tol: float,
    fingerprint: str = "",
    name: str = "measure-evolution",
) -> StatReport:
    """Regression of observed d mu_t(k) on predicted drift and diffusion terms.

    Passes when both slopes are within slope_tol of 1.  Degenerate inputs
    (frozen domain: zero regressors) are reported as such, not failed.
    """
    if acc.n == 0 or (acc.s11 == 0.0 and acc.s22 == 0.0):
        return StatReport(
            name=name, statistic=0.0, threshold=slope_tol,
            fingerprint=fingerprint, degenerate=True,
        )
    b_drift, b_diff = acc.solve()
    stat = max(abs(b_drift - 1.0), abs(b_diff - 1.0))
    return StatReport(
        name=name,
        statistic=stat,
        threshold=slope_tol,
        fingerprint=fingerprint,
        extras={"slope_drift": b_drift, "slope_diffusion": b_diff, "n": float(acc.n)},
    )


def tanaka_residual_check(
    sup_residuals,
    dt: float,
    coefficient: float,
    fingerprint: str = "",
    name: str = "ito-tanaka-residual",
) -> StatReport:
    """95th percentile of per-path sup |residual| against coefficient * dt^(1/4).

    ``coefficient`` comes from the 1D calibration run; the residual is the
    defect of the signed-distance decomposition along each path.
    """
    sup_residuals = np.asarray(sup_residuals, dtype=float)
    if sup_residuals.size < 20:
        raise InsufficientDataError("tanaka_residual_check needs >= 20 paths")
    q95 = float(np.quantile(sup_residuals, 0.95))
    return StatReport(
        name=name,
        statistic=q95,
        threshold=coefficient * dt ** 0.25,
        fingerprint=fingerprint,
        extras={"q95": q95, "median": float(np.median(sup_residuals)),
                "n": float(sup_residuals.size)},
    )
