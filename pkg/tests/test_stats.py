"""KS statistics, conditional-uniformity harness, and report plumbing."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dualflow.stats import (
    ContractError,
    EmpiricalSample,
    InsufficientDataError,
    RegressionAccumulator,
    StatReport,
    conditional_uniformity,
    ks_one_sample,
    ks_threshold,
    ks_two_sample,
    measure_evolution_check,
)


def uniform_cdf(x):
    return np.clip(x, 0.0, 1.0)


class TestKS:
    def test_enumerated_example(self):
        # {0.25, 0.5, 0.75} vs Uniform(0,1): the four candidate gaps give 0.25
        vals = np.array([0.25, 0.5, 0.75, 0.1, 0.2, 0.3, 0.9, 0.6])
        # The spec example uses 3 points; check it via the raw formula on a
        # padded-but-equivalent construction is not possible, so verify the
        # 3-point value with a local computation instead.
        s3 = np.array([0.25, 0.5, 0.75])
        i = np.arange(1, 4)
        d = max(np.max(i / 3 - s3), np.max(s3 - (i - 1) / 3))
        assert d == pytest.approx(0.25)
        sample = EmpiricalSample.from_values(vals)
        assert ks_one_sample(sample, uniform_cdf) > 0.0

    def test_quantile_construction(self):
        n = 64
        q = (np.arange(1, n + 1) - 0.5) / n
        sample = EmpiricalSample.from_values(q)
        assert ks_one_sample(sample, uniform_cdf) == pytest.approx(1.0 / (2 * n))

    def test_two_sample_identical(self):
        a = np.linspace(0.1, 0.9, 50)
        assert ks_two_sample(a, a.copy()) == 0.0

    def test_unsorted_rejected(self):
        bad = EmpiricalSample(values=np.array([0.5, 0.2, 0.7, 0.1, 0.9, 0.3, 0.4, 0.6]), n=8)
        with pytest.raises(ContractError):
            ks_one_sample(bad, uniform_cdf)

    def test_minimum_size(self):
        with pytest.raises(InsufficientDataError):
            EmpiricalSample.from_values([0.1, 0.2])

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 10_000))
    def test_monotone_reparametrization_invariance(self, seed):
        rng = np.random.Generator(np.random.Philox(key=np.array([99, seed], dtype=np.uint64)))
        u = rng.random(200)
        d0 = ks_one_sample(EmpiricalSample.from_values(u), uniform_cdf)
        # strictly increasing map y = x^3 + x applied to sample and reference
        y = u**3 + u

        def cdf_y(t):
            # invert t = x^3 + x by bisection, then uniform cdf
            t = np.asarray(t, dtype=float)
            lo = np.zeros_like(t)
            hi = np.ones_like(t)
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                val = mid**3 + mid
                lo = np.where(val < t, mid, lo)
                hi = np.where(val >= t, mid, hi)
            return np.clip(0.5 * (lo + hi), 0.0, 1.0)

        d1 = ks_one_sample(EmpiricalSample.from_values(y), cdf_y)
        assert d1 == pytest.approx(d0, abs=1e-9)


class TestConditionalUniformity:
    def _pairs(self, u, domain):
        return list(zip(u, domain))

    def test_null_case_calibration(self):
        # exact uniform synthetic pairs pass at the declared thresholds
        for seed in range(5):
            rng = np.random.Generator(np.random.Philox(key=np.array([7, seed], dtype=np.uint64)))
            n = 10000
            u = rng.random(n)
            dom = rng.random(n) + 1.0
            rep = conditional_uniformity(
                self._pairs(u, dom),
                lambda p, d: p,
                ks_limit=ks_threshold(n),
                corr_limit=0.03,
                stratified_ks_limit=0.05,
            )
            assert rep.passed, rep.to_text()

    def test_biased_sample_fails(self):
        rng = np.random.Generator(np.random.Philox(key=np.array([8, 0], dtype=np.uint64)))
        n = 10000
        u = rng.random(n) ** 2  # CDF sqrt(u): KS = max|sqrt(u)-u| = 0.25 > 0.2
        dom = rng.random(n)
        rep = conditional_uniformity(
            self._pairs(u, dom), lambda p, d: p, ks_limit=0.2, corr_limit=1.0
        )
        assert not rep.passed
        assert rep.extras["ks"] > 0.2

    def test_insufficient_pairs(self):
        with pytest.raises(InsufficientDataError):
            conditional_uniformity(
                [(0.1, 1.0)] * 50, lambda p, d: p, ks_limit=0.1, corr_limit=0.1
            )


class TestMeasureEvolution:
    def test_recovers_unit_slopes(self):
        rng = np.random.Generator(np.random.Philox(key=np.array([21, 0], dtype=np.uint64)))
        n = 50000
        x1 = rng.standard_normal(n) * 0.001
        x2 = rng.standard_normal(n) * 0.02
        y = x1 + x2 + rng.standard_normal(n) * 1e-4
        acc = RegressionAccumulator()
        acc.add(y, x1, x2)
        rep = measure_evolution_check(acc, slope_tol=0.05)
        assert rep.passed, rep.to_text()

    def test_degenerate_input(self):
        acc = RegressionAccumulator()
        acc.add(np.zeros(10), np.zeros(10), np.zeros(10))
        rep = measure_evolution_check(acc, slope_tol=0.05)
        assert rep.verdict == "degenerate input"
        assert rep.passed


class TestStatReport:
    def test_text_round_trip_stability(self):
        rep = StatReport(
            name="demo",
            statistic=0.012345678901234567,
            threshold=0.02,
            fingerprint="seed=1|dt=0.0001",
            stop_reasons={"ok": 99, "collapse-to-disk": 1},
            extras={"corr": 0.001},
        )
        text = rep.to_text()
        assert text == rep.to_text()
        assert "verdict = pass" in text
        assert text.index("extra.corr") < text.index("stops.collapse-to-disk")
        assert "0.012345678901234567" in text
