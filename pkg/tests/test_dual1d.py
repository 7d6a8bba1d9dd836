"""Interval duals: pathwise identities, law checks, and step arithmetic."""

import math

import numpy as np
import pytest

from dualflow.dual1d import (
    bessel3_cdf,
    free_dual,
    mirror_dual,
    mirror_dual_step,
    pitman_dual,
    symmetric_dual,
)
from dualflow.sde import NoiseStream, TimeGrid, gaussian_increments, skorokhod_reflect
from dualflow.stats import EmpiricalSample, ks_one_sample, ks_two_sample


def brownian_paths(seed, n_rep, t_end, n_steps, replica0=0):
    """(n_rep, n_steps+1) standard Brownian paths from 0."""
    out = np.empty((n_rep, n_steps + 1))
    out[:, 0] = 0.0
    for r in range(n_rep):
        g = gaussian_increments(
            NoiseStream(seed=seed, replica_index=replica0 + r), TimeGrid(t_end, n_steps)
        )
        np.cumsum(g[:, 0], out=out[r, 1:])
    return out


class TestBessel3CDF:
    def test_endpoints(self):
        assert bessel3_cdf(0.0, 1.0) == 0.0
        assert bessel3_cdf(50.0, 1.0) == pytest.approx(1.0, abs=1e-12)

    def test_against_mc_oracle(self):
        # brute-force oracle: 1e7 samples of |3D standard normal|
        rng = np.random.Generator(np.random.Philox(key=np.array([123, 0], dtype=np.uint64)))
        norms = np.linalg.norm(rng.standard_normal((10_000_000, 3)), axis=1)
        mc = np.mean(norms <= 1.0)
        assert abs(bessel3_cdf(1.0, 1.0) - mc) < 3e-4

    def test_time_scaling(self):
        assert bessel3_cdf(2.0, 4.0) == pytest.approx(bessel3_cdf(1.0, 1.0))


class TestSymmetricDual:
    def test_degenerate_zero_path(self):
        assert np.allclose(symmetric_dual(np.zeros(5)), np.zeros(5))

    def test_one_step(self):
        # sign(0) = 0 at the launch node: the first step from 0 credits
        # |X_1| - sign(0)*dX = |X_1| as local time, so R_1 = |X_1| + L_1 = 0.6.
        r = symmetric_dual(np.array([0.0, 0.3]))
        assert r[1] == pytest.approx(0.6)

    def test_local_time_part_nondecreasing(self):
        x = brownian_paths(31, 1, 1.0, 5000)[0]
        r = symmetric_dual(x)
        assert np.all(np.diff(r - np.abs(x)) >= -1e-15)

    def test_marginal_law_is_bessel3(self):
        # oracle = chi(3) law of |3D normal|; KS on 1e5 terminal radii
        n_rep, n = 100_000, 2500  # dt = 4e-4 keeps this test quick
        term = np.empty(n_rep)
        block = 200
        for lo in range(0, n_rep, block):
            x = brownian_paths(300, block, 1.0, n, replica0=lo)
            term[lo : lo + block] = symmetric_dual(x)[:, -1]
        d = ks_one_sample(EmpiricalSample.from_values(term), lambda v: bessel3_cdf(v, 1.0))
        assert d <= 0.01


class TestPitmanDual:
    def test_nondecreasing_path(self):
        x = np.array([0.0, 0.5, 1.0, 1.5])
        assert np.allclose(pitman_dual(x), x)

    def test_arithmetic(self):
        assert np.allclose(pitman_dual(np.array([0.0, 1.0, -1.0])), [0.0, 1.0, 1.0])

    def test_reflection_identity(self):
        x = brownian_paths(32, 4, 1.0, 3000)
        r = pitman_dual(x)
        z = skorokhod_reflect(2.0 * x)
        assert np.allclose(r, z - x, atol=1e-12)

    def test_dominates_absolute_value(self):
        x = brownian_paths(33, 8, 1.0, 2000)
        r = pitman_dual(x)
        assert np.all(r >= np.abs(x) - 1e-12)

    def test_law_matches_symmetric(self):
        n_rep, n = 20_000, 4000
        term_p = np.empty(n_rep)
        term_s = np.empty(n_rep)
        block = 100
        for lo in range(0, n_rep, block):
            xp = brownian_paths(41, block, 1.0, n, replica0=lo)
            xs = brownian_paths(42, block, 1.0, n, replica0=lo)
            term_p[lo : lo + block] = pitman_dual(xp)[:, -1]
            term_s[lo : lo + block] = symmetric_dual(xs)[:, -1]
        assert ks_two_sample(term_p, term_s) <= 0.02  # 1e-2 criterion runs at N=1e5


class TestMirrorDual:
    def test_sign_algebra_without_local_time(self):
        # x decreasing, away from 0 and both moving ends: dR = -dX
        x = np.array([5.0, 4.9, 4.8])
        r = 20.0
        for i in range(2):
            r, _ = mirror_dual_step(x[i], r, x[i + 1] - x[i], beta=0.01)
        assert r == pytest.approx(20.2)

    def test_estimator_arithmetic_at_moving_end(self):
        # one in-collar step of (R - X) with dx^2 = dt adds 2*(1/beta)*dt
        # (one-sided boundary collar; see boundary_local_time_step)
        dt = 1e-4
        beta = math.sqrt(dt)
        x, r = 1.0, 1.0 + beta / 2  # within collar of R - X, away from 0 and R+X
        dx = -math.sqrt(dt) / 2  # step toward the center so no credit fires
        new_r, credited = mirror_dual_step(x, r, dx, beta)
        expected = r - dx + 2.0 * dt / 4.0 / beta
        assert new_r == pytest.approx(expected)
        assert not credited

    def test_intertwining_uniform(self):
        # U = X_t / R_t at t=1 ~ Uniform(-1, 1)
        n_rep, n = 10_000, 10_000
        dt = 1.0 / n
        beta = math.sqrt(dt)
        u = np.empty(n_rep)
        block = 500
        for lo in range(0, n_rep, block):
            x = brownian_paths(50, block, 1.0, n, replica0=lo)
            r, _clip = mirror_dual(x, beta)
            u[lo : lo + block] = x[:, -1] / r[:, -1]
        d = ks_one_sample(
            EmpiricalSample.from_values(u), lambda v: np.clip((v + 1.0) / 2.0, 0.0, 1.0)
        )
        assert d <= 0.05

    def test_clip_fraction_reported(self):
        x = brownian_paths(51, 20, 1.0, 1000)
        _, clip = mirror_dual(x, beta=math.sqrt(1e-3))
        assert clip.shape == (20,)
        assert np.all(clip >= 0.0) and np.all(clip <= 1.0)


class TestFreeDual:
    def test_interval_shrinks_without_contact(self):
        # X pinned far from both endpoints: b_k - b_0 = -(W_k - W_0)
        n = 50
        dt = 1e-4
        x = np.zeros((1, n + 1))  # stays at center of [-10, 10]
        w = np.full((1, n), 0.01)
        a, b, info = free_dual(x, w, -10.0, 10.0, beta=math.sqrt(dt), dt=dt)
        assert not info["collapsed"][0]
        assert b[0, -1] - b[0, 0] == pytest.approx(-0.01 * n)
        assert a[0, -1] - a[0, 0] == pytest.approx(0.01 * n)
        # width changes by -2 dW per step
        assert (b[0, 1] - a[0, 1]) - (b[0, 0] - a[0, 0]) == pytest.approx(-0.02)

    def test_intertwining_uniform(self):
        # U = (X_t - a_t)/(b_t - a_t) ~ Uniform(0,1) at t=0.5, dt=1e-4, N=1e4
        t_end, n = 0.5, 5000
        dt = t_end / n
        beta = math.sqrt(dt)
        n_rep = 10_000
        block = 500
        u = []
        for lo in range(0, n_rep, block):
            x = np.empty((block, n + 1))
            w = np.empty((block, n))
            for j in range(block):
                g = gaussian_increments(
                    NoiseStream(seed=60, replica_index=lo + j, dimension=2),
                    TimeGrid(t_end, n),
                )
                rng = NoiseStream(seed=61, replica_index=lo + j).generator()
                x0 = -1.0 + 2.0 * rng.random()
                x[j, 0] = x0
                np.cumsum(g[:, 0], out=x[j, 1:])
                x[j, 1:] += x0
                w[j] = g[:, 1]
            a, b, info = free_dual(x, w, -1.0, 1.0, beta=beta, dt=dt)
            ok = ~info["collapsed"]
            u.append((x[ok, -1] - a[ok, -1]) / (b[ok, -1] - a[ok, -1]))
        u = np.concatenate(u)
        assert u.size > 9000  # collapse fraction is tiny
        d = ks_one_sample(EmpiricalSample.from_values(u), lambda v: np.clip(v, 0.0, 1.0))
        assert d <= 0.05
