"""Constrained sampling: weights, translated means, draws, diagnostics."""

import math

import numpy as np
import pytest
from scipy.stats import ks_2samp

from ckde import (
    BandwidthMatrix,
    DataSet,
    DimensionMismatch,
    GaussianKde,
    LinearConstraint,
    NumericalBreakdown,
    diagnostics,
    draw,
    draw_many,
    prepare,
)
from ckde.constraint import embed

from conftest import mixture_points, random_spd

# Hand-evaluated two-point setup: points (0,0) and (5,0), H = I, constraint
# x1 - x2 = 5. The point (5,0) lies on the constraint line, so its weight is
# exactly 1; the other point sits 5/sqrt(2) away in the pinned coordinate,
# giving weight exp(-25/4).
W_FAR = math.exp(-25.0 / 4.0)


def two_point_state():
    data = DataSet.from_points(np.array([[0.0, 0.0], [5.0, 0.0]]))
    kde = GaussianKde(data, BandwidthMatrix.isotropic(1.0, 2))
    return prepare(kde, LinearConstraint([[1.0, -1.0]], [5.0]))


def random_problem(rng, *, d=None, n=None, standardized=False, isotropic=False):
    d = int(rng.integers(2, 7)) if d is None else d
    n = int(rng.integers(20, 80)) if n is None else n
    data = DataSet.from_points(mixture_points(rng, n, d))
    if standardized:
        data = data.standardize()
    if isotropic:
        bw = BandwidthMatrix.isotropic(0.4 + rng.random(), d)
    else:
        bw = BandwidthMatrix(random_spd(rng, d))
    kde = GaussianKde(data, bw)
    n_c = int(rng.integers(1, d))
    anchor = data.destandardize(data.points[rng.integers(0, n)])
    a = rng.normal(size=(n_c, d))
    b = a @ (anchor + 0.1 * rng.normal(size=d))
    return kde, LinearConstraint(a, b)


class TestPrepare:
    def test_two_point_weights(self):
        state = two_point_state()
        w = state.weights()
        assert state.max_log_weight == pytest.approx(0.0, abs=1e-12)
        np.testing.assert_allclose(sorted(w), [W_FAR, 1.0], rtol=1e-12)
        assert W_FAR == pytest.approx(1.9304541362277093e-3, rel=1e-12)

    def test_point_on_constraint_gets_weight_one(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            kde, constraint = random_problem(rng)
            # Force b so that the first data point satisfies the constraint.
            raw_first = kde.data.destandardize(kde.data.points[0])
            constraint = LinearConstraint(constraint.a, constraint.a @ raw_first)
            state = prepare(kde, constraint)
            assert state.weights()[0] == pytest.approx(1.0, abs=1e-10)

    def test_precision_blocks_reconstruct_rotated_inverse(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            kde, constraint = random_problem(rng)
            state = prepare(kde, constraint)
            dec = state.dec
            v = np.hstack([dec.v_fixed, dec.v_free])
            full = v.T @ kde.bandwidth.inverse @ v
            nc = dec.n_fixed
            np.testing.assert_allclose(state.prec.q_cc, full[:nc, :nc], atol=1e-10)
            np.testing.assert_allclose(state.prec.q_cf, full[:nc, nc:], atol=1e-10)
            np.testing.assert_allclose(state.prec.q_ff, full[nc:, nc:], atol=1e-10)
            np.testing.assert_allclose(
                state.prec.q_fc, state.prec.q_cf.T, atol=1e-12
            )
            schur = full[:nc, :nc] - full[:nc, nc:] @ np.linalg.solve(
                full[nc:, nc:], full[nc:, :nc]
            )
            np.testing.assert_allclose(state.prec.schur, schur, atol=1e-10)

    def test_translated_means_formula(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            kde, constraint = random_problem(rng)
            state = prepare(kde, constraint)
            dec = state.dec
            pts = kde.data.points
            pinned = pts @ dec.v_fixed
            free = pts @ dec.v_free
            q_ff_inv = np.linalg.inv(state.prec.q_ff)
            expected = free - (dec.fixed_coords - pinned) @ (
                q_ff_inv @ state.prec.q_fc
            ).T
            np.testing.assert_allclose(state.translated_means, expected, atol=1e-10)

    def test_isotropic_closed_form(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            kde, constraint = random_problem(rng, isotropic=True)
            h2 = kde.bandwidth.matrix[0, 0]
            state = prepare(kde, constraint)
            assert np.abs(state.prec.q_cf).max() <= 1e-12
            free = kde.data.points @ state.dec.v_free
            np.testing.assert_allclose(state.translated_means, free, atol=1e-12)
            pinned = kde.data.points @ state.dec.v_fixed
            dist2 = ((state.dec.fixed_coords - pinned) ** 2).sum(axis=1)
            expected = np.exp(-0.5 * dist2 / h2)
            got = np.exp(state.log_weights + state.max_log_weight)
            np.testing.assert_allclose(got, expected, atol=1e-12)

    def test_conditioning_special_case_matches_closed_form(self):
        # Pinning the first coordinates (A = [I 0]) must reproduce textbook
        # Gaussian conditioning of each kernel on those coordinates.
        rng = np.random.default_rng(4)
        for _ in range(20):
            d = int(rng.integers(3, 7))
            n_c = int(rng.integers(1, d - 1))
            pts = mixture_points(rng, 40, d)
            h = random_spd(rng, d)
            kde = GaussianKde(DataSet.from_points(pts), BandwidthMatrix(h))
            b = pts[0, :n_c] + 0.2 * rng.normal(size=n_c)
            a = np.hstack([np.eye(n_c), np.zeros((n_c, d - n_c))])
            state = prepare(kde, LinearConstraint(a, b))

            h_cc = h[:n_c, :n_c]
            h_uc = h[n_c:, :n_c]
            gap = b - pts[:, :n_c]
            solve = np.linalg.solve(h_cc, gap.T).T
            log_w = -0.5 * np.einsum("ij,ij->i", gap, solve)
            w_closed = np.exp(log_w - log_w.max())
            w_alg = state.weights()
            np.testing.assert_allclose(
                w_alg / w_alg.sum(), w_closed / w_closed.sum(), atol=1e-10
            )

            cond_means = pts[:, n_c:] + solve @ h_uc.T
            full_closed = np.hstack([np.tile(b, (len(pts), 1)), cond_means])
            full_alg = embed(state.dec, state.translated_means)
            np.testing.assert_allclose(full_alg, full_closed, atol=1e-10)

            cond_cov = h[n_c:, n_c:] - h_uc @ np.linalg.solve(h_cc, h_uc.T)
            l = state.prec.chol_ff
            np.testing.assert_allclose(np.linalg.inv(l @ l.T), cond_cov, atol=1e-10)

    def test_row_scaling_invariance(self):
        rng = np.random.default_rng(5)
        kde, constraint = random_problem(rng, d=4)
        base = prepare(kde, constraint)
        for factor in (2.0, -1.0, 1e-3):
            scaled = prepare(
                kde, LinearConstraint(factor * constraint.a, factor * constraint.b)
            )
            wa, wb = base.weights(), scaled.weights()
            np.testing.assert_allclose(wa / wa.sum(), wb / wb.sum(), atol=1e-10)
            np.testing.assert_allclose(
                embed(base.dec, base.translated_means),
                embed(scaled.dec, scaled.translated_means),
                atol=1e-9,
            )

    def test_dimension_mismatch(self):
        kde, _ = random_problem(np.random.default_rng(6), d=3)
        with pytest.raises(DimensionMismatch):
            prepare(kde, LinearConstraint([[1.0, 0.0]], [0.0]))

    def test_ill_conditioned_free_block_breaks_down(self):
        pts = np.random.default_rng(7).normal(size=(20, 3))
        h = np.diag([1.0, 1.0, 1e-14])
        kde = GaussianKde(DataSet.from_points(pts), BandwidthMatrix(h))
        with pytest.raises(NumericalBreakdown):
            prepare(kde, LinearConstraint([[1.0, 0.0, 0.0]], [0.0]))


class TestDraw:
    def test_constraint_satisfied_for_every_draw(self):
        rng = np.random.default_rng(8)
        for _ in range(10):
            kde, constraint = random_problem(rng, standardized=bool(rng.integers(2)))
            state = prepare(kde, constraint)
            samples = draw_many(state, rng, 500)
            resid = np.abs(constraint.residual(samples)).max()
            assert resid <= 1e-8 * (1.0 + np.linalg.norm(constraint.b))

    def test_two_point_component_fractions(self):
        # Component 2 should win with probability 1/(1 + exp(-25/4)).
        state = two_point_state()
        samples = draw_many(state, np.random.default_rng(9), 100_000)
        # Draws from the component at (5,0) have first coordinate near 5.
        frac = float(np.mean(np.abs(samples[:, 0] - 5.0) < 2.5))
        assert frac == pytest.approx(1.0 / (1.0 + W_FAR), abs=0.002)

    def test_single_point_gaussian_moments(self):
        rng = np.random.default_rng(10)
        h = random_spd(rng, 3)
        kde = GaussianKde(DataSet.from_points([[1.0, -2.0, 0.5]]), BandwidthMatrix(h))
        constraint = LinearConstraint([[1.0, 0.0, 0.0]], [1.3])
        state = prepare(kde, constraint)
        m = 100_000
        samples = draw_many(state, np.random.default_rng(11), m)
        free = samples @ state.dec.v_free
        mean_target = state.translated_means[0]
        l = state.prec.chol_ff
        cov = np.linalg.inv(l @ l.T)
        tol = 5.0 * math.sqrt(np.trace(cov) / m)
        assert np.linalg.norm(free.mean(axis=0) - mean_target) < tol

    def test_deterministic_given_seed(self):
        state = two_point_state()
        a = draw_many(state, np.random.default_rng(12), 64)
        b = draw_many(state, np.random.default_rng(12), 64)
        np.testing.assert_array_equal(a, b)

    def test_single_draw_is_a_vector(self):
        state = two_point_state()
        x = draw(state, np.random.default_rng(13))
        assert x.shape == (2,)
        assert x[0] - x[1] == pytest.approx(5.0, abs=1e-10)

    def test_split_streams_match_single_stream_distribution(self):
        rng = np.random.default_rng(14)
        kde, constraint = random_problem(rng, d=3)
        state = prepare(kde, constraint)
        whole = draw_many(state, np.random.default_rng(100), 4000)
        s1, s2 = np.random.default_rng(101).spawn(2)
        halves = np.vstack([draw_many(state, s1, 2000), draw_many(state, s2, 2000)])
        for k in range(3):
            assert ks_2samp(whole[:, k], halves[:, k]).pvalue > 0.01

    def test_standardized_and_raw_fits_agree_in_distribution(self):
        # The same raw data fitted with and without standardization (with the
        # bandwidth mapped accordingly) must sample the same distribution.
        rng = np.random.default_rng(15)
        raw = mixture_points(rng, 300, 2)
        constraint = LinearConstraint([[1.0, -1.0]], [2.0])

        data_raw = DataSet.from_points(raw)
        data_std = data_raw.standardize()
        h = 0.5
        bw_std = BandwidthMatrix.isotropic(h, 2)
        bw_raw = BandwidthMatrix(np.diag(data_raw.std**2) * h * h)
        st_raw = prepare(GaussianKde(data_raw, bw_raw), constraint)
        st_std = prepare(GaussianKde(data_std, bw_std), constraint)
        a = draw_many(st_raw, np.random.default_rng(200), 4000)
        b = draw_many(st_std, np.random.default_rng(201), 4000)
        for k in range(2):
            assert ks_2samp(a[:, k], b[:, k]).pvalue > 0.01


class TestDiagnostics:
    def test_uniform_weights_give_full_ess(self):
        # Every data point on the constraint line -> all weights equal 1.
        pts = np.array([[float(v), float(v) - 5.0] for v in range(12)])
        kde = GaussianKde(DataSet.from_points(pts), BandwidthMatrix.isotropic(1.0, 2))
        state = prepare(kde, LinearConstraint([[1.0, -1.0]], [5.0]))
        report = diagnostics(state)
        assert report.ess == pytest.approx(12.0, rel=1e-12)
        assert not report.low_ess

    def test_two_point_ess(self):
        report = diagnostics(two_point_state())
        expected = (1.0 + W_FAR) ** 2 / (1.0 + W_FAR**2)
        assert report.ess == pytest.approx(expected, rel=1e-12)
        assert expected == pytest.approx(1.0039, abs=1e-4)
        assert report.low_ess

    def test_far_constraint_keeps_sampling_valid(self):
        # All raw weights underflow, yet the shifted weights still sample.
        pts = np.array([[0.0, 0.0], [0.5, 0.3], [-0.2, 0.6]])
        kde = GaussianKde(DataSet.from_points(pts), BandwidthMatrix.isotropic(0.05, 2))
        state = prepare(kde, LinearConstraint([[1.0, 0.0]], [100.0]))
        report = diagnostics(state)
        assert report.max_log_weight < -690.0  # exp() underflows to 0
        assert report.low_ess
        samples = draw_many(state, np.random.default_rng(16), 100)
        np.testing.assert_allclose(samples[:, 0], 100.0, atol=1e-8)

    def test_active_weight_count(self):
        report = diagnostics(two_point_state())
        assert report.n_active_weights == 2
