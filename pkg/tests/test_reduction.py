"""Truncated-SVD reduction: round trips, monotone error, endpoint pins."""

import numpy as np
import pytest

from ckde import (
    BandwidthMatrix,
    DataSet,
    DegenerateData,
    DimensionMismatch,
    GaussianKde,
    InvalidArgument,
    KIND_INIT_END_SPEED,
    KIND_INIT_SPEED_ACCEL,
    OverConstrained,
    ReducedBasis,
    decode,
    draw_many,
    encode,
    endpoint_constraint,
    fit_reduced_basis,
    prepare,
    profiles_matrix,
    silverman_bandwidth,
    synthesize_trajectories,
    window_profiles,
)

DT = 0.1
N_T = 50


def profile_corpus(seed=0, n_vehicles=150):
    rng = np.random.default_rng(seed)
    profiles = []
    for times, speeds in synthesize_trajectories(rng, n_vehicles, 40.0, DT):
        profiles.extend(window_profiles(times, speeds, DT, N_T))
    return profiles_matrix(profiles)


class TestFit:
    def test_rank_one_data_exact_round_trip(self):
        rng = np.random.default_rng(1)
        direction = rng.normal(size=8)
        offsets = rng.normal(size=(30, 1))
        base = rng.normal(size=8)
        raw = base + offsets * direction
        basis, coords = fit_reduced_basis(raw, 1)
        np.testing.assert_allclose(decode(basis, encode(basis, raw)), raw, atol=1e-10)
        np.testing.assert_allclose(decode(basis, coords), raw, atol=1e-10)

    def test_reconstruction_error_monotone_in_rank(self):
        raw = profile_corpus(seed=2, n_vehicles=40)
        errors = []
        for k in range(1, 8):
            basis, coords = fit_reduced_basis(raw, k)
            errors.append(np.linalg.norm(decode(basis, coords) - raw))
        assert all(a >= b - 1e-9 for a, b in zip(errors, errors[1:]))

    def test_full_rank_reconstructs_exactly(self):
        rng = np.random.default_rng(3)
        raw = rng.normal(size=(12, 5))
        basis, coords = fit_reduced_basis(raw, 5)
        scale = np.linalg.norm(raw)
        assert np.linalg.norm(decode(basis, coords) - raw) <= 1e-8 * scale

    def test_rank_out_of_range_rejected(self):
        raw = np.random.default_rng(4).normal(size=(10, 5))
        with pytest.raises(InvalidArgument):
            fit_reduced_basis(raw, 0)
        with pytest.raises(InvalidArgument):
            fit_reduced_basis(raw, 6)

    def test_modes_orthonormal_scales_descending(self):
        raw = profile_corpus(seed=5, n_vehicles=30)
        basis, _ = fit_reduced_basis(raw, 4)
        np.testing.assert_allclose(basis.modes.T @ basis.modes, np.eye(4), atol=1e-10)
        assert np.all(np.diff(basis.scales) <= 0.0)
        assert np.all(basis.scales > 0.0)

    def test_encode_reproduces_fit_coordinates(self):
        raw = profile_corpus(seed=6, n_vehicles=25)
        basis, coords = fit_reduced_basis(raw, 4)
        np.testing.assert_allclose(encode(basis, raw), coords, atol=1e-10)


class TestEncodeDecode:
    @pytest.fixture()
    def basis(self):
        return fit_reduced_basis(profile_corpus(seed=7, n_vehicles=25), 4)[0]

    def test_mean_maps_to_zero(self, basis):
        np.testing.assert_allclose(encode(basis, basis.mean), np.zeros(4), atol=1e-10)
        np.testing.assert_allclose(decode(basis, np.zeros(4)), basis.mean, atol=1e-12)

    def test_basis_column_maps_to_unit_vector(self, basis):
        x = basis.mean + basis.scales[0] * basis.modes[:, 0]
        np.testing.assert_allclose(encode(basis, x), [1.0, 0, 0, 0], atol=1e-10)

    def test_decode_is_affine(self, basis):
        rng = np.random.default_rng(8)
        v1, v2 = rng.normal(size=(2, 4))
        lhs = decode(basis, 2.5 * v1 + v2) - basis.mean
        rhs = 2.5 * (decode(basis, v1) - basis.mean) + (decode(basis, v2) - basis.mean)
        np.testing.assert_allclose(lhs, rhs, atol=1e-10)

    def test_in_span_round_trip(self, basis):
        rng = np.random.default_rng(9)
        v = rng.normal(size=4)
        x = decode(basis, v)
        np.testing.assert_allclose(decode(basis, encode(basis, x)), x, atol=1e-10)

    def test_dimension_checks(self, basis):
        with pytest.raises(DimensionMismatch):
            encode(basis, np.zeros(7))
        with pytest.raises(DimensionMismatch):
            decode(basis, np.zeros(5))

    def test_zero_scale_encode_degenerate(self):
        raw = np.zeros((10, 6))
        raw[:, 0] = np.arange(10.0)
        basis, _ = fit_reduced_basis(raw, 3)  # ranks 2 and 3 carry zero energy
        with pytest.raises(DegenerateData):
            encode(basis, raw[0])

    def test_json_round_trip(self, basis, tmp_path):
        path = tmp_path / "basis.json"
        basis.save_json(path)
        back = ReducedBasis.load_json(path)
        np.testing.assert_array_equal(back.mean, basis.mean)
        np.testing.assert_array_equal(back.modes, basis.modes)
        np.testing.assert_array_equal(back.scales, basis.scales)
        import json

        payload = json.loads(path.read_text())
        assert set(payload) == {"mu", "UB1", "SB1", "d_red"}


class TestEndpointConstraint:
    @pytest.fixture(scope="class")
    @staticmethod
    def fitted():
        raw = profile_corpus(seed=10)
        basis, coords = fit_reduced_basis(raw, 4)
        data = DataSet.from_points(coords).standardize()
        kde = GaussianKde(data, silverman_bandwidth(data))
        return basis, kde

    @pytest.mark.parametrize(
        "kind,values",
        [
            (KIND_INIT_SPEED_ACCEL, (15.0, 1.0)),
            (KIND_INIT_SPEED_ACCEL, (15.0, -1.0)),
            (KIND_INIT_END_SPEED, (10.0, 15.0)),
            (KIND_INIT_END_SPEED, (15.0, 10.0)),
        ],
    )
    def test_decoded_profiles_hit_endpoints(self, fitted, kind, values):
        basis, kde = fitted
        constraint = endpoint_constraint(basis, kind, values, DT)
        state = prepare(kde, constraint)
        coords = draw_many(state, np.random.default_rng(11), 50)
        profiles = decode(basis, coords)
        assert profiles.shape == (50, N_T + 1)
        if kind == KIND_INIT_SPEED_ACCEL:
            np.testing.assert_allclose(profiles[:, 0], values[0], atol=1e-6)
            accel = (profiles[:, 1] - profiles[:, 0]) / DT
            np.testing.assert_allclose(accel, values[1], atol=1e-6)
        else:
            np.testing.assert_allclose(profiles[:, 0], values[0], atol=1e-6)
            np.testing.assert_allclose(profiles[:, -1], values[1], atol=1e-6)

    def test_zero_acceleration_flattens_first_step(self, fitted):
        basis, kde = fitted
        constraint = endpoint_constraint(basis, KIND_INIT_SPEED_ACCEL, (15.0, 0.0), DT)
        state = prepare(kde, constraint)
        profiles = decode(basis, draw_many(state, np.random.default_rng(12), 20))
        np.testing.assert_allclose(profiles[:, 0], profiles[:, 1], atol=1e-8)

    def test_needs_more_than_two_components(self):
        raw = profile_corpus(seed=13, n_vehicles=20)
        basis, _ = fit_reduced_basis(raw, 2)
        with pytest.raises(OverConstrained):
            endpoint_constraint(basis, KIND_INIT_END_SPEED, (10.0, 15.0), DT)

    def test_unknown_kind_rejected(self, fitted):
        basis, _ = fitted
        with pytest.raises(InvalidArgument):
            endpoint_constraint(basis, "sideways", (1.0, 2.0), DT)

    def test_constraint_matrix_matches_displayed_form(self, fitted):
        basis, _ = fitted
        c = endpoint_constraint(basis, KIND_INIT_SPEED_ACCEL, (12.0, 0.5), DT)
        weighted = basis.modes * basis.scales
        np.testing.assert_allclose(c.a, weighted[[0, 1], :], atol=1e-14)
        np.testing.assert_allclose(
            c.b,
            [12.0 - basis.mean[0], 12.0 + DT * 0.5 - basis.mean[1]],
            atol=1e-12,
        )
        c2 = endpoint_constraint(basis, KIND_INIT_END_SPEED, (12.0, 9.0), DT)
        np.testing.assert_allclose(c2.a, weighted[[0, -1], :], atol=1e-14)
        np.testing.assert_allclose(
            c2.b, [12.0 - basis.mean[0], 9.0 - basis.mean[-1]], atol=1e-12
        )
