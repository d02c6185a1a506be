"""Tests for transforms, panel assembly, and regression matrices."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from factorvar import (ConfigError, DataError, DegenerateSeriesError,
                       RawSeries, apply_transform, ar_residual_std,
                       build_lag_matrix, build_panel)
from factorvar.data import TRANSFORM_TRIM, PanelData


class TestApplyTransform:
    def test_log_difference_of_geometric_sequence(self):
        out = apply_transform([1.0, np.e, np.e**2], 5)
        np.testing.assert_allclose(out, [1.0, 1.0], atol=1e-12)

    def test_difference_of_constant(self):
        out = apply_transform([5.0, 5.0, 5.0], 2)
        np.testing.assert_allclose(out, [0.0, 0.0])

    def test_growth_rate_difference_hand_computed(self):
        # growth rates are 110/100-1 = 0.1 and 121/110-1 = 0.1, difference 0
        out = apply_transform([100.0, 110.0, 121.0], 7)
        assert out.shape == (1,)
        np.testing.assert_allclose(out, [0.0], atol=1e-12)

    @pytest.mark.parametrize("tcode,trim", sorted(TRANSFORM_TRIM.items()))
    def test_output_length_matches_trim(self, tcode, trim):
        rng = np.random.default_rng(0)
        y = np.exp(rng.normal(size=25) * 0.1)  # positive, safe for log codes
        assert apply_transform(y, tcode).size == 25 - trim

    def test_log_code_rejects_nonpositive_with_index(self):
        with pytest.raises(DataError, match="index 2"):
            apply_transform([1.0, 2.0, -1.0, 3.0], 5)

    def test_unknown_tcode(self):
        with pytest.raises(ConfigError):
            apply_transform([1.0, 2.0, 3.0], 8)

    @settings(max_examples=50, deadline=None)
    @given(tcode=st.sampled_from(sorted(TRANSFORM_TRIM)),
           n=st.integers(min_value=5, max_value=40),
           seed=st.integers(min_value=0, max_value=2**16))
    def test_finite_output_for_positive_series(self, tcode, n, seed):
        rng = np.random.default_rng(seed)
        y = np.exp(rng.normal(size=n) * 0.2) + 0.5
        out = apply_transform(y, tcode)
        assert out.size == n - TRANSFORM_TRIM[tcode]
        assert np.all(np.isfinite(out))


class TestArResidualStd:
    def test_white_noise_scale_recovered(self):
        rng = np.random.default_rng(7)
        y = rng.normal(0.0, 1.0, size=10_000)
        assert abs(ar_residual_std(y, 2) - 1.0) < 0.05

    def test_scaled_noise(self):
        rng = np.random.default_rng(8)
        y = rng.normal(0.0, 2.0, size=10_000)
        assert abs(ar_residual_std(y, 2) - 2.0) < 0.1

    def test_deterministic_path_is_degenerate(self):
        y = 0.5 ** np.arange(50)
        with pytest.raises(DegenerateSeriesError):
            ar_residual_std(y, 1)

    def test_too_short(self):
        with pytest.raises(DataError):
            ar_residual_std([1.0, 2.0, 1.5], 2)


def _series(code, values, tcode, sizes):
    return RawSeries(code=code, values=np.asarray(values, float), tcode=tcode,
                     sizes=frozenset(sizes))


class TestBuildPanel:
    def make_manifest(self, n_obs=30):
        rng = np.random.default_rng(3)
        base = np.exp(np.cumsum(rng.normal(0, 0.01, size=n_obs)) + 1.0)
        return [
            _series("GROWTH", base, 5, {"S", "M"}),
            _series("RATE", rng.normal(2.0, 0.3, size=n_obs), 2, {"S", "M"}),
            _series("PRICES", base * 2.0, 6, {"S", "M"}),
            _series("EXTRA", rng.normal(size=n_obs), 1, {"M"}),
        ]

    def test_subset_selection_and_focus(self):
        raw = self.make_manifest()
        panel = build_panel(raw, "S", ["GROWTH", "RATE", "PRICES"])
        assert panel.M == 3
        assert panel.names == ["GROWTH", "RATE", "PRICES"]
        assert panel.focus == (0, 1, 2)
        larger = build_panel(raw, "M", ["GROWTH", "RATE", "PRICES"])
        assert larger.M == 4

    def test_common_sample_alignment(self):
        # encode time in values: after trim all columns must agree on dates.
        n = 20
        t = np.arange(n, dtype=float)
        raw = [
            _series("A", t, 1, {"S"}),          # trim 0
            _series("B", 100.0 + t, 2, {"S"}),  # trim 1, diff == 1
            _series("C", t**2, 3, {"S"}),       # trim 2
        ]
        panel = build_panel(raw, "S", ["A", "B", "C"])
        # max trim is 2, so column A starts at t=2
        assert panel.T == n - 2
        np.testing.assert_allclose(panel.data[:, 0], t[2:])
        np.testing.assert_allclose(panel.data[:, 1], np.ones(n - 2))

    def test_missing_focus_is_config_error(self):
        raw = self.make_manifest()
        with pytest.raises(ConfigError, match="EXTRA"):
            build_panel(raw, "S", ["GROWTH", "RATE", "EXTRA"])

    def test_ragged_lengths_are_data_error(self):
        raw = self.make_manifest()
        raw.append(_series("SHORT", np.ones(10), 1, {"S"}))
        with pytest.raises(DataError, match="ragged"):
            build_panel(raw, "S", ["GROWTH", "RATE", "PRICES"])


class TestBuildLagMatrix:
    def test_shapes(self):
        panel = PanelData(names=["a", "b"], data=np.arange(10.0).reshape(5, 2),
                          focus=(0, 1, 1))
        reg = build_lag_matrix(panel, 2)
        assert reg.Y.shape == (3, 2)
        assert reg.X.shape == (3, 5)
        np.testing.assert_allclose(reg.X[:, -1], 1.0)

    def test_lag_layout(self):
        values = np.arange(12.0).reshape(6, 2)
        reg = build_lag_matrix(values, 2)
        # row t of X: (y_{t-1}, y_{t-2}, 1)
        np.testing.assert_allclose(reg.X[0], [2.0, 3.0, 0.0, 1.0, 1.0])
        np.testing.assert_allclose(reg.Y[0], [4.0, 5.0])

    def test_noiseless_ar1_recovery(self):
        y = np.empty(20)
        y[0] = 1.0
        for t in range(1, 20):
            y[t] = 0.5 * y[t - 1]
        reg = build_lag_matrix(y[:, None], 1)
        coef, *_ = np.linalg.lstsq(reg.X, reg.Y, rcond=None)
        assert abs(coef[0, 0] - 0.5) < 1e-10

    def test_noiseless_var1_recovery(self):
        rng = np.random.default_rng(11)
        A = rng.uniform(-0.3, 0.3, size=(3, 3))
        y = np.zeros((40, 3))
        y[0] = rng.normal(size=3)
        for t in range(1, 40):
            y[t] = A @ y[t - 1]
        reg = build_lag_matrix(y, 1)
        coef, *_ = np.linalg.lstsq(reg.X, reg.Y, rcond=None)
        np.testing.assert_allclose(coef[:3].T, A, atol=1e-8)

    def test_t_equal_p_is_data_error(self):
        with pytest.raises(DataError):
            build_lag_matrix(np.ones((2, 2)), 2)
