"""Parameter laws and their expectation functionals."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cgmldp import param_laws as pl
from cgmldp.errors import ConfigError, DomainError

from oracles import expect, relative_entropy_sum

TWO_POINT = pl.FiniteDiscrete((1.0, 2.0), (0.5, 0.5))
POLY = pl.PolyInterval(1.0, 2.0, 3)
UNIF = pl.UniformInterval(0.5, 1.5)


def discrete_laws():
    atoms = st.lists(st.floats(0.1, 5.0), min_size=1, max_size=4, unique=True)
    return atoms.flatmap(lambda xs: st.lists(st.floats(0.05, 1.0), min_size=len(xs),
                                             max_size=len(xs)).map(
        lambda ws: pl.FiniteDiscrete(tuple(xs), tuple(np.array(ws) / sum(ws)))))


class TestConstruction:
    def test_ess_inf(self):
        assert pl.PointMass(0.5).ess_inf == 0.5
        assert POLY.ess_inf == 1.0
        assert TWO_POINT.ess_inf == 1.0

    def test_discrete_normalizes_and_sorts(self):
        law = pl.FiniteDiscrete((2.0, 1.0, 2.0, 3.0), (0.25, 0.5, 0.25, 0.0))
        assert law.atoms == (1.0, 2.0)
        np.testing.assert_allclose(law.probs, [0.5, 0.5])

    def test_probability_drift_rejected(self):
        with pytest.raises(ConfigError):
            pl.FiniteDiscrete((1.0, 2.0), (0.5, 0.6))

    def test_nonpositive_support_rejected(self):
        with pytest.raises(ConfigError):
            pl.PointMass(0.0)
        with pytest.raises(ConfigError):
            pl.UniformInterval(2.0, 1.0)

    @pytest.mark.parametrize("spec", [
        {"type": "delta", "x": 0.5},
        {"type": "discrete", "atoms": [[1.0, 0.5], [2.0, 0.5]]},
        {"type": "uniform", "lo": 0.5, "hi": 1.5},
        {"type": "poly", "lo": 1.0, "hi": 2.0, "k": 3},
    ])
    def test_spec_round_trip(self, spec):
        assert pl.law_to_spec(pl.law_from_spec(spec)) == spec

    def test_spec_missing_field_named(self):
        with pytest.raises(ConfigError, match="'hi'"):
            pl.law_from_spec({"type": "uniform", "lo": 1.0})

    def test_spec_unknown_type(self):
        with pytest.raises(ConfigError, match="type"):
            pl.law_from_spec({"type": "gamma"})


class TestMeanInvPow:
    def test_poly_second_moment_at_floor(self):
        np.testing.assert_allclose(pl.mean_inv_pow(POLY, -1.0, 2), 2.0, rtol=1e-12)

    def test_point_mass(self):
        assert pl.mean_inv_pow(pl.PointMass(1.0), 1.0, 2) == pytest.approx(0.25, rel=1e-15)

    def test_atom_at_shift_is_infinite(self):
        assert pl.mean_inv_pow(pl.PointMass(1.0), -1.0, 2) == math.inf

    def test_poly_third_moment(self):
        np.testing.assert_allclose(pl.mean_inv_pow(POLY, -1.0, 3), 4.0, rtol=1e-12)

    def test_poly_fourth_moment_diverges(self):
        assert pl.mean_inv_pow(POLY, -1.0, 4) == math.inf

    def test_below_floor_rejected(self):
        with pytest.raises(DomainError):
            pl.mean_inv_pow(POLY, -1.1, 1)

    @pytest.mark.parametrize("law", [UNIF, POLY, pl.PolyInterval(0.3, 0.9, 1)])
    @pytest.mark.parametrize("z", [-0.2, 0.0, 0.7])
    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_quadrature_matches_adaptive_oracle(self, law, z, k):
        ref = expect(law, lambda x: (x + z) ** -k)
        np.testing.assert_allclose(pl.mean_inv_pow(law, z, k), ref, rtol=1e-10)

    def test_uniform_closed_form(self):
        # E[1/X] for X uniform on (0.5, 1.5) is log 3
        np.testing.assert_allclose(pl.mean_inv_pow(UNIF, 0.0, 1), math.log(3.0), rtol=1e-13)

    @given(discrete_laws(), st.floats(0.0, 3.0), st.integers(1, 3))
    def test_discrete_matches_sum(self, law, z, k):
        ref = math.fsum(p * (x + z) ** -k for x, p in zip(law.atoms, law.probs))
        np.testing.assert_allclose(pl.mean_inv_pow(law, z, k), ref, rtol=1e-14)

    @given(st.floats(-0.45, 2.0), st.floats(0.01, 1.0))
    def test_strictly_decreasing_in_z(self, z, dz):
        assert pl.mean_inv_pow(UNIF, z + dz, 2) < pl.mean_inv_pow(UNIF, z, 2)


class TestRatios:
    def test_log_ratio_point_mass(self):
        np.testing.assert_allclose(pl.mean_log_ratio(pl.PointMass(0.5), -0.25, 0.5),
                                   math.log(3.0), rtol=1e-15)

    def test_log_ratio_two_point(self):
        ref = 0.5 * math.log(2.0) + 0.5 * math.log(1.5)
        np.testing.assert_allclose(pl.mean_log_ratio(TWO_POINT, 0.0, 1.0), ref, rtol=1e-15)
        np.testing.assert_allclose(ref, 0.549306, atol=1e-6)

    @pytest.mark.parametrize("law", [TWO_POINT, UNIF, POLY])
    def test_zero_lambda(self, law):
        assert pl.mean_log_ratio(law, 0.3, 0.0) == 0.0
        assert pl.mean_ratio(law, 0.3, 0.0) == 1.0

    def test_ratio_point_mass(self):
        assert pl.mean_ratio(pl.PointMass(0.5), 0.0, 1.0) == pytest.approx(3.0, rel=1e-15)

    def test_ratio_uniform(self):
        np.testing.assert_allclose(pl.mean_ratio(UNIF, 0.0, 1.0), 1 + math.log(3.0),
                                   rtol=1e-13)

    def test_log_ratio_infinite_only_with_atom_at_floor(self):
        assert pl.mean_log_ratio(TWO_POINT, -1.0, 0.5) == math.inf
        assert math.isfinite(pl.mean_log_ratio(UNIF, -0.5, 0.5))
        assert pl.mean_ratio(UNIF, -0.5, 0.5) == math.inf

    @pytest.mark.parametrize("law", [UNIF, POLY])
    def test_log_ratio_matches_oracle(self, law):
        z, lam = -law.lo + 0.01, 0.8
        ref = expect(law, lambda x: math.log((x + z + lam) / (x + z)))
        np.testing.assert_allclose(pl.mean_log_ratio(law, z, lam), ref, rtol=1e-10)

    def test_inv_prod_matches_oracle(self):
        ref = expect(POLY, lambda x: 1 / ((x - 0.9) * (x - 0.9 + 0.4)))
        np.testing.assert_allclose(pl.mean_inv_prod(POLY, -0.9, 0.4), ref, rtol=1e-10)

    @given(st.sampled_from([TWO_POINT, UNIF, POLY]), st.floats(0.0, 2.0), st.floats(0.01, 3.0))
    def test_jensen(self, law, z, lam):
        assert pl.mean_ratio(law, z, lam) >= math.exp(pl.mean_log_ratio(law, z, lam)) * (1 - 1e-14)

    def test_jensen_equality_for_point_mass(self):
        law = pl.PointMass(0.7)
        np.testing.assert_allclose(pl.mean_ratio(law, 0.1, 0.5),
                                   math.exp(pl.mean_log_ratio(law, 0.1, 0.5)), rtol=1e-15)

    @given(st.floats(0.0, 2.0), st.floats(0.01, 1.0), st.floats(0.01, 2.0))
    def test_log_ratio_monotone(self, z, dz, lam):
        assert pl.mean_log_ratio(POLY, z + dz, lam) < pl.mean_log_ratio(POLY, z, lam)
        assert pl.mean_log_ratio(POLY, z, lam + dz) > pl.mean_log_ratio(POLY, z, lam)


class TestVarianceAndMoments:
    def test_var_point_mass(self):
        assert pl.var_inv(pl.PointMass(0.8), 0.3) == 0.0

    def test_var_two_point(self):
        np.testing.assert_allclose(pl.var_inv(TWO_POINT, 0.0), 1 / 16, rtol=1e-14)

    def test_var_poly_at_floor(self):
        np.testing.assert_allclose(pl.var_inv(POLY, -1.0), 2 / 9, rtol=1e-12)

    def test_inverse_moment_finite(self):
        assert not pl.inverse_moment_finite(pl.PointMass(1.0), 1)
        assert pl.inverse_moment_finite(POLY, 2)
        assert pl.inverse_moment_finite(POLY, 3)
        assert not pl.inverse_moment_finite(POLY, 4)
        assert not pl.inverse_moment_finite(UNIF, 1)


class TestEntropyAndTilts:
    def test_entropy_self(self):
        assert pl.relative_entropy(TWO_POINT, TWO_POINT) == 0.0

    def test_entropy_point_in_support(self):
        np.testing.assert_allclose(pl.relative_entropy(pl.PointMass(2.0), TWO_POINT),
                                   math.log(2.0), rtol=1e-15)

    def test_entropy_outside_support(self):
        assert pl.relative_entropy(pl.PointMass(3.0), TWO_POINT) == math.inf

    @given(discrete_laws())
    def test_entropy_matches_sum_and_is_nonnegative(self, mu):
        rng = np.random.default_rng(42)
        nu = pl.FiniteDiscrete(mu.atoms, tuple(rng.dirichlet(np.ones(len(mu.atoms)))))
        h = pl.relative_entropy(nu, mu)
        assert h >= 0
        np.testing.assert_allclose(h, relative_entropy_sum(nu.atoms, nu.probs, mu.atoms,
                                                           mu.probs), atol=1e-14)

    def test_tilt_point_mass(self):
        assert pl.tilt_ratio(pl.PointMass(0.7), 0.1, 0.4) == pl.PointMass(0.7)
        assert pl.tilt_mean(pl.PointMass(0.7)) == pl.PointMass(0.7)

    def test_tilt_ratio_two_point(self):
        nu = pl.tilt_ratio(TWO_POINT, 0.0, 1.0)
        np.testing.assert_allclose(nu.probs, [4 / 7, 3 / 7], rtol=1e-14)

    def test_tilt_zero_lambda_identity(self):
        assert pl.tilt_ratio(TWO_POINT, 0.3, 0.0) == TWO_POINT

    def test_tilt_mean_two_point(self):
        nu = pl.tilt_mean(TWO_POINT)
        np.testing.assert_allclose(nu.probs, [1 / 3, 2 / 3], rtol=1e-14)
        ref = (1 / 3) * math.log(2 / 3) + (2 / 3) * math.log(4 / 3)
        np.testing.assert_allclose(pl.relative_entropy(nu, TWO_POINT), ref, rtol=1e-14)
        np.testing.assert_allclose(ref, 0.056633, atol=1e-6)

    def test_continuous_tilt_expectations(self):
        nu = pl.tilt_ratio(UNIF, 0.0, 1.0)
        norm = 1 + math.log(3.0)
        ref = expect(UNIF, lambda x: (x + 1) / x / x) / norm
        np.testing.assert_allclose(pl.mean_inv_pow(nu, 0.0, 1), ref, rtol=1e-10)

    def test_continuous_tilt_entropy(self):
        nu = pl.tilt_mean(UNIF)
        ref = expect(UNIF, lambda x: x * math.log(x))
        np.testing.assert_allclose(pl.relative_entropy(nu, UNIF), ref, rtol=1e-10)

    def test_infinite_normalizer_rejected(self):
        with pytest.raises(DomainError):
            pl.tilt_ratio(TWO_POINT, -1.0, 0.5)


class TestTiltedLawProperties:
    @settings(max_examples=25)
    @given(st.floats(-0.4, 1.0), st.floats(0.05, 2.0), st.integers(1, 3))
    def test_tilt_moments_match_oracle(self, z, lam, k):
        nu = pl.tilt_ratio(POLY, z, lam)
        norm = expect(POLY, lambda x: (x + z + lam) / (x + z))
        ref = expect(POLY, lambda x: (x + z + lam) / (x + z) * x**-k) / norm
        np.testing.assert_allclose(pl.mean_inv_pow(nu, 0.0, k), ref, rtol=1e-9)
