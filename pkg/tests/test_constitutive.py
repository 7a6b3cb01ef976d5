"""
Test constitutive functions
"""
import numpy as np
import pytest
from hypothesis import given, settings as hypothesis_settings
from hypothesis import strategies as st

from thermotumor.core.exceptions import KirchhoffInversionError
from thermotumor.services import constitutive
from thermotumor.services.constitutive import (
    conductivity,
    conductivity_prime,
    double_well,
    double_well_prime,
    double_well_prime_concave,
    double_well_prime_convex,
    double_well_second_convex,
    get_regulator,
    kirchhoff,
    kirchhoff_inverse,
    register_regulator,
    regulator_h,
    regulator_h_prime,
)


class TestDoubleWell:
    """Test the double-well potential and its convex-concave split"""

    def test_wells_and_barrier(self):
        """Test F vanishes at both wells and peaks at 1/2"""
        assert double_well(0.0) == 0.0
        assert double_well(1.0) == 0.0
        assert double_well(0.5) == pytest.approx(0.0625)

    def test_split_sums_to_derivative(self):
        """Test F′₊ + F′₋ = F′"""
        phi = np.linspace(-1.0, 2.0, 31)
        split = double_well_prime_convex(phi) + double_well_prime_concave(phi)
        np.testing.assert_allclose(split, double_well_prime(phi), rtol=0, atol=1e-12)

    def test_convex_part_is_monotone(self):
        """Test F″₊ ≥ 2 everywhere"""
        phi = np.linspace(-3.0, 3.0, 61)
        assert np.all(double_well_second_convex(phi) >= 2.0)

    def test_derivative_matches_difference_quotient(self):
        """Test F′ against a central difference"""
        phi = np.linspace(-0.5, 1.5, 9)
        delta = 1e-6
        quotient = (double_well(phi + delta) - double_well(phi - delta)) / (2 * delta)
        np.testing.assert_allclose(double_well_prime(phi), quotient, atol=1e-8)

    def test_scalar_in_float_out(self):
        """Test scalar inputs give plain floats"""
        assert isinstance(double_well_prime(0.3), float)
        assert isinstance(double_well(np.array([0.3])), np.ndarray)


class TestRegulator:
    """Test the regulator registry and the shipped regulators"""

    @pytest.mark.parametrize("name", ["smoothstep", "saturating"])
    def test_regulator_properties(self, name):
        """Test h(0) = 0, h nondecreasing, h′ within its slope bound"""
        regulator = get_regulator(name)
        r = np.linspace(-1.0, 3.0, 401)
        values = regulator.value(r)
        assert regulator.value(np.array([0.0]))[0] == 0.0
        assert np.all(np.diff(values) >= 0.0)
        assert np.all(regulator.derivative(r) <= regulator.slope_bound + 1e-12)
        assert np.all(regulator.derivative(r) >= 0.0)

    @pytest.mark.parametrize("name", ["smoothstep", "saturating"])
    def test_derivative_matches_difference_quotient(self, name):
        """Test h′ against a central difference"""
        r = np.array([0.1, 0.3, 0.5, 0.8, 1.7])
        delta = 1e-6
        quotient = (regulator_h(r + delta, name) - regulator_h(r - delta, name)) / (2 * delta)
        np.testing.assert_allclose(regulator_h_prime(r, name), quotient, atol=1e-7)

    def test_smoothstep_saturates(self):
        """Test the smoothstep regulator is 1 for φ ≥ 1"""
        assert regulator_h(1.0) == 1.0
        assert regulator_h(4.0) == 1.0
        assert regulator_h(0.5) == pytest.approx(0.5)

    def test_unknown_regulator(self):
        """Test an unknown name is rejected"""
        with pytest.raises(ValueError) as exc_info:
            get_regulator("tanh")

        assert "unknown regulator" in str(exc_info.value)

    def test_register_regulator(self, monkeypatch):
        """Test a registered regulator is usable and names cannot be reused"""
        monkeypatch.setattr(constitutive, "_REGULATORS", dict(constitutive._REGULATORS))

        def linear_ramp(r):
            return np.clip(r, 0.0, 1.0)

        def linear_ramp_prime(r):
            return np.where((r > 0.0) & (r < 1.0), 1.0, 0.0)

        register_regulator("ramp", linear_ramp, linear_ramp_prime, 1.0)
        assert regulator_h(0.25, "ramp") == 0.25

        with pytest.raises(ValueError) as exc_info:
            register_regulator("ramp", linear_ramp, linear_ramp_prime, 1.0)

        assert "already registered" in str(exc_info.value)

    def test_register_rejects_nonpositive_slope_bound(self, monkeypatch):
        """Test slope_bound must be positive"""
        monkeypatch.setattr(constitutive, "_REGULATORS", dict(constitutive._REGULATORS))

        with pytest.raises(ValueError):
            register_regulator("flat", np.zeros_like, np.zeros_like, 0.0)


class TestKirchhoff:
    """Test conductivity, the Kirchhoff transform and its inverse"""

    def test_conductivity_bounded_below(self):
        """Test κ ≥ 1 for all θ"""
        theta = np.linspace(-5.0, 5.0, 101)
        assert np.all(conductivity(theta, 2.0) >= 1.0)
        assert conductivity(0.0, 3.0) == 1.0

    def test_kirchhoff_is_odd(self):
        """Test K(−θ) = −K(θ)"""
        theta = np.linspace(0.0, 4.0, 17)
        np.testing.assert_array_equal(kirchhoff(-theta, 2.5), -kirchhoff(theta, 2.5))

    def test_kirchhoff_derivative_is_conductivity(self):
        """Test K′ = κ and κ′ against central differences"""
        theta = np.array([-1.5, -0.2, 0.3, 1.0, 2.2])
        delta = 1e-6
        k_quotient = (kirchhoff(theta + delta, 3.0, 0.7) - kirchhoff(theta - delta, 3.0, 0.7)) / (2 * delta)
        np.testing.assert_allclose(k_quotient, conductivity(theta, 3.0, 0.7), rtol=1e-8)
        kappa_quotient = (conductivity(theta + delta, 3.0, 0.7) - conductivity(theta - delta, 3.0, 0.7)) / (2 * delta)
        np.testing.assert_allclose(kappa_quotient, conductivity_prime(theta, 3.0, 0.7), rtol=1e-7)

    def test_kirchhoff_closed_form(self):
        """Test K(1) = 1 + κ₀/(q + 1)"""
        assert kirchhoff(1.0, 2.0) == pytest.approx(1.0 + 1.0 / 3.0)

    @given(
        u=st.floats(min_value=-1e6, max_value=1e6, allow_nan=False),
        q=st.floats(min_value=2.0, max_value=8.0),
    )
    @hypothesis_settings(max_examples=200, deadline=None)
    def test_inverse_recovers_argument(self, u, q):
        """Test K(K⁻¹(u)) = u"""
        theta = kirchhoff_inverse(u, q)
        assert isinstance(theta, float)
        assert abs(kirchhoff(theta, q) - u) <= 1e-10 * (1.0 + abs(u))
        assert abs(theta) <= abs(u)

    @pytest.mark.parametrize("q", [2.0, 8.0])
    @pytest.mark.parametrize("u", [1e5, 1e6, 1e10, 1e20, 1e100, -1e20])
    def test_inverse_of_large_arguments(self, u, q):
        """Test large |u| converges to a modest root within float resolution"""
        theta = kirchhoff_inverse(u, q)

        assert np.isfinite(theta)
        assert np.sign(theta) == np.sign(u)
        assert abs(kirchhoff(theta, q) - u) <= 1e-12 * abs(u)
        assert abs(theta) <= ((q + 1.0) * abs(u)) ** (1.0 / (q + 1.0))

    def test_inverse_of_large_argument_closed_form(self):
        """Test u = 1e5, q = 8 against the dominant-term estimate θ ≈ (9u)^(1/9)"""
        theta = kirchhoff_inverse(1e5, 8.0, 1e-12)

        assert theta == pytest.approx(9e5 ** (1.0 / 9.0), rel=1e-4)

    def test_inverse_without_conductivity_scale(self):
        """Test κ₀ = 0 makes K the identity"""
        assert kirchhoff_inverse(-12.5, 3.0, scale=0.0) == -12.5

    def test_inverse_on_arrays(self):
        """Test vectorised inversion"""
        theta = np.linspace(-3.0, 3.0, 13)
        recovered = kirchhoff_inverse(kirchhoff(theta, 2.0), 2.0)
        np.testing.assert_allclose(recovered, theta, atol=1e-11)

    def test_inverse_iteration_limit(self):
        """Test KirchhoffInversionError when the iteration cap is too small"""
        with pytest.raises(KirchhoffInversionError) as exc_info:
            kirchhoff_inverse(1e6, 2.0, max_iter=1)

        assert exc_info.value.context["q"] == 2.0
        assert exc_info.value.context["residual"] > 0.0

    def test_inverse_rejects_nonpositive_tolerance(self):
        """Test tol must be positive"""
        with pytest.raises(ValueError):
            kirchhoff_inverse(1.0, 2.0, tol=0.0)
