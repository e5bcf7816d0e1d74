import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from weakflux.errors import UnknownOperator, VanishingOverlap, ZeroNorm
from weakflux.numerics import integrate_semi_infinite
from weakflux.states import CoherentState1D, coherent_amplitude
from weakflux.weakcore import (
    TIME,
    OverlapModel,
    commutator_anticommutator_means,
    gap_tolerance,
    time_average,
    time_density,
    uncertainty_gap,
    weak_value,
    xp_weak_commutator_kernel,
)


def gaussian_overlap(centre=5.0, sigma=0.5, phase=0.0):
    """Overlap whose squared modulus is a Gaussian of standard deviation sigma."""

    def overlap(t):
        t = np.asarray(t, dtype=float)
        return np.exp(-((t - centre) ** 2) / (4 * sigma**2) + 1j * (phase + 0.3 * t))

    return overlap


def test_eigenstate_post_selection_gives_conjugate_eigenvalue():
    a = 2.0 - 1.5j
    overlap = gaussian_overlap()
    m = OverlapModel(overlap, {"A": lambda t: np.conj(a) * overlap(t)})
    np.testing.assert_allclose(weak_value(m, "A", np.linspace(0.1, 9, 7)), np.conj(a))
    moments = time_average(m, ["A"])
    assert moments.abs_second_moments["A"] < 1e-12


def test_time_weak_value_is_time():
    m = OverlapModel(gaussian_overlap())
    t = np.array([0.5, 2.0, 7.25])
    np.testing.assert_allclose(weak_value(m, TIME, t), t)
    assert weak_value(m, TIME, 3.0) == pytest.approx(3.0)


def test_vanishing_overlap_raises():
    m = OverlapModel(lambda t: np.zeros(np.shape(t)), {"A": lambda t: np.ones(np.shape(t))})
    with pytest.raises(VanishingOverlap):
        weak_value(m, "A", 1.0)


def test_unknown_operator_raises():
    m = OverlapModel(gaussian_overlap())
    with pytest.raises(UnknownOperator):
        weak_value(m, "nope", 1.0)
    with pytest.raises(UnknownOperator):
        uncertainty_gap(time_average(m, []), "nope", TIME)


def test_time_density_normalisation_against_error_function():
    m = OverlapModel(lambda t: np.exp(-((np.asarray(t) - 1) ** 2) / 2))
    density, norm = time_density(m)
    assert norm == pytest.approx(math.sqrt(math.pi) * (1 + math.erf(1)) / 2, rel=1e-10)
    t = np.linspace(0, 3, 3001)
    assert t[np.argmax(density(t))] == pytest.approx(1.0)


def test_time_density_integrates_to_one():
    density, _ = time_density(OverlapModel(gaussian_overlap(centre=1.0, sigma=0.7)))
    assert integrate_semi_infinite(density).real == pytest.approx(1.0, abs=1e-8)


def test_time_density_phase_invariant():
    t = np.linspace(0, 10, 101)
    d0, _ = time_density(OverlapModel(gaussian_overlap(phase=0.0)))
    d1, _ = time_density(OverlapModel(gaussian_overlap(phase=1.234)))
    np.testing.assert_allclose(d0(t), d1(t), rtol=1e-12)


def test_zero_overlap_raises_zero_norm():
    with pytest.raises(ZeroNorm):
        time_density(OverlapModel(lambda t: np.zeros(np.shape(t))))


def test_constant_weak_value_has_zero_variance():
    overlap = gaussian_overlap()
    c = 0.7 + 2j
    m = OverlapModel(overlap, {"A": lambda t: c * overlap(t)})
    moments = time_average(m, ["A"])
    assert moments.means["A"] == pytest.approx(c, rel=1e-12)
    assert moments.abs_second_moments["A"] == pytest.approx(0.0, abs=1e-12)


def test_gaussian_time_moments():
    moments = time_average(OverlapModel(gaussian_overlap(centre=5.0, sigma=0.5)), [])
    assert moments.mean_time == pytest.approx(5.0, rel=1e-10)
    assert moments.abs_second_moments[TIME] == pytest.approx(0.25, rel=1e-10)


def test_truncated_gaussian_time_moments():
    # half-normal oracle: density restricted to t > 0 with centre 0
    moments = time_average(OverlapModel(gaussian_overlap(centre=0.0, sigma=1.0)), [])
    assert moments.mean_time == pytest.approx(math.sqrt(2 / math.pi), rel=1e-10)
    assert moments.abs_second_moments[TIME] == pytest.approx(1 - 2 / math.pi, rel=1e-10)


def _pair_model(a_fn, b_fn, overlap=None):
    overlap = overlap or gaussian_overlap(centre=3.0, sigma=0.8)
    return OverlapModel(
        overlap,
        {"A": lambda t: a_fn(t) * overlap(t), "B": lambda t: b_fn(t) * overlap(t)},
    )


def test_proportional_fluctuations_close_the_gap():
    c = 0.4 - 1.3j
    m = _pair_model(lambda t: np.sin(t) + 1j * t**2, lambda t: 5 + c * (np.sin(t) + 1j * t**2))
    moments = time_average(m, ["A", "B"])
    gap = uncertainty_gap(moments, "A", "B")
    assert abs(gap) <= gap_tolerance(moments, "A", "B")
    assert moments.abs_second_moments["A"] > 0.1


def test_zero_variance_factor_gives_zero_gap():
    m = _pair_model(lambda t: np.cos(t), lambda t: np.full(np.shape(t), 3.0 + 0j))
    moments = time_average(m, ["A", "B"])
    assert uncertainty_gap(moments, "A", "B") == pytest.approx(0.0, abs=1e-14)


coefficient = st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False)


@settings(max_examples=30, deadline=None)
@given(a=st.lists(coefficient, min_size=3, max_size=3), b=st.lists(coefficient, min_size=3, max_size=3))
def test_gap_is_non_negative_for_random_smooth_weak_values(a, b):
    def series(c):
        return lambda t: c[0] + c[1] * np.sin(t) + c[2] * np.cos(2 * t)

    moments = time_average(_pair_model(series(a), series(b)), ["A", "B"])
    assert uncertainty_gap(moments, "A", "B") >= -gap_tolerance(moments, "A", "B") - 1e-300


@settings(max_examples=30, deadline=None)
@given(a=st.lists(coefficient, min_size=3, max_size=3), b=st.lists(coefficient, min_size=3, max_size=3))
def test_covariance_is_hermitian_and_positive(a, b):
    def series(c):
        return lambda t: c[0] * t + c[1] * np.sin(3 * t) + c[2] * np.exp(-t)

    moments = time_average(_pair_model(series(a), series(b)), ["A", "B"])
    names = [TIME, "A", "B"]
    matrix = np.array([[moments.covariances[x, y] for y in names] for x in names])
    np.testing.assert_allclose(matrix, matrix.conj().T, atol=1e-12)
    scale = max(1.0, np.abs(matrix).max())
    assert np.linalg.eigvalsh(matrix).min() >= -1e-10 * scale


def test_covariance_matches_independent_quadrature():
    overlap = gaussian_overlap(centre=3.0, sigma=0.8)
    a_fn = lambda t: np.sin(t) + 0.5j * t  # noqa: E731
    b_fn = lambda t: np.exp(-0.2 * t) - 1j * np.cos(t)  # noqa: E731
    moments = time_average(_pair_model(a_fn, b_fn, overlap), ["A", "B"])

    def weight(t):
        return abs(overlap(t)) ** 2

    def average(f):
        def part(g):
            return quad(lambda t: g(weight(t) * f(t)), 0, 40, epsabs=0, epsrel=1e-12, limit=200)[0]

        return complex(part(np.real), part(np.imag))

    norm = average(lambda t: 1.0).real
    mean_a, mean_b = average(a_fn) / norm, average(b_fn) / norm
    oracle = average(lambda t: (a_fn(t) - mean_a) * np.conj(b_fn(t) - mean_b)) / norm
    assert moments.covariances["A", "B"] == pytest.approx(oracle, rel=1e-9)


def test_self_commutator_vanishes():
    moments = time_average(_pair_model(lambda t: np.sin(t) + 1j * t, np.cos), ["A", "B"])
    comm, anti = commutator_anticommutator_means(moments, "A", "A")
    assert comm == 0
    assert anti.real == pytest.approx(2 * moments.abs_second_moments["A"])


def test_real_weak_values_commute():
    moments = time_average(_pair_model(np.sin, np.cos), ["A", "B"])
    comm, anti = commutator_anticommutator_means(moments, "A", "B")
    assert abs(comm) < 1e-14
    assert anti.imag == 0


def test_commutator_axes():
    moments = time_average(_pair_model(lambda t: np.exp(1j * t), lambda t: t**2), ["A", "B"])
    comm, anti = commutator_anticommutator_means(moments, "A", "B")
    assert comm.real == 0 and anti.imag == 0


def test_custom_density_weights_the_weak_values():
    overlap = gaussian_overlap(centre=2.0, sigma=0.3)

    def density(t):
        return np.exp(-((np.asarray(t) - 4.0) ** 2) / 0.5)

    m = OverlapModel(overlap, density=density, peak_times=(4.0,))
    moments = time_average(m, [])
    assert moments.mean_time == pytest.approx(4.0, rel=1e-10)
    assert moments.abs_second_moments[TIME] == pytest.approx(0.25, rel=1e-10)


def test_xp_kernel_vanishes_at_origin():
    phi = CoherentState1D(1.0, 0.0)
    assert xp_weak_commutator_kernel(phi, 0.0, 0.0) == 0
    assert xp_weak_commutator_kernel(phi, 1.0, 0.0) == 0


def test_xp_kernel_diagonal_value():
    phi = CoherentState1D(1.0, 0.0)
    expected = -2j * abs(coherent_amplitude(phi, 1.0)) ** 2
    assert xp_weak_commutator_kernel(phi, 1.0, 1.0) == pytest.approx(expected, rel=1e-14)


@settings(max_examples=30, deadline=None)
@given(
    x=st.floats(-3, 3),
    xp=st.floats(-3, 3),
    centre=st.floats(-1, 1),
    momentum=st.floats(-2, 2),
)
def test_xp_kernel_is_anti_hermitian(x, xp, centre, momentum):
    phi = CoherentState1D(1.3, centre, momentum)
    k = xp_weak_commutator_kernel(phi, x, xp)
    k_swapped = xp_weak_commutator_kernel(phi, xp, x)
    assert k == pytest.approx(-np.conj(k_swapped), abs=1e-14)
