import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from weakflux.errors import VanishingOverlap
from weakflux.scatter1d import GaussianPair, ScatterConfig, exact_weak_values, overlap_model
from weakflux.states import CoherentState1D
from weakflux.timeenergy import (
    energy_weak_value,
    time_energy_commutator_mean,
    time_energy_uncertainty_report,
)
from weakflux.weakcore import OverlapModel


def _stationary(energy, hbar=1.0):
    def overlap(t):
        t = np.asarray(t, dtype=float)
        return np.exp(-1j * energy * t / hbar - (t - 3.0) ** 2)

    return OverlapModel(overlap, hbar=hbar)


def _overlapping_pair(hbar=1.0):
    return GaussianPair(
        pre=CoherentState1D(1.0, -1.0, 10.0, hbar),
        post=CoherentState1D(1.5, 1.0, 10.2, hbar),
        hbar=hbar,
    )


def test_stationary_phase_energy_by_finite_differences():
    energy = 2.5
    t = np.array([2.0, 3.0, 4.0])
    expected = energy + 1j * (-2 * (t - 3.0))
    np.testing.assert_allclose(energy_weak_value(_stationary(energy), t), expected, rtol=1e-6, atol=1e-8)


def test_energy_weak_value_is_kinetic_weak_value_for_free_packet():
    c = ScatterConfig.from_values()
    t = np.array([5.0, 20.0, 40.0])
    kinetic = exact_weak_values(c, t)[2]
    np.testing.assert_allclose(energy_weak_value(overlap_model(c), t), kinetic, rtol=1e-12)


def test_finite_difference_energy_matches_analytic_derivative():
    c = _overlapping_pair()
    analytic = overlap_model(c)
    numeric = OverlapModel(analytic.overlap, hbar=analytic.hbar)
    t = np.array([0.1, 0.4, 1.0])
    np.testing.assert_allclose(
        energy_weak_value(numeric, t), energy_weak_value(analytic, t), rtol=1e-6
    )


def test_vanishing_overlap_raises():
    with pytest.raises(VanishingOverlap):
        energy_weak_value(OverlapModel(lambda t: np.zeros(np.shape(t))), 1.0)


def test_commutator_is_i_hbar_without_initial_overlap():
    assert time_energy_commutator_mean(overlap_model(ScatterConfig.from_values())) == pytest.approx(
        1j, abs=1e-6
    )


def test_commutator_is_i_hbar_for_other_hbar():
    c = ScatterConfig.from_values(hbar=2.0, gamma=0.01, p_i=20.0, gamma_f=100.0)
    assert time_energy_commutator_mean(overlap_model(c)) == pytest.approx(2j, abs=2e-6)


def test_commutator_vanishes_for_pure_decay():
    m = OverlapModel(lambda t: np.exp(-np.asarray(t, dtype=float) / 2))
    assert time_energy_commutator_mean(m) == pytest.approx(0.0, abs=1e-10)
    report = time_energy_uncertainty_report(m)
    assert report.normalization == pytest.approx(1.0, rel=1e-10)
    assert report.mean_time == pytest.approx(1.0, rel=1e-10)
    assert report.initial_overlap_sq == pytest.approx(1.0)
    assert report.bound_rhs == pytest.approx(0.0, abs=1e-18)


def test_report_without_initial_overlap_has_standard_bound():
    report = time_energy_uncertainty_report(overlap_model(ScatterConfig.from_values()))
    assert report.initial_overlap_sq < 1e-30
    assert report.bound_rhs == pytest.approx(0.25, rel=1e-12)
    assert report.product_lhs >= report.bound_rhs


def test_imaginary_mean_energy_tracks_initial_overlap():
    c = _overlapping_pair()
    report = time_energy_uncertainty_report(overlap_model(c))
    assert report.initial_overlap_sq > 1e-3
    expected = -report.initial_overlap_sq / (2 * report.normalization)
    assert report.mean_energy.imag == pytest.approx(expected, abs=1e-8)


def test_commutator_with_initial_overlap_follows_closed_form():
    report = time_energy_uncertainty_report(overlap_model(_overlapping_pair()))
    factor = 1 - report.mean_time * report.initial_overlap_sq / report.normalization
    assert report.commutator_mean == pytest.approx(1j * factor, abs=1e-6)
    assert abs(factor - 1) > 1e-2


def test_custom_density_models_are_rejected():
    m = OverlapModel(lambda t: np.exp(-t), density=lambda t: np.exp(-t))
    with pytest.raises(ValueError):
        time_energy_uncertainty_report(m)


@settings(max_examples=20, deadline=None)
@given(
    gamma=st.floats(0.5, 2.0),
    gamma_f=st.floats(0.5, 2.0),
    x_i=st.floats(-3.0, 0.0),
    x_f=st.floats(0.0, 3.0),
    p_i=st.floats(10.0, 15.0),
    offset=st.floats(-1.0, 1.0),
    hbar=st.floats(0.8, 1.25),
)
def test_bound_and_identity_hold_for_random_gaussian_pairs(gamma, gamma_f, x_i, x_f, p_i, offset, hbar):
    pair = GaussianPair(
        pre=CoherentState1D(gamma, x_i, p_i, hbar),
        post=CoherentState1D(gamma_f, x_f, p_i + offset, hbar),
        hbar=hbar,
    )
    # raises on a violated identity or bound
    report = time_energy_uncertainty_report(overlap_model(pair))
    assert report.product_lhs >= report.bound_rhs * (1 - 1e-8)
