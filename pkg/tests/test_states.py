import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from weakflux.states import (
    CoherentState1D,
    PhysicalSGParams,
    SGConfig,
    SpinorAmplitudes,
    coherent_amplitude,
    reduce_units,
)


def test_coherent_peak_value():
    s = CoherentState1D(gamma=1.0, center=0.0)
    assert coherent_amplitude(s, 0.0) == pytest.approx(math.pi**-0.25)
    assert math.pi**-0.25 == pytest.approx(0.751126, abs=1e-6)


def test_coherent_amplitude_with_momentum():
    s = CoherentState1D(gamma=1.0, center=0.0, momentum=1.0)
    expected = math.pi**-0.25 * math.exp(-0.5) * complex(math.cos(1), math.sin(1))
    assert coherent_amplitude(s, 1.0) == pytest.approx(expected, rel=1e-14)


@settings(max_examples=25, deadline=None)
@given(
    gamma=st.floats(0.05, 20.0),
    center=st.floats(-5.0, 5.0),
    momentum=st.floats(-5.0, 5.0),
    hbar=st.floats(0.5, 2.0),
)
def test_coherent_state_is_normalised(gamma, center, momentum, hbar):
    s = CoherentState1D(gamma, center, momentum, hbar)
    width = 12 / math.sqrt(gamma)
    x = np.linspace(center - width, center + width, 20001)
    density = np.abs(coherent_amplitude(s, x)) ** 2
    assert np.sum(density) * (x[1] - x[0]) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("gamma", [0.0, -1.0])
def test_coherent_state_rejects_non_positive_width(gamma):
    with pytest.raises(ValueError):
        CoherentState1D(gamma, 0.0)


def test_spinor_must_be_normalised():
    with pytest.raises(ValueError):
        SpinorAmplitudes(1.0, 1.0)


@given(st.floats(-10.0, 10.0))
def test_phase_spinor_is_normalised(chi):
    s = SpinorAmplitudes.from_phase(chi)
    assert abs(s.up) ** 2 + abs(s.down) ** 2 == pytest.approx(1.0, abs=1e-15)


def test_sg_config_defaults():
    c = SGConfig()
    assert (c.alpha, c.k_y, c.y_s, c.y_i) == (0.5, 10.0, 10.0, -10.0)
    assert c.z0 == pytest.approx(0.5)
    assert c.symmetric
    assert c.pre_spinor == SpinorAmplitudes.from_phase(0.0)


def test_sg_config_phases_build_symmetric_spinors():
    c = SGConfig(chi_i=0.3, chi_f=1.1)
    assert c.pre_spinor == SpinorAmplitudes.from_phase(0.3)
    assert c.post_spinor == SpinorAmplitudes.from_phase(1.1)


def test_sg_config_spinor_wins_over_phase_with_warning():
    up = SpinorAmplitudes(1.0, 0.0)
    with pytest.warns(UserWarning):
        c = SGConfig(chi_i=0.4, pre_spinor=up)
    assert c.pre_spinor == up
    assert c.chi_i is None
    assert not c.symmetric


def test_sg_config_without_phase_conflict_is_silent():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        SGConfig(pre_spinor=SpinorAmplitudes(0.6, 0.8))


@pytest.mark.parametrize(
    "kwargs", [{"alpha": -1.0}, {"k_y": 0.0}, {"y_s": -2.0}]
)
def test_sg_config_rejects_invalid(kwargs):
    with pytest.raises(ValueError):
        SGConfig(**kwargs)


def test_negative_alpha_message():
    with pytest.raises(ValueError, match="alpha must be positive"):
        SGConfig(alpha=-1)


def _params(**overrides):
    values = dict(
        mass=1.0,
        field_gradient=5.0,
        interaction_strength=1.0,
        field_length=1.0,
        packet_width=1.0,
        wavenumber=10.0,
    )
    values.update(overrides)
    return PhysicalSGParams(**values)


def test_reduce_units_reference_case():
    reduced = reduce_units(_params())
    assert reduced.interaction_time == pytest.approx(0.1)
    assert reduced.alpha == pytest.approx(0.5)
    assert reduced.k_y == pytest.approx(10.0)


def test_doubling_width_doubles_alpha_and_wavenumber():
    base = reduce_units(_params())
    wide = reduce_units(_params(packet_width=2.0))
    assert wide.alpha == pytest.approx(2 * base.alpha)
    assert wide.k_y == pytest.approx(2 * base.k_y)
    assert wide.field_length == pytest.approx(base.field_length / 2)


def test_zero_field_gives_zero_alpha():
    assert reduce_units(_params(field_gradient=0.0)).alpha == 0.0


@given(st.floats(0.1, 10.0))
def test_alpha_invariant_under_mass_and_time_rescaling(c):
    # M -> cM with the momentum hbar k_y and the length ratio l/d fixed, and
    # mu b -> mu b / c so the force impulse over the longer transit is unchanged
    base = reduce_units(_params())
    scaled = reduce_units(_params(mass=c, interaction_strength=1.0 / c))
    assert scaled.alpha == pytest.approx(base.alpha, rel=1e-12)
    assert scaled.interaction_time == pytest.approx(c * base.interaction_time, rel=1e-12)


def test_physical_params_reject_non_positive():
    with pytest.raises(ValueError):
        _params(mass=0.0)
