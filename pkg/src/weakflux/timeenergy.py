"""Energy weak value, the time-energy commutator mean and its uncertainty bound."""

from dataclasses import dataclass, replace

import numpy as np

from .errors import IdentityMismatch, InequalityViolation
from .numerics import DEFAULT_SPEC
from .weakcore import (
    TIME,
    commutator_anticommutator_means,
    time_average,
    weak_value,
)

ENERGY = "E"
FD_STEP = 1e-5
# finite-difference derivatives carry noise near eps / FD_STEP, so integrals of
# exactly vanishing fluctuations cannot converge below this absolute level
FD_ABS_TOL = 1e-9
IDENTITY_RTOL = 1e-6
BOUND_SCALE = 1e-8


def overlap_derivative(m, h=FD_STEP):
    """d<Phi|Psi_t>/dt, analytic when the model supplies it, else Richardson-refined differences."""
    if m.overlap_derivative is not None:
        return m.overlap_derivative

    def derivative(t):
        t = np.asarray(t, dtype=float)
        coarse = (m.overlap(t + h) - m.overlap(t - h)) / (2 * h)
        fine = (m.overlap(t + h / 2) - m.overlap(t - h / 2)) / h
        return (4 * fine - coarse) / 3

    return derivative


def with_energy(m):
    """Return a copy of the model that also tracks the energy weak value as ``"E"``."""
    derivative = overlap_derivative(m)
    hbar = m.hbar
    numerators = dict(m.weak_numerators)
    numerators[ENERGY] = lambda t: 1j * hbar * derivative(t)
    return replace(m, weak_numerators=numerators)


def energy_weak_value(m, t):
    """i hbar d/dt ln <Phi|Psi_t>."""
    if ENERGY not in m.weak_numerators:
        m = with_energy(m)
    return weak_value(m, ENERGY, t)


@dataclass(frozen=True)
class TimeEnergyReport:
    mean_time: float
    mean_energy: complex
    initial_overlap_sq: float
    normalization: float
    commutator_mean: complex
    closed_form_commutator: complex
    anticommutator_mean: complex
    bound_rhs: float
    product_lhs: float


def _moments(m, spec):
    if m.density is not None:
        raise ValueError("the time-energy relations need the |<Phi|Psi_t>|^2 time density")
    if m.overlap_derivative is None:
        spec = replace(spec, abs_tol=max(spec.abs_tol, FD_ABS_TOL))
    if ENERGY not in m.weak_numerators:
        m = with_energy(m)
    return m, time_average(m, [ENERGY], spec)


def _closed_form(m, moments):
    initial = abs(complex(np.asarray(m.overlap(np.zeros(1)))[0])) ** 2
    factor = 1.0 - moments.mean_time * initial / moments.normalization
    return initial, factor


def _checked_commutator(m, moments):
    # <dE* dt - dE dt*> = <(t - <t>)(dE* - dE)> because dt is real
    commutator, anticommutator = commutator_anticommutator_means(moments, TIME, ENERGY)
    initial, factor = _closed_form(m, moments)
    closed = 1j * m.hbar * factor
    scale = max(abs(closed), m.hbar)
    if abs(commutator - closed) > IDENTITY_RTOL * scale:
        raise IdentityMismatch(
            f"time-energy commutator {commutator!r} differs from closed form {closed!r}"
        )
    return commutator, anticommutator, closed, initial, factor


def time_energy_commutator_mean(m, spec=DEFAULT_SPEC):
    """Quadrature value of <(t - <t>)(dE_w* - dE_w)>, checked against its closed form."""
    m, moments = _moments(m, spec)
    return _checked_commutator(m, moments)[0]


def time_energy_uncertainty_report(m, spec=DEFAULT_SPEC):
    m, moments = _moments(m, spec)
    commutator, anticommutator, closed, initial, factor = _checked_commutator(m, moments)
    var_t = moments.abs_second_moments[TIME]
    var_e = moments.abs_second_moments[ENERGY]
    product_lhs = var_t * var_e
    bound_rhs = 0.25 * m.hbar**2 * factor**2
    if product_lhs < bound_rhs - BOUND_SCALE * product_lhs:
        raise InequalityViolation(
            f"time-energy product {product_lhs!r} below bound {bound_rhs!r}"
        )
    return TimeEnergyReport(
        mean_time=moments.mean_time,
        mean_energy=moments.means[ENERGY],
        initial_overlap_sq=initial,
        normalization=moments.normalization,
        commutator_mean=commutator,
        closed_form_commutator=closed,
        anticommutator_mean=anticommutator,
        bound_rhs=bound_rhs,
        product_lhs=product_lhs,
    )
