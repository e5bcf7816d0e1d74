"""Weak values, the transition-path-time density and time-averaged moments.

A model is described only through the amplitudes <Phi|Psi_t> and
<Phi|O|Psi_t> as functions of time.  Weak values are their ratio.  Time
averages are always integrated in numerator form, so a zero of the overlap
never causes a division by zero.
"""

from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from types import MappingProxyType

import numpy as np

from .errors import UnknownOperator, VanishingOverlap, ZeroNorm
from .numerics import DEFAULT_SPEC, integrate_semi_infinite
from .states import coherent_amplitude

TIME = "t"
VANISHING = 1e-300


@dataclass(frozen=True)
class OverlapModel:
    """Amplitude evaluators for one pre/post-selected pair.

    ``weak_numerators`` maps operator names to t -> <Phi|O|Psi_t>.  The name
    ``"t"`` is reserved for the time weak value, which is always available.

    ``density`` optionally replaces |<Phi|Psi_t>|^2 as the unnormalised time
    weight.  ``overlap_derivative`` supplies d<Phi|Psi_t>/dt analytically for
    the energy weak value.  ``peak_times`` are hints passed on to the
    quadrature so that narrow peaks far from t = 0 are found.
    """

    overlap: object
    weak_numerators: dict = field(default_factory=dict)
    density: object = None
    overlap_derivative: object = None
    hbar: float = 1.0
    peak_times: tuple = ()

    def __post_init__(self):
        numerators = dict(self.weak_numerators)
        if TIME not in numerators:
            overlap = self.overlap
            numerators[TIME] = lambda t: t * overlap(t)
        object.__setattr__(self, "weak_numerators", MappingProxyType(numerators))

    def numerator(self, name):
        try:
            return self.weak_numerators[name]
        except KeyError:
            raise UnknownOperator(name) from None

    def weight(self, t):
        if self.density is not None:
            return np.asarray(self.density(t), dtype=float)
        return np.abs(self.overlap(t)) ** 2


@dataclass(frozen=True)
class TimeSeriesMoments:
    normalization: float
    mean_time: float
    means: dict
    covariances: dict
    abs_second_moments: dict

    def require(self, *names):
        for name in names:
            if name not in self.means:
                raise UnknownOperator(name)


def weak_value(m, op_name, t):
    """Return <Phi|O|Psi_t> / <Phi|Psi_t> at the time(s) t."""
    numerator = m.numerator(op_name)
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    overlap = np.asarray(m.overlap(t_arr), dtype=complex)
    if np.any(np.abs(overlap) < VANISHING):
        raise VanishingOverlap("post-selected state is orthogonal to the evolved state")
    value = np.asarray(numerator(t_arr), dtype=complex) / overlap
    return complex(value[0]) if np.ndim(t) == 0 else value


def normalization(m, spec=DEFAULT_SPEC):
    norm = integrate_semi_infinite(m.weight, spec, m.peak_times).real
    if not norm > spec.abs_tol:
        raise ZeroNorm(f"time normalisation {norm!r} is below abs_tol")
    return norm


def time_density(m, spec=DEFAULT_SPEC):
    """Return (density evaluator, normalisation) of the transition-path-time density."""
    norm = normalization(m, spec)

    def density(t):
        return m.weight(np.asarray(t, dtype=float)) / norm

    return density, norm


def _evaluate(functions, t):
    return np.stack(
        [np.broadcast_to(np.asarray(f(t), dtype=complex), t.shape) for f in functions], axis=-1
    )


def time_average(m, ops, spec=DEFAULT_SPEC):
    """Time-averaged weak values and fluctuation covariances of the named operators.

    The time operator is always included in the result.
    """
    names = list(dict.fromkeys([TIME, *ops]))
    numerators = [m.numerator(name) for name in names]
    norm = normalization(m, spec)
    custom = m.density is not None

    if custom:
        def first(t):
            weight = m.weight(t)[:, None]
            overlap = np.asarray(m.overlap(t), dtype=complex)[:, None]
            values = _evaluate(numerators, t)
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(weight > 0, values / overlap, 0)
            return weight * ratio / norm
    else:
        def first(t):
            overlap = np.asarray(m.overlap(t), dtype=complex)
            values = _evaluate(numerators, t)
            return values * np.conj(overlap)[:, None] / norm

    means = integrate_semi_infinite(first, spec, m.peak_times)

    pairs = list(combinations_with_replacement(range(len(names)), 2))
    left = np.array([i for i, _ in pairs])
    right = np.array([j for _, j in pairs])

    if custom:
        def second(t):
            weight = m.weight(t)[:, None]
            overlap = np.asarray(m.overlap(t), dtype=complex)[:, None]
            values = _evaluate(numerators, t)
            with np.errstate(divide="ignore", invalid="ignore"):
                delta = np.where(weight > 0, values / overlap - means, 0)
            return weight * delta[:, left] * np.conj(delta[:, right]) / norm
    else:
        def second(t):
            overlap = np.asarray(m.overlap(t), dtype=complex)[:, None]
            values = _evaluate(numerators, t)
            delta = values - means * overlap
            return delta[:, left] * np.conj(delta[:, right]) / norm

    flat = integrate_semi_infinite(second, spec, m.peak_times)

    covariances = {}
    for (i, j), value in zip(pairs, flat):
        value = complex(value.real, 0.0) if i == j else complex(value)
        covariances[names[i], names[j]] = value
        covariances[names[j], names[i]] = value.conjugate()
    return TimeSeriesMoments(
        normalization=norm,
        mean_time=float(means[0].real),
        means=MappingProxyType({name: complex(v) for name, v in zip(names, means)}),
        covariances=MappingProxyType(covariances),
        abs_second_moments=MappingProxyType(
            {name: covariances[name, name].real for name in names}
        ),
    )


def uncertainty_gap(moments, a, b):
    """<|dA|^2><|dB|^2> - |<dA dB*>|^2, non-negative by Cauchy-Schwarz."""
    moments.require(a, b)
    var_a = moments.abs_second_moments[a]
    var_b = moments.abs_second_moments[b]
    return var_a * var_b - abs(moments.covariances[a, b]) ** 2


def gap_tolerance(moments, a, b, scale=1e-8):
    return scale * moments.abs_second_moments[a] * moments.abs_second_moments[b]


def commutator_anticommutator_means(moments, a, b):
    """(<dB* dA - dB dA*>, <dB* dA + dB dA*>) from the stored covariances."""
    moments.require(a, b)
    cov = moments.covariances[a, b]
    return complex(0.0, 2 * cov.imag), complex(2 * cov.real, 0.0)


def _dphi(phi, x):
    """d<x|Phi>/dx for a coherent state."""
    u = np.asarray(x, dtype=float) - phi.center
    return (-phi.gamma * u + 1j * phi.momentum / phi.hbar) * coherent_amplitude(phi, x)


def xp_weak_commutator_kernel(phi, x, x_prime):
    """Position-space kernel of the x-p weak-value commutator for a coherent post-state."""
    amp_x = coherent_amplitude(phi, x)
    amp_xp = coherent_amplitude(phi, x_prime)
    d_conj_xp = np.conj(_dphi(phi, x_prime))
    d_x = _dphi(phi, x)
    return 1j * phi.hbar * (
        np.asarray(x) * amp_x * d_conj_xp + np.asarray(x_prime) * d_x * np.conj(amp_xp)
    )
