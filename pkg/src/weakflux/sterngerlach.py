"""Stern-Gerlach spin-1/2 beam in reduced units.

The beam leaves the field region as two Gaussian branches phi_+ (spin up)
and phi_- (spin down).  The post-selected state is a Gaussian centred at
height z0 on a screen at y_s times a spinor.  All time averages use the
analytic screen overlaps, so no spatial grids are needed at run time.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import (
    DegeneratePostSpinor,
    IdentityMismatch,
    InequalityViolation,
    NearOrthogonalPostSelection,
    ZeroField,
)
from .numerics import DEFAULT_SPEC, find_peak, integrate_semi_infinite, saddle_moment
from .states import SGConfig
from .weakcore import TIME, OverlapModel, normalization, time_average, weak_value

SPINS = ("sx", "sy", "sz")
ORTHOGONAL = 1e-12
NEAR_SINGULAR = 1e-6
FD_STEP = 1e-4
LINEARITY_RTOL = 1e-8
BOUND_SCALE = 1e-8
COVARIANCE_NOISE = 1e-12


class SpinTriple(NamedTuple):
    sx: complex
    sy: complex
    sz: complex


class SGBeam:
    """An SGConfig together with the quantities derived from it."""

    def __init__(self, config=None):
        self.config = SGConfig() if config is None else config
        c = self.config
        hi = 4.0 * c.y_s / c.k_y + 4.0
        self.t_bar = find_peak(self.rho, (0.0, hi))

    @property
    def alpha(self):
        return self.config.alpha

    def rho(self, t):
        """Exponent of the spin-up screen density (without the constant alpha^2/2)."""
        c = self.config
        return (c.y_s - c.k_y * t) ** 2 / (1 + t**2) + (c.z0 - c.alpha * t) ** 2 / (
            2 * (1 + t**2 / 4)
        )

    @property
    def curvature(self):
        """Coefficient C of the Gaussian time density exp(-C (t - t_bar)^2)."""
        c, t = self.config, self.t_bar
        return c.k_y * c.y_s / (t * (1 + t**2)) + c.alpha**2 / (2 * (1 + t**2 / 4))

    @property
    def hessian(self):
        """Half the second derivative of rho at t_bar."""
        c, t = self.config, self.t_bar
        return (c.k_y**2 + c.y_s**2) / (1 + t**2) ** 2 + c.alpha**2 / (2 * (1 + t**2 / 4))

    def Y(self, t):
        t = np.asarray(t, dtype=float)
        return self.alpha * self.config.z0 * t / (1 + t**2 / 4)

    def eta(self, t):
        t = np.asarray(t, dtype=float)
        return self.alpha * self.config.z0 * (1 + 0.75 * t**2) / (1 + t**2 / 4)

    def R(self, t):
        return np.exp(1j * self.eta(t) - self.Y(t))


def phi_pm(beam, x, y, z, t):
    """Spatial amplitudes (phi_+, phi_-) of the two spin branches behind the field."""
    alpha, k_y = beam.alpha, beam.config.k_y
    x, y, z, t = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, y, z, t)))
    s = 1 + 1j * t
    prefactor = (1 / (s * np.sqrt(np.pi))) ** 1.5
    exponent = (
        -1j * alpha**2 * t / 6
        - (x**2 + (y - 1j * k_y) ** 2 + (z - 0.5 * alpha * t) ** 2) / (2 * s)
        - k_y**2 / 2
        - 1j * alpha * z
    )
    plus = prefactor * np.exp(exponent)
    minus = plus * np.exp(2j * alpha * z - alpha * z * t / s)
    return plus, minus


def branch_overlap(alpha, t):
    """<phi_-|phi_+>, real and decaying with field strength and time."""
    t = np.asarray(t, dtype=float)
    return np.exp(-(alpha**2) * (1 + 2.25 * t**2))


def strong_values(beam, t):
    a, b = beam.config.pre_spinor.up, beam.config.pre_spinor.down
    o = branch_overlap(beam.alpha, t)
    return SpinTriple(
        sx=o * (np.conj(b) * a + np.conj(a) * b),
        sy=1j * o * (np.conj(b) * a - np.conj(a) * b),
        sz=abs(a) ** 2 - abs(b) ** 2 + 0 * o,
    )


def strong_uncertainty_gap(beam, t):
    """Robertson gap <dsx^2><dsy^2> - <sz>^2 for the unselected beam.

    Computed from the variances directly and from the closed form
    4 a^2 b^2 (1 - o^2 + a^2 b^2 o^4 sin^2(2 (phase_a - phase_b))), where
    a, b are the moduli of the pre-selected spinor and o the branch overlap.
    """
    up, down = beam.config.pre_spinor.up, beam.config.pre_spinor.down
    a, b = abs(up), abs(down)
    dphase = np.angle(up) - np.angle(down)
    o = branch_overlap(beam.alpha, t)
    var_x = 1 - 4 * a**2 * b**2 * o**2 * np.cos(dphase) ** 2
    var_y = 1 - 4 * a**2 * b**2 * o**2 * np.sin(dphase) ** 2
    direct = var_x * var_y - (a**2 - b**2) ** 2
    closed = 4 * a**2 * b**2 * (1 - o**2 + a**2 * b**2 * o**4 * np.sin(2 * dphase) ** 2)
    if np.any(np.abs(direct - closed) > 1e-12):
        raise IdentityMismatch("strong-value gap closed form disagrees with the variances")
    return closed


def _screen_overlap(alpha, k_y, y_s, z0, t):
    t = np.asarray(t, dtype=float)
    return (
        2
        / (np.sqrt(1 + 1j * t) * (2 + 1j * t))
        * np.exp(
            -1j * alpha**2 * t / 6
            - (y_s - 1j * k_y) ** 2 / (2 * (1 + 1j * t))
            - (z0 - 0.5 * alpha * t - 1j * alpha) ** 2 / (2 * (2 + 1j * t))
            - (k_y**2 + alpha**2) / 2
            - 1j * alpha * z0
        )
    )


def channel_overlaps(beam, t):
    """Screen overlaps (<phi_f, y_s|phi_+>, <phi_f, y_s|phi_->).

    The down branch is the mirror image of the up branch under alpha -> -alpha.
    """
    c = beam.config
    return (
        _screen_overlap(c.alpha, c.k_y, c.y_s, c.z0, t),
        _screen_overlap(-c.alpha, c.k_y, c.y_s, c.z0, t),
    )


def _branch_densities(config, z0, t):
    t = np.asarray(t, dtype=float)
    plus = np.exp(
        -((config.y_s - config.k_y * t) ** 2) / (1 + t**2)
        - (z0 - config.alpha * t) ** 2 / (2 * (1 + t**2 / 4))
        - config.alpha**2 / 2
    ) / (np.sqrt(1 + t**2) * (1 + t**2 / 4))
    return plus, plus * np.exp(-2 * config.alpha * t * z0 / (1 + t**2 / 4))


def channel_densities(beam, t):
    """Closed-form |<phi_f, y_s|phi_+-(t)>|^2."""
    return _branch_densities(beam.config, beam.config.z0, t)


def density_sum_map(config, z0, t):
    """|<phi_f|phi_+>|^2 + |<phi_f|phi_->|^2 on the grid z0 (rows) by t (columns)."""
    plus, minus = _branch_densities(
        config, np.asarray(z0, dtype=float)[:, None], np.asarray(t, dtype=float)[None, :]
    )
    return plus + minus


def postselect_overlap(beam, t):
    """<Phi|Psi_t> including the spinor amplitudes."""
    pre, post = beam.config.pre_spinor, beam.config.post_spinor
    plus, minus = channel_overlaps(beam, t)
    return np.conj(post.up) * pre.up * plus + np.conj(post.down) * pre.down * minus


def _spins_from_ratio(pre, post, ratio):
    up = np.conj(post.up) * pre.up
    down = np.conj(post.down) * pre.down
    cross_up = np.conj(post.down) * pre.up
    cross_down = np.conj(post.up) * pre.down * ratio
    denominator = up + down * ratio
    return (
        SpinTriple(
            sx=(cross_up + cross_down) / denominator,
            sy=1j * (cross_up - cross_down) / denominator,
            sz=(up - down * ratio) / denominator,
        ),
        denominator,
    )


def weak_spins(beam, t):
    """Weak values of sigma_x, sigma_y, sigma_z for general spinors."""
    with np.errstate(divide="ignore", invalid="ignore"):
        spins, denominator = _spins_from_ratio(
            beam.config.pre_spinor, beam.config.post_spinor, beam.R(t)
        )
    if np.any(np.abs(denominator) < ORTHOGONAL):
        raise NearOrthogonalPostSelection("post-selected state is orthogonal to the beam")
    return spins


def symmetric_weak_spins(Y, eta, chi_i, chi_f):
    """Weak spin values for equal-weight spinors with phases chi_i and chi_f."""
    theta = chi_i - chi_f + eta
    denominator = np.cosh(Y) + np.cos(theta)
    return SpinTriple(
        sx=(np.cosh(Y) * np.cos(chi_f) + np.cos(chi_i + eta) - 1j * np.sinh(Y) * np.sin(chi_f))
        / denominator,
        sy=(np.cosh(Y) * np.sin(chi_f) + np.sin(chi_i + eta) + 1j * np.sinh(Y) * np.cos(chi_f))
        / denominator,
        sz=(np.sinh(Y) - 1j * np.sin(theta)) / denominator,
    )


def ratio_from_sz(pre, post, sz):
    """Overlap ratio R recovered from the weak value of sigma_z."""
    return np.conj(post.up) * pre.up * (1 - sz) / (np.conj(post.down) * pre.down * (1 + sz))


def spin_linearity_coefficients(post):
    """(c_x, c_y, c_xy) with dSx = c_x dSz, dSy = c_y dSz and dSx = c_xy dSy."""
    a, b = np.conj(post.up), np.conj(post.down)
    if abs(a) < ORTHOGONAL or abs(b) < ORTHOGONAL:
        raise DegeneratePostSpinor("post-selected spinor has a vanishing component")
    if abs(a**2 + b**2) < ORTHOGONAL:
        raise DegeneratePostSpinor("sx and sy fluctuations are not proportional for this spinor")
    c_x = 0.5 * (b / a - a / b)
    c_y = 0.5j * (a / b + b / a)
    c_xy = 1j * (a**2 - b**2) / (a**2 + b**2)
    return complex(c_x), complex(c_y), complex(c_xy)


def channel_weights(config):
    """Weights of |phi_+|^2 and |phi_-|^2 in the transition-time density."""
    pre, post = config.pre_spinor, config.post_spinor
    return abs(post.up * pre.up) ** 2, abs(post.down * pre.down) ** 2


def spin_overlap_model(beam):
    """OverlapModel for the three spin weak values with the branch-summed time density.

    The time weight is w_+ |<phi_f|phi_+>|^2 + w_- |<phi_f|phi_->|^2: the two
    spin branches contribute incoherently, without their interference term.
    """
    pre, post = beam.config.pre_spinor, beam.config.post_spinor
    w_plus, w_minus = channel_weights(beam.config)

    def amplitudes(t):
        return channel_overlaps(beam, t)

    def overlap(t):
        return postselect_overlap(beam, t)

    def sx(t):
        plus, minus = amplitudes(t)
        return np.conj(post.down) * pre.up * plus + np.conj(post.up) * pre.down * minus

    def sy(t):
        plus, minus = amplitudes(t)
        return 1j * (np.conj(post.down) * pre.up * plus - np.conj(post.up) * pre.down * minus)

    def sz(t):
        plus, minus = amplitudes(t)
        return np.conj(post.up) * pre.up * plus - np.conj(post.down) * pre.down * minus

    def density(t):
        plus, minus = channel_densities(beam, t)
        return w_plus * plus + w_minus * minus

    return OverlapModel(
        overlap=overlap,
        weak_numerators={"sx": sx, "sy": sy, "sz": sz},
        density=density,
        peak_times=(beam.t_bar,),
    )


def spin_moments(beam, spec=DEFAULT_SPEC):
    return time_average(spin_overlap_model(beam), SPINS, spec)


def spin_commutators(moments, post):
    """Closed-form sx-sy commutator and anticommutator means and variance product.

    The closed forms follow from <|dSz|^2> and the post-selected spinor alone;
    they are checked against the covariances assembled by quadrature.
    """
    moments.require(*SPINS)
    a2, b2 = abs(post.up) ** 2, abs(post.down) ** 2
    var_z = moments.abs_second_moments["sz"]
    comm = 0.5j * var_z * (b2 - a2) / (a2 * b2)
    anti = 0.5j * var_z * (
        post.down**2 * np.conj(post.up) ** 2 - post.up**2 * np.conj(post.down) ** 2
    ) / (a2 * b2)
    var_product = abs(post.down**4 - post.up**4) ** 2 / (16 * (a2 * b2) ** 2) * var_z**2

    cov = moments.covariances["sy", "sx"]
    direct_comm = complex(0.0, 2 * cov.imag)
    direct_anti = complex(2 * cov.real, 0.0)
    direct_product = moments.abs_second_moments["sx"] * moments.abs_second_moments["sy"]
    # quadrature noise in the covariances scales with the squared spin means
    floor = COVARIANCE_NOISE * max(abs(moments.means[j]) for j in SPINS) ** 2
    scale = max(direct_product, var_product)
    root = np.sqrt(scale)
    checks = (
        (comm, direct_comm, root + floor),
        (anti, direct_anti, root + floor),
        (var_product, direct_product, scale + floor * root),
    )
    for closed, direct, size in checks:
        if abs(closed - direct) > LINEARITY_RTOL * size + 1e-300:
            raise IdentityMismatch(f"closed form {closed!r} vs quadrature {direct!r}")
    return complex(comm), complex(anti), float(var_product)


class TimeSpinBound(NamedTuple):
    lhs: float
    rhs: float
    literal_rhs: float


def time_spin_uncertainty(moments, j):
    """Both sides of <|dS_j|^2><|dt|^2> >= |<dt dS_j*>|^2.

    ``literal_rhs`` is |<t S_j>|^2 without subtracting the means; it is
    reported for comparison and not asserted.
    """
    moments.require(TIME, j)
    lhs = moments.abs_second_moments[j] * moments.abs_second_moments[TIME]
    cov = moments.covariances[TIME, j]
    rhs = abs(cov) ** 2
    literal = abs(moments.mean_time * moments.means[j] + np.conj(cov)) ** 2
    if lhs < rhs - BOUND_SCALE * lhs:
        raise InequalityViolation(f"time-spin bound violated: {lhs!r} < {rhs!r}")
    return TimeSpinBound(float(lhs), float(rhs), float(literal))


def channel_normalizations_sd(beam):
    """Steepest-descent time integrals of |<phi_f|phi_+>|^2 and |<phi_f|phi_->|^2."""
    c, t = beam.config, beam.t_bar
    k2 = c.k_y**2 + c.y_s**2
    bracket = 2 * k2 * (1 + t**2 / 4) + c.alpha**2 * (1 + t**2) ** 2
    plus = (
        np.sqrt(2 * np.pi * (1 + t**2))
        * np.exp(-(c.alpha**2) / 2)
        / (np.sqrt(1 + t**2 / 4) * np.sqrt(bracket))
    )
    return plus, plus * np.exp(-4 * c.alpha**2 * t**2 * k2 / bracket)


@dataclass(frozen=True)
class TransitionDensity:
    density: object
    normalization: float
    sd_density: object
    sd_normalization: float


def transition_density(beam, spec=DEFAULT_SPEC):
    model = spin_overlap_model(beam)
    norm = normalization(model, spec)
    w_plus, w_minus = channel_weights(beam.config)
    sd_plus, sd_minus = channel_normalizations_sd(beam)
    C, t_bar = beam.curvature, beam.t_bar

    def density(t):
        return model.weight(np.asarray(t, dtype=float)) / norm

    def sd_density(t):
        t = np.asarray(t, dtype=float)
        return np.sqrt(C / np.pi) * np.exp(-C * (t - t_bar) ** 2)

    return TransitionDensity(density, norm, sd_density, w_plus * sd_plus + w_minus * sd_minus)


def _first_derivative(g, t, h=FD_STEP):
    nodes = t + h * np.array([-1.0, -0.5, 0.5, 1.0])
    values = np.asarray(g(nodes))
    coarse = (values[3] - values[0]) / (2 * h)
    fine = (values[2] - values[1]) / h
    return (4 * fine - coarse) / 3


def sd_spin_statistics(beam, spins_of_t):
    """Steepest-descent means, leading terms and standard deviations.

    ``spins_of_t`` maps a 1-D time array to an array (n_t, ...) of weak values.
    """
    C, t_bar = beam.curvature, beam.t_bar
    estimate = saddle_moment(spins_of_t, C, t_bar, FD_STEP)
    slope = _first_derivative(spins_of_t, t_bar)
    sigma = np.sqrt(0.5 * np.abs(slope) ** 2 / C)
    return estimate.leading_value, estimate.value, sigma


@dataclass(frozen=True)
class SpinAverages:
    means: SpinTriple
    sigmas: tuple
    sd_means: SpinTriple
    sd_sigmas: tuple
    sd_leading: SpinTriple
    near_singular: bool


def _stack_spins(spins):
    return np.stack([np.asarray(s, dtype=complex) for s in spins], axis=-1)


def time_averaged_spins(beam, spec=DEFAULT_SPEC):
    """Exact and steepest-descent time averages of the weak spin values."""
    moments = spin_moments(beam, spec)
    pre, post = beam.config.pre_spinor, beam.config.post_spinor

    def spins_of_t(t):
        return _stack_spins(_spins_from_ratio(pre, post, beam.R(t))[0])

    leading, sd_mean, sd_sigma = sd_spin_statistics(beam, spins_of_t)
    denominator = _spins_from_ratio(pre, post, beam.R(beam.t_bar))[1]
    return SpinAverages(
        means=SpinTriple(*(moments.means[j] for j in SPINS)),
        sigmas=tuple(float(np.sqrt(moments.abs_second_moments[j])) for j in SPINS),
        sd_means=SpinTriple(*(complex(v) for v in sd_mean)),
        sd_sigmas=tuple(float(v) for v in sd_sigma),
        sd_leading=SpinTriple(*(complex(v) for v in leading)),
        near_singular=bool(abs(denominator) < NEAR_SINGULAR),
    )


def max_anomalous_sz(beam):
    """Largest steepest-descent |<S_z>| over the phases: coth(Y(t_bar) / 2)."""
    y = float(beam.Y(beam.t_bar))
    if beam.alpha == 0 or y == 0:
        raise ZeroField("no field: the anomalous maximum diverges")
    return 1 / np.tanh(abs(y) / 2)


@dataclass(frozen=True)
class PhaseGrid:
    """Time-averaged weak spins on a (chi_i, chi_f) grid; arrays indexed [i, f, spin]."""

    chi: np.ndarray
    means: np.ndarray
    sigmas: np.ndarray
    sd_means: np.ndarray
    sd_leading: np.ndarray
    sd_sigmas: np.ndarray
    near_singular: np.ndarray


def _grid_row(beam, chi_i, chi_f, spec):
    """Exact and steepest-descent statistics for one chi_i and all chi_f."""

    def spins_of_t(t):
        t = np.asarray(t, dtype=float)[:, None]
        return _stack_spins(symmetric_weak_spins(beam.Y(t), beam.eta(t), chi_i, chi_f[None, :]))

    def weight(t):
        plus, minus = channel_densities(beam, t)
        return plus + minus

    norm = integrate_semi_infinite(weight, spec, (beam.t_bar,)).real
    width = chi_f.size * 3

    def first(t):
        return (weight(t)[:, None, None] * spins_of_t(t)).reshape(t.size, width) / norm

    means = integrate_semi_infinite(first, spec, (beam.t_bar,)).reshape(chi_f.size, 3)

    def second(t):
        delta = spins_of_t(t) - means[None]
        return (weight(t)[:, None, None] * np.abs(delta) ** 2).reshape(t.size, width) / norm

    variances = integrate_semi_infinite(second, spec, (beam.t_bar,)).real.reshape(chi_f.size, 3)
    leading, sd_mean, sd_sigma = sd_spin_statistics(beam, spins_of_t)
    Y, eta = beam.Y(beam.t_bar), beam.eta(beam.t_bar)
    denominator = 0.5 * np.abs(1 + np.exp(1j * (chi_i - chi_f + eta) - Y))
    return means, np.sqrt(variances), sd_mean, leading, sd_sigma, denominator < NEAR_SINGULAR


def phase_grid(config=None, n=101, spec=DEFAULT_SPEC, threads=None):
    """Sweep equal-weight spinor phases over n x n points of [0, 2 pi)^2.

    Rows (fixed chi_i) are independent and may run on several threads; the
    result does not depend on the thread count.
    """
    config = SGConfig() if config is None else config
    beam = SGBeam(config)
    chi = 2 * np.pi * np.arange(n) / n

    def row(chi_i):
        return _grid_row(beam, chi_i, chi, spec)

    if threads is None or threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(row, chi))
    else:
        rows = [row(chi_i) for chi_i in chi]
    fields = [np.stack(parts) for parts in zip(*rows)] if rows else [np.zeros((0, n, 3))] * 6
    return PhaseGrid(chi, *fields)


def spin_weak_value(beam, j, t):
    """Weak value of one spin component through the generic overlap machinery."""
    return weak_value(spin_overlap_model(beam), j, t)
