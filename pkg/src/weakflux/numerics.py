"""Adaptive quadrature on the half line and saddle-point moment estimates.

All evaluators in this package are vectorised: they receive a 1-D numpy array
of times and return an array whose first axis runs over those times.  Trailing
axes are treated as independent integrand components that share one adaptive
node set, which is how whole parameter grids are integrated in one pass.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NonConvergent, NonFinite, NonPositiveCurvature, NoInteriorMinimum

# 15-point Kronrod abscissae (non-negative half) and weights, with the weights
# of the embedded 7-point Gauss rule on the odd-indexed abscissae.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS_WEIGHTS = np.zeros(15)
GAUSS_WEIGHTS[[1, 3, 5]] = _WG[:3]
GAUSS_WEIGHTS[[13, 11, 9]] = _WG[:3]
GAUSS_WEIGHTS[7] = _WG[3]

INITIAL_CUT = 10.0
CUT_GROWTH = 1.5
MAX_CUT = 1e12
SCAN_SAMPLES = 257
SEGMENT_SAMPLES = 65
INITIAL_PANELS = 32
_ROUNDOFF = 100 * np.finfo(float).eps


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-14
    truncation_ratio: float = 1e-12
    max_subdivisions: int = 2000

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be positive")
        if not 0 < self.truncation_ratio < 1:
            raise ValueError("truncation_ratio must lie in (0, 1)")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be at least 1")


DEFAULT_SPEC = QuadratureSpec()


@dataclass(frozen=True)
class SaddleEstimate:
    peak_time: float
    curvature: float
    leading_value: complex
    correction: complex

    @property
    def value(self):
        return self.leading_value + self.correction


def _sample(f, t):
    """Evaluate f on the times t and return a finite complex (len(t), k) array."""
    values = np.asarray(f(t))
    if values.ndim == 0:
        values = np.full(t.shape, values)
    values = values.astype(complex, copy=False).reshape(t.shape[0], -1)
    if not np.all(np.isfinite(values)):
        bad = t[~np.all(np.isfinite(values), axis=1)][0]
        raise NonFinite(f"integrand is not finite at t={bad!r}")
    return values


def _find_cut(f, spec, points):
    """Grow [0, t_cut] geometrically until every component's tail is negligible."""
    t_cut = INITIAL_CUT
    t = np.union1d(np.linspace(0.0, t_cut, SCAN_SAMPLES), points[points <= t_cut])
    values = np.abs(_sample(f, t))
    peak = values.max(axis=0)
    tail = values[t >= t_cut / CUT_GROWTH].max(axis=0)
    while True:
        live = peak > 0
        if live.any() and np.all(tail[live] < spec.truncation_ratio * peak[live]):
            return t_cut
        if t_cut >= MAX_CUT:
            if not live.any():
                return 0.0
            raise NonConvergent(f"integrand does not decay before t={MAX_CUT:g}")
        lo, t_cut = t_cut, t_cut * CUT_GROWTH
        t = np.linspace(lo, t_cut, SEGMENT_SAMPLES)[1:]
        t = np.union1d(t, points[(points > lo) & (points <= t_cut)])
        tail = np.abs(_sample(f, t)).max(axis=0)
        peak = np.maximum(peak, tail)


def _kronrod_panels(f, a, b):
    """Apply the 15-point pair on every panel [a_j, b_j] with one call to f."""
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    t = (mid[:, None] + half[:, None] * NODES[None, :]).ravel()
    values = _sample(f, t).reshape(a.size, NODES.size, -1)
    kronrod = np.einsum("j,pjk->pk", KRONROD_WEIGHTS, values) * half[:, None]
    gauss = np.einsum("j,pjk->pk", GAUSS_WEIGHTS, values) * half[:, None]
    magnitude = np.einsum("j,pjk->pk", KRONROD_WEIGHTS, np.abs(values)) * half[:, None]
    return kronrod, np.abs(kronrod - gauss), magnitude


def integrate_semi_infinite(f, spec=DEFAULT_SPEC, points=()):
    """Integrate f over [0, inf) with adaptive Gauss-Kronrod panels.

    ``points`` are optional times where the integrand is known to be large;
    they are sampled during the truncation scan and used as panel breaks, so
    narrow peaks far from the origin cannot be stepped over.

    Returns a complex scalar for scalar-valued f, otherwise a complex array
    with f's trailing shape.
    """
    points = np.asarray(points, dtype=float).ravel()
    points = points[np.isfinite(points) & (points > 0)]
    probe = np.asarray(f(np.zeros(1)))
    shape = probe.shape[1:] if probe.ndim > 0 else ()

    t_cut = _find_cut(f, spec, points)
    if t_cut == 0.0:
        zero = np.zeros(shape, dtype=complex)
        return complex(zero) if shape == () else zero

    edges = np.union1d(np.linspace(0.0, t_cut, INITIAL_PANELS + 1), points[points < t_cut])
    a, b = edges[:-1], edges[1:]
    est, err, mag = _kronrod_panels(f, a, b)
    splits = 0
    while True:
        total = est.sum(axis=0)
        tol = np.maximum.reduce([
            spec.rel_tol * np.abs(total),
            np.full(total.shape, spec.abs_tol),
            _ROUNDOFF * mag.sum(axis=0),
        ])
        if np.all(err.sum(axis=0) <= tol):
            break
        if splits >= spec.max_subdivisions:
            raise NonConvergent(
                f"error estimate {err.sum(axis=0).max():.3e} above tolerance after "
                f"{splits} subdivisions"
            )
        score = (err / tol).max(axis=1)
        chosen = np.flatnonzero(score >= 0.25 * score.max())
        chosen = chosen[np.argsort(-score[chosen], kind="stable")]
        chosen = np.sort(chosen[: spec.max_subdivisions - splits])
        splits += chosen.size
        mid = 0.5 * (a[chosen] + b[chosen])
        new_a = np.concatenate([a[chosen], mid])
        new_b = np.concatenate([mid, b[chosen]])
        new_est, new_err, new_mag = _kronrod_panels(f, new_a, new_b)
        keep = np.ones(a.size, dtype=bool)
        keep[chosen] = False
        a = np.concatenate([a[keep], new_a])
        b = np.concatenate([b[keep], new_b])
        est = np.concatenate([est[keep], new_est])
        err = np.concatenate([err[keep], new_err])
        mag = np.concatenate([mag[keep], new_mag])
        order = np.argsort(a, kind="stable")
        a, b, est, err, mag = a[order], b[order], est[order], err[order], mag[order]

    total = est.sum(axis=0)
    return complex(total[0]) if shape == () else total.reshape(shape)


def find_peak(rho, bracket, rel_tol=1e-10):
    """Minimise the exponent rho on a bracket by golden-section search."""
    lo, hi = map(float, bracket)
    if not hi > lo:
        raise ValueError("bracket must be an increasing interval")
    width = hi - lo
    ratio = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - ratio * (b - a)
    d = a + ratio * (b - a)
    fc, fd = rho(c), rho(d)
    while b - a > rel_tol * width:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - ratio * (b - a)
            fc = rho(c)
        else:
            a, c, fc = c, d, fd
            d = a + ratio * (b - a)
            fd = rho(d)
    t = 0.5 * (a + b)
    f_t = rho(t)
    if not (f_t < rho(lo) and f_t < rho(hi)):
        raise NoInteriorMinimum(f"minimum of rho on [{lo}, {hi}] lies at an endpoint")
    return t


def second_derivative(g, t, h=1e-4):
    """Central second difference with one Richardson extrapolation step."""
    nodes = t + h * np.array([-1.0, -0.5, 0.0, 0.5, 1.0])
    values = np.asarray(g(nodes))
    if values.ndim == 0:
        values = np.full(nodes.shape, values)
    coarse = (values[0] - 2 * values[2] + values[4]) / h**2
    fine = (values[1] - 2 * values[2] + values[3]) / (h / 2) ** 2
    return (4 * fine - coarse) / 3


def saddle_moment(g, rho_curvature, t_bar, h=1e-4):
    """Steepest-descent average of g under a density peaked as exp(-C (t - t_bar)^2)."""
    if not rho_curvature > 0:
        raise NonPositiveCurvature(f"curvature {rho_curvature!r} is not positive")
    leading = np.asarray(g(np.array([t_bar])))
    leading = leading[0] if leading.ndim > 0 else leading
    correction = 0.25 * second_derivative(g, t_bar, h) / rho_curvature
    if np.ndim(leading) == 0:
        leading, correction = complex(leading), complex(correction)
    return SaddleEstimate(float(t_bar), float(rho_curvature), leading, correction)
