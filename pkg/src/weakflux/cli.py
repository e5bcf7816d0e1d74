"""``weakflux`` command line: figure data as CSV, model reports and a property check."""

import argparse
import csv
import io
import sys
from dataclasses import asdict, replace

import numpy as np

from . import scatter1d, sterngerlach as sg
from .config import COMMANDS, parse_config
from .errors import (
    IdentityMismatch,
    InequalityViolation,
    ParseError,
    ValidationError,
    WeakfluxError,
)
from .states import CoherentState1D, SGConfig, SpinorAmplitudes
from .timeenergy import ENERGY, time_energy_uncertainty_report, with_energy
from .weakcore import TIME, gap_tolerance, time_average, uncertainty_gap

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3
EXIT_CHECK = 4

SPIN_AXES = ("x", "y", "z")
GAP_PAIRS_SCATTER = (("x", "p"), ("p", "T"), (TIME, "p"), (TIME, ENERGY), ("x", ENERGY))
GAP_PAIRS_SPIN = (("sx", "sy"), ("sx", "sz"), ("sy", "sz"), (TIME, "sz"))


def _format(value):
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    return format(float(value), ".17g")


def _flatten(record):
    """Split complex values into ``_re`` / ``_im`` keys, keeping order."""
    flat = {}
    for key, value in record.items():
        if isinstance(value, (complex, np.complexfloating)):
            flat[f"{key}_re"] = value.real
            flat[f"{key}_im"] = value.imag
        else:
            flat[key] = value
    return flat


def write_csv(header, rows):
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_format(v) for v in row])
    return buffer.getvalue()


def _single_row(record):
    flat = _flatten(record)
    return write_csv(list(flat), [list(flat.values())])


def _linspace(lo, hi, n):
    return np.linspace(lo, hi, n) if n > 1 else np.array([lo])


def sg_density(cfg):
    z0 = _linspace(cfg.grid.z0_min, cfg.grid.z0_max, cfg.grid.n_z0)
    t = _linspace(cfg.grid.t_min, cfg.grid.t_max, cfg.grid.n_t)
    density = sg.density_sum_map(cfg.sg, z0, t)
    rows = ((z, tt, density[i, j]) for i, z in enumerate(z0) for j, tt in enumerate(t))
    return write_csv(["z0", "t", "density_sum"], rows)


def sg_pt(cfg):
    beam = sg.SGBeam(cfg.sg)
    result = sg.transition_density(beam, cfg.quadrature)
    t = _linspace(cfg.grid.t_min, cfg.grid.t_max, cfg.grid.n_t)
    rows = zip(t, result.density(t), result.sd_density(t))
    return write_csv(["t", "p_exact", "p_sd"], rows)


def _phase_grid(cfg):
    return sg.phase_grid(cfg.sg, cfg.grid.n_chi, cfg.quadrature, cfg.threads)


def sg_phase_grid(cfg):
    grid = _phase_grid(cfg)
    exact = np.abs(grid.means)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.abs(grid.sd_means) / exact
    header = ["chi_i", "chi_f"]
    header += [f"abs_s{a}" for a in SPIN_AXES]
    header += [f"sigma_{a}" for a in SPIN_AXES]
    header += [f"ratio_{a}" for a in SPIN_AXES]
    header += ["flag_near_singular"]
    rows = []
    for i, chi_i in enumerate(grid.chi):
        for f, chi_f in enumerate(grid.chi):
            rows.append(
                [chi_i, chi_f, *exact[i, f], *grid.sigmas[i, f], *ratio[i, f],
                 grid.near_singular[i, f]]
            )
    return write_csv(header, rows)


def sg_max(cfg):
    bound = sg.max_anomalous_sz(sg.SGBeam(cfg.sg))
    grid_max = float(np.abs(_phase_grid(cfg).means[..., 2]).max())
    return write_csv(
        ["alpha", "coth_bound", "grid_max", "rel_diff"],
        [[cfg.sg.alpha, bound, grid_max, abs(grid_max - bound) / bound]],
    )


def scatter_report(cfg):
    report = scatter1d.scatter_report(cfg.scatter, cfg.quadrature)
    record = {k: v for k, v in asdict(report).items() if k not in ("closed", "deviations")}
    record.update({f"closed_{k}": v for k, v in report.closed.items()})
    record.update({f"deviation_{k}": v for k, v in report.deviations.items()})
    return _single_row(record)


def te_report(cfg):
    c = cfg.scatter
    report = time_energy_uncertainty_report(scatter1d.overlap_model(c), cfg.quadrature)
    record = asdict(report)
    record["large_separation"] = scatter1d.large_separation(c)
    record["product_far_closed"] = scatter1d.product_far(c.hbar, c.pre.gamma, c.pre.momentum)
    return _single_row(record)


# unc-check sampling ranges (uniform); momenta are large enough that the
# overlap decays well before the quadrature truncation, and p_f is drawn as
# p_i plus the listed offset so the post-selection is not momentum-orthogonal
PAIR_RANGES = {
    "gamma": (0.5, 2.0),
    "x_i": (-3.0, 0.0),
    "p_i": (10.0, 15.0),
    "gamma_f": (0.5, 2.0),
    "x_f": (0.0, 3.0),
    "p_f_offset": (-1.0, 1.0),
}
ALPHA_RANGE = (0.2, 2.0)
STRONG_T_RANGE = (0.0, 3.0)


def _random_spinor(rng):
    up, down = rng.normal(size=2) + 1j * rng.normal(size=2)
    return SpinorAmplitudes.normalized(up, down)


def _sample_case(rng):
    pair = {key: rng.uniform(*bounds) for key, bounds in PAIR_RANGES.items()}
    return {
        "pair": pair,
        "alpha": rng.uniform(*ALPHA_RANGE),
        "pre": _random_spinor(rng),
        "post": _random_spinor(rng),
        "t_strong": rng.uniform(*STRONG_T_RANGE),
    }


def _gap_results(moments, pairs, prefix):
    for a, b in pairs:
        gap = uncertainty_gap(moments, a, b)
        yield f"{prefix}gap_{a}_{b}", gap, gap >= -gap_tolerance(moments, a, b)


def _check_case(case, spec):
    p = case["pair"]
    pair = scatter1d.GaussianPair(
        pre=CoherentState1D(p["gamma"], p["x_i"], p["p_i"]),
        post=CoherentState1D(p["gamma_f"], p["x_f"], p["p_i"] + p["p_f_offset"]),
    )
    model = scatter1d.overlap_model(pair)
    moments = time_average(with_energy(model), ["x", "p", "T", ENERGY], spec)
    yield from _gap_results(moments, GAP_PAIRS_SCATTER, "")

    # raises when the integration-by-parts identity or the bound fails
    report = time_energy_uncertainty_report(model, spec)
    yield "time_energy_identity", report.commutator_mean.imag, True
    yield "time_energy_bound", report.product_lhs - report.bound_rhs, True

    config = SGConfig(alpha=case["alpha"], pre_spinor=case["pre"], post_spinor=case["post"])
    beam = sg.SGBeam(config)
    spins = sg.spin_moments(beam, spec)
    yield from _gap_results(spins, GAP_PAIRS_SPIN, "spin_")
    _, _, var_product = sg.spin_commutators(spins, config.post_spinor)
    yield "spin_variance_product", var_product, True
    for j in sg.SPINS:
        bound = sg.time_spin_uncertainty(spins, j)
        yield f"time_spin_{j}", bound.lhs - bound.rhs, True

    strong = sg.strong_uncertainty_gap(beam, case["t_strong"])
    yield "strong_gap", strong, strong >= 0


def unc_check(cfg):
    rng = np.random.default_rng(cfg.seed)
    rows, failures = [], 0
    for index in range(cfg.n_cases):
        case = _sample_case(rng)
        try:
            results = list(_check_case(case, cfg.quadrature))
        except (IdentityMismatch, InequalityViolation) as err:
            results = [(type(err).__name__, float("nan"), False)]
        ok = all(passed for _, _, passed in results)
        failures += not ok
        rows.extend([index, name, value, passed] for name, value, passed in results)
    text = write_csv(["case", "check", "value", "passed"], rows)
    summary = f"unc-check: {cfg.n_cases - failures}/{cfg.n_cases} cases pass"
    return text, summary, failures


RUNNERS = {
    "sg-density": sg_density,
    "sg-pt": sg_pt,
    "sg-phase-grid": sg_phase_grid,
    "sg-max": sg_max,
    "scatter-report": scatter_report,
    "te-report": te_report,
}


def run(cfg):
    """Run a validated configuration; returns (csv text, summary or None, exit code)."""
    if cfg.command == "unc-check":
        text, summary, failures = unc_check(cfg)
        return text, summary, EXIT_CHECK if failures else EXIT_OK
    return RUNNERS[cfg.command](cfg), None, EXIT_OK


def _parser():
    parser = argparse.ArgumentParser(prog="weakflux", description=__doc__)
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="run configuration file (defaults when omitted)")
    parser.add_argument("--out", help="CSV output path (stdout when omitted)")
    parser.add_argument("--threads", type=int, help="worker threads for grid sweeps")
    parser.add_argument("--seed", type=int, help="random seed for unc-check")
    return parser


def _load(args):
    text = ""
    if args.config:
        with open(args.config, encoding="utf-8") as handle:
            text = handle.read()
    cfg = parse_config(text, command=args.command)
    overrides = {
        key: value
        for key, value in (("out", args.out), ("threads", args.threads), ("seed", args.seed))
        if value is not None
    }
    if overrides.get("threads", 1) < 1:
        raise ValidationError("threads must be at least 1")
    return replace(cfg, **overrides)


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        cfg = _load(args)
    except (ParseError, ValidationError, OSError) as err:
        print(f"weakflux: {err}", file=sys.stderr)
        return EXIT_INPUT
    try:
        text, summary, code = run(cfg)
    except WeakfluxError as err:
        print(f"weakflux: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    try:
        if cfg.out:
            with open(cfg.out, "w", encoding="utf-8", newline="") as handle:
                handle.write(text)
        else:
            sys.stdout.write(text)
    except OSError as err:
        print(f"weakflux: {err}", file=sys.stderr)
        return EXIT_INPUT
    if summary:
        print(summary, file=sys.stderr)
    return code
