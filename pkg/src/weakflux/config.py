"""Run configuration: ``key = value`` lines grouped in ``[section]`` blocks.

Sections are ``sg``, ``scatter``, ``grid``, ``quadrature`` and ``check``.
Keys may also appear before the first section when the name belongs to one
section only; ``command``, ``out`` and ``threads`` live there exclusively.
``#`` starts a comment.
"""

import configparser
import re
from dataclasses import dataclass, field

from .errors import ParseError, ValidationError
from .numerics import DEFAULT_SPEC, QuadratureSpec
from .scatter1d import ScatterConfig
from .states import SGConfig

COMMANDS = (
    "sg-density",
    "sg-pt",
    "sg-phase-grid",
    "sg-max",
    "scatter-report",
    "te-report",
    "unc-check",
)
TOP = "top"

SCHEMA = {
    TOP: {"command": str, "out": str, "threads": int},
    "sg": {
        "alpha": float,
        "k_y": float,
        "y_s": float,
        "y_i": float,
        "z0": float,
        "chi_i": float,
        "chi_f": float,
    },
    "scatter": {
        "gamma": float,
        "x_i": float,
        "p_i": float,
        "gamma_f": float,
        "x_f": float,
        "p_f": float,
        "mass": float,
        "hbar": float,
    },
    "grid": {
        "n_chi": int,
        "z0_min": float,
        "z0_max": float,
        "n_z0": int,
        "t_min": float,
        "t_max": float,
        "n_t": int,
    },
    "quadrature": {
        "rel_tol": float,
        "abs_tol": float,
        "truncation_ratio": float,
        "max_subdivisions": int,
    },
    "check": {"n": int, "seed": int},
}

_HOME = {}
for _section, _keys in SCHEMA.items():
    for _key in _keys:
        _HOME.setdefault(_key, []).append(_section)

_SECTION_LINE = re.compile(r"\s*\[([^\]]*)\]")
_KEY_LINE = re.compile(r"\s*([^=#\s][^=#]*?)\s*=\s*")


@dataclass(frozen=True)
class GridSettings:
    n_chi: int = 101
    z0_min: float = -8.0
    z0_max: float = 8.0
    n_z0: int = 161
    t_min: float = 0.5
    t_max: float = 1.5
    n_t: int = 101

    def __post_init__(self):
        if self.n_chi < 1 or self.n_z0 < 1 or self.n_t < 1:
            raise ValueError("grid sizes must be at least 1")
        if not self.z0_min < self.z0_max:
            raise ValueError("z0_min must be below z0_max")
        if not 0 <= self.t_min < self.t_max:
            raise ValueError("t range must satisfy 0 <= t_min < t_max")


@dataclass(frozen=True)
class RunConfig:
    command: str
    sg: SGConfig = field(default_factory=SGConfig)
    scatter: ScatterConfig = field(default_factory=ScatterConfig.from_values)
    grid: GridSettings = field(default_factory=GridSettings)
    quadrature: QuadratureSpec = DEFAULT_SPEC
    n_cases: int = 200
    seed: int = 0
    out: str | None = None
    threads: int | None = None


def _positions(text):
    """Map (section, key) to 1-based (line, key column, value column)."""
    found = {}
    section = TOP
    for number, line in enumerate(text.splitlines(), start=1):
        header = _SECTION_LINE.match(line)
        if header:
            section = header.group(1).strip()
            continue
        entry = _KEY_LINE.match(line)
        if entry and not line.lstrip().startswith("#"):
            found.setdefault(
                (section, entry.group(1)), (number, entry.start(1) + 1, entry.end() + 1)
            )
    return found


def _section_lines(text):
    lines = {}
    for number, line in enumerate(text.splitlines(), start=1):
        header = _SECTION_LINE.match(line)
        if header:
            lines.setdefault(header.group(1).strip(), (number, line.index("[") + 1))
    return lines


def _read(text):
    parser = configparser.ConfigParser(
        delimiters=("=",),
        comment_prefixes=("#",),
        inline_comment_prefixes=("#",),
        interpolation=None,
        empty_lines_in_values=False,
    )
    parser.optionxform = str
    try:
        # the synthetic header occupies line 0, so reported line numbers stay 1-based
        parser.read_string(f"[{TOP}]\n{text}")
    except configparser.DuplicateSectionError as err:
        raise ParseError(f"duplicate section [{err.section}]", err.lineno - 1, 1) from None
    except configparser.DuplicateOptionError as err:
        raise ParseError(f"duplicate key {err.option!r}", err.lineno - 1, 1) from None
    except configparser.ParsingError as err:
        line = err.errors[0][0] - 1
        raise ParseError("expected 'key = value' or '[section]'", line, 1) from None
    return parser


def _convert(raw, kind, name, where):
    if kind is str:
        if not raw:
            raise ParseError(f"{name} needs a value", *where)
        return raw
    try:
        return kind(raw)
    except ValueError:
        expected = "an integer" if kind is int else "a number"
        raise ParseError(f"{name} must be {expected}, got {raw!r}", *where) from None


def _collect(text):
    parser = _read(text)
    positions = _positions(text)
    headers = _section_lines(text)
    values = {section: {} for section in SCHEMA}
    for section in parser.sections():
        if section not in SCHEMA or (section == TOP and section in headers):
            raise ParseError(f"unknown section [{section}]", *headers.get(section, (1, 1)))
        for key, raw in parser.items(section, raw=True):
            line, key_column, value_column = positions.get((section, key), (1, 1, 1))
            where = (line, key_column)
            if section == TOP:
                homes = _HOME.get(key, [])
                if len(homes) > 1:
                    raise ParseError(f"key {key!r} is ambiguous; put it in a section", *where)
                target = homes[0] if homes else None
            else:
                target = section if key in SCHEMA[section] else None
            if target is None:
                raise ParseError(f"unknown key {key!r}", *where)
            if key in values[target]:
                raise ParseError(f"key {key!r} given twice", *where)
            values[target][key] = _convert(
                raw.strip(), SCHEMA[target][key], key, (line, value_column)
            )
    return values


def _build(kind, values):
    try:
        return kind(**values)
    except ValueError as err:
        raise ValidationError(str(err)) from None


def parse_config(text, command=None):
    """Parse and validate a run configuration.

    ``command`` overrides the value in the text, as the CLI positional does.
    """
    values = _collect(text)
    top = values[TOP]
    command = command or top.get("command")
    if command is None:
        raise ValidationError("command is required")
    if command not in COMMANDS:
        raise ValidationError(f"command must be one of {', '.join(COMMANDS)}")
    grid = dict(values["grid"])
    if command == "sg-pt":
        grid.setdefault("n_t", 1001)
    threads = top.get("threads")
    if threads is not None and threads < 1:
        raise ValidationError("threads must be at least 1")
    return RunConfig(
        command=command,
        sg=_build(SGConfig, values["sg"]),
        scatter=_build(ScatterConfig.from_values, values["scatter"]),
        grid=_build(GridSettings, grid),
        quadrature=_build(QuadratureSpec, values["quadrature"]),
        n_cases=_check_count(values["check"].get("n", 200)),
        seed=values["check"].get("seed", 0),
        out=top.get("out"),
        threads=threads,
    )


def _check_count(n):
    if n < 0:
        raise ValidationError("check n must be non-negative")
    return n
