"""Experiment configuration files.

Plain INI text (UTF-8, ``#`` comments) with the sections ``experiment``,
``grid``, ``forcing``, ``initial``, ``time`` and, where relevant, ``scan``,
``analysis``, ``rescale`` and ``waveconv``::

    [experiment]
    name = evolve
    out_dir = runs/evolve
    plot = false

    [grid]
    n = 1024

    [forcing]
    kind = cosine_squared
    kappa0 = 1
    omega = 0.0

    [initial]
    p = 0.0
    kind = sine
    amplitude = 1.0

    [time]
    t_end = 200.0
    t_burn = auto
    cfl = 0.45
    record_every = 1.0

Scan values are either a comma list or ``start:stop:count`` (inclusive,
evenly spaced). ``serialize`` writes the canonical form; a file in canonical
form survives ``serialize(parse(text))`` unchanged up to comments and blank
lines.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .torus import GridError, TorusGrid

EXPERIMENTS = ("evolve", "stationary", "hbar", "spectrum", "resonance", "rescale", "waveconv")
FORCING_KINDS = ("cosine_squared", "tabulated")
INITIAL_KINDS = ("sine", "stationary", "constant", "file")
WAVE_MODES = ("stationary", "affine")

_ALLOWED = {
    "experiment": ("name", "out_dir", "plot"),
    "grid": ("n",),
    "forcing": ("kind", "kappa0", "table", "omega"),
    "initial": ("p", "kind", "amplitude", "index", "path"),
    "time": ("t_end", "t_burn", "cfl", "record_every"),
    "scan": ("parameter", "values"),
    "analysis": ("kmin", "kmax", "shock_fraction"),
    "rescale": ("m",),
    "waveconv": ("mode", "alpha", "m"),
}
_SCAN_PARAMETERS = {"hbar": ("p",), "resonance": ("omega",)}


class ConfigError(ValueError):
    """Invalid configuration; the message names the file, line and field."""


@dataclass(frozen=True)
class ScanSpec:
    parameter: str
    values: tuple[float, ...]
    linspace: tuple[float, float, int] | None = None

    def text(self) -> str:
        if self.linspace is not None:
            lo, hi, num = self.linspace
            return f"{lo!r}:{hi!r}:{num}"
        return ", ".join(repr(v) for v in self.values)


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    grid_n: int = 1024
    forcing_kind: str = "cosine_squared"
    kappa0: int = 1
    table: str | None = None
    omega: float = 0.0
    p: float = 0.0
    u0_kind: str = "sine"
    amplitude: float = 1.0
    index: int = 0
    u0_path: str | None = None
    t_end: float | None = 1.0
    t_burn: float | None = None
    cfl: float = 0.45
    record_every: float = 0.1
    scan: ScanSpec | None = None
    kmin: int = 4
    kmax: int = 64
    shock_fraction: float = 0.25
    rescale_m: tuple[int, ...] = (2, 4, 8)
    wave_mode: str = "stationary"
    alpha: float = 0.0
    wave_m: tuple[int, ...] = (1, 2, 4, 8, 16)
    out_dir: str = "runs"
    plot: bool = False
    base_dir: str = field(default=".", compare=False)

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else Path(self.base_dir) / p

    def with_updates(self, **kw) -> ExperimentConfig:
        return replace(self, **kw)


# -- parsing ------------------------------------------------------------------

def _line_index(text: str) -> dict[tuple[str, str], int]:
    """Line number of every ``key`` inside every ``[section]``."""
    out: dict[tuple[str, str], int] = {}
    section = None
    for i, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s or s.startswith(("#", ";")):
            continue
        m = re.match(r"\[([^\]]+)\]", s)
        if m:
            section = m.group(1).strip()
            out[(section, "")] = i
            continue
        if section is not None and ("=" in s or ":" in s):
            key = re.split(r"[=:]", s, maxsplit=1)[0].strip().lower()
            out.setdefault((section, key), i)
    return out


class _Reader:
    def __init__(self, parser: configparser.ConfigParser, lines, source: str) -> None:
        self.parser = parser
        self.lines = lines
        self.source = source

    def error(self, section: str, key: str, msg: str) -> ConfigError:
        line = self.lines.get((section, key)) or self.lines.get((section, ""))
        where = f"{self.source}:{line}" if line else self.source
        name = f"[{section}] {key}" if key else f"[{section}]"
        return ConfigError(f"{where}: {name}: {msg}")

    def has(self, section: str, key: str) -> bool:
        return self.parser.has_option(section, key)

    def raw(self, section: str, key: str, default=None) -> str | None:
        if not self.has(section, key):
            return default
        return self.parser.get(section, key).strip()

    def get(self, section, key, conv, default, what: str):
        text = self.raw(section, key)
        if text is None:
            return default
        try:
            return conv(text)
        except (TypeError, ValueError):
            raise self.error(section, key, f"expected {what}, got {text!r}") from None


def _float(text: str) -> float:
    v = float(text)
    if not math.isfinite(v):
        raise ValueError
    return v


def _int(text: str) -> int:
    return int(text, 10)


def _bool(text: str) -> bool:
    t = text.lower()
    if t in ("true", "yes", "on", "1"):
        return True
    if t in ("false", "no", "off", "0"):
        return False
    raise ValueError


def _optional_float(text: str) -> float | None:
    return None if text.lower() == "auto" else _float(text)


def _int_list(text: str) -> tuple[int, ...]:
    vals = tuple(_int(t.strip()) for t in text.split(",") if t.strip())
    if not vals:
        raise ValueError
    return vals


def parse_scan_values(text: str) -> tuple[tuple[float, ...], tuple[float, float, int] | None]:
    text = text.strip()
    if ":" in text:
        parts = [t.strip() for t in text.split(":")]
        if len(parts) != 3:
            raise ValueError
        lo, hi, num = _float(parts[0]), _float(parts[1]), _int(parts[2])
        if num < 2 or hi <= lo:
            raise ValueError
        vals = np.linspace(lo, hi, num)
        # snap to 12 decimals so that e.g. 0.05 steps land on their decimal values
        vals = tuple(float(v) for v in np.round(vals, 12))
        return vals, (lo, hi, num)
    vals = tuple(_float(t.strip()) for t in text.split(",") if t.strip())
    if not vals:
        raise ValueError
    return vals, None


def parse(text: str, source: str = "<config>", base_dir: str | Path = ".",
          experiment: str | None = None) -> ExperimentConfig:
    """Parse and validate configuration text."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",),
                                       comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    r = _Reader(parser, _line_index(text), source)

    for section in parser.sections():
        if section not in _ALLOWED:
            raise r.error(section, "", "unknown section")
        for key in parser.options(section):
            if key not in _ALLOWED[section]:
                raise r.error(section, key, "unknown key")

    name = r.raw("experiment", "name", experiment)
    if name is None:
        raise ConfigError(f"{source}: [experiment] name: missing")
    name = name.lower()
    if name not in EXPERIMENTS:
        raise r.error("experiment", "name", f"unknown experiment {name!r}; "
                      f"choose one of {', '.join(EXPERIMENTS)}")
    if experiment is not None and name != experiment:
        raise r.error("experiment", "name",
                      f"config is for {name!r} but the command is {experiment!r}")
    d = default_config(name)

    kw: dict = {"experiment": name, "base_dir": str(base_dir)}
    kw["out_dir"] = r.raw("experiment", "out_dir", d.out_dir)
    kw["plot"] = r.get("experiment", "plot", _bool, d.plot, "true or false")
    n = r.get("grid", "n", _int, d.grid_n, "an integer")
    try:
        TorusGrid(n)
    except GridError as exc:
        raise r.error("grid", "n", str(exc)) from None
    kw["grid_n"] = n

    kind = r.raw("forcing", "kind", d.forcing_kind).lower()
    if kind not in FORCING_KINDS:
        raise r.error("forcing", "kind", f"expected one of {', '.join(FORCING_KINDS)}")
    kw["forcing_kind"] = kind
    if kind == "cosine_squared":
        k0 = r.get("forcing", "kappa0", _int, d.kappa0, "a positive integer")
        if k0 < 1:
            raise r.error("forcing", "kappa0", "must be a positive integer")
        kw["kappa0"] = k0
    else:
        table = r.raw("forcing", "table")
        if not table:
            raise r.error("forcing", "table", "tabulated forcing needs a table path")
        if not (Path(base_dir) / table).is_file() and not Path(table).is_file():
            raise r.error("forcing", "table", f"file not found: {table}")
        kw["table"] = table
    kw["omega"] = r.get("forcing", "omega", _float, d.omega, "a real number")

    kw["p"] = r.get("initial", "p", _float, d.p, "a real number")
    u0_kind = r.raw("initial", "kind", d.u0_kind).lower()
    if u0_kind not in INITIAL_KINDS:
        raise r.error("initial", "kind", f"expected one of {', '.join(INITIAL_KINDS)}")
    kw["u0_kind"] = u0_kind
    if u0_kind == "sine":
        kw["amplitude"] = r.get("initial", "amplitude", _float, d.amplitude, "a real number")
    elif u0_kind == "stationary":
        idx = r.get("initial", "index", _int, d.index, "an integer")
        if idx < 0:
            raise r.error("initial", "index", "must be nonnegative")
        kw["index"] = idx
    elif u0_kind == "file":
        path = r.raw("initial", "path")
        if not path:
            raise r.error("initial", "path", "file initial data needs a path")
        if not (Path(base_dir) / path).is_file() and not Path(path).is_file():
            raise r.error("initial", "path", f"file not found: {path}")
        kw["u0_path"] = path

    kw["t_end"] = r.get("time", "t_end", _optional_float, d.t_end, "a real number or auto")
    kw["t_burn"] = r.get("time", "t_burn", _optional_float, d.t_burn, "a real number or auto")
    kw["cfl"] = r.get("time", "cfl", _float, d.cfl, "a real number")
    kw["record_every"] = r.get("time", "record_every", _float, d.record_every, "a real number")
    if kw["t_end"] is not None and kw["t_end"] <= 0:
        raise r.error("time", "t_end", "must be positive")
    if kw["t_end"] is None and name != "resonance":
        raise r.error("time", "t_end", "auto is only available for resonance scans")
    if kw["t_burn"] is not None and kw["t_end"] is not None and not 0 <= kw["t_burn"] < kw["t_end"]:
        raise r.error("time", "t_burn", "must satisfy 0 <= t_burn < t_end")
    if not 0 < kw["cfl"] <= 0.5:
        raise r.error("time", "cfl", "must lie in (0, 0.5]")
    if kw["record_every"] <= 0:
        raise r.error("time", "record_every", "must be positive")

    scan = d.scan
    if parser.has_section("scan"):
        allowed = _SCAN_PARAMETERS.get(name, ())
        param = r.raw("scan", "parameter", scan.parameter if scan else None)
        if param not in allowed:
            raise r.error("scan", "parameter",
                          f"{name} scans accept {', '.join(allowed) or 'no parameter'}")
        text = r.raw("scan", "values")
        if text is None:
            raise r.error("scan", "values", "missing")
        try:
            vals, lin = parse_scan_values(text)
        except ValueError:
            raise r.error("scan", "values",
                          "expected a comma list or start:stop:count") from None
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise r.error("scan", "values", "values must be strictly increasing")
        scan = ScanSpec(param, vals, lin)
    kw["scan"] = scan

    kw["kmin"] = r.get("analysis", "kmin", _int, d.kmin, "an integer")
    kw["kmax"] = r.get("analysis", "kmax", _int, d.kmax, "an integer")
    if not 2 <= kw["kmin"] < kw["kmax"] <= n // 4:
        raise r.error("analysis", "kmax", f"need 2 <= kmin < kmax <= n/4 = {n // 4}")
    kw["shock_fraction"] = r.get("analysis", "shock_fraction", _float, d.shock_fraction,
                                 "a real number")
    if not 0 < kw["shock_fraction"] < 1:
        raise r.error("analysis", "shock_fraction", "must lie in (0, 1)")

    kw["rescale_m"] = r.get("rescale", "m", _int_list, d.rescale_m, "a comma list of integers")
    for m in kw["rescale_m"]:
        if m < 1 or n % m:
            raise r.error("rescale", "m", f"m = {m} must be positive and divide n = {n}")

    mode = r.raw("waveconv", "mode", d.wave_mode).lower()
    if mode not in WAVE_MODES:
        raise r.error("waveconv", "mode", f"expected one of {', '.join(WAVE_MODES)}")
    kw["wave_mode"] = mode
    kw["alpha"] = r.get("waveconv", "alpha", _float, d.alpha, "a real number")
    kw["wave_m"] = r.get("waveconv", "m", _int_list, d.wave_m, "a comma list of integers")
    for m in kw["wave_m"]:
        if m < 1 or n % m:
            raise r.error("waveconv", "m", f"m = {m} must be positive and divide n = {n}")
    return ExperimentConfig(**kw)


def load(path: str | Path, experiment: str | None = None) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from None
    return parse(text, source=str(path), base_dir=path.parent, experiment=experiment)


# -- defaults -----------------------------------------------------------------

def default_config(experiment: str) -> ExperimentConfig:
    """Built-in defaults, matching the configs shipped in ``configs/``."""
    base = ExperimentConfig(experiment=experiment, out_dir=f"runs/{experiment}")
    if experiment == "evolve":
        return replace(base, t_end=200.0, record_every=1.0)
    if experiment == "stationary":
        return replace(base, t_end=1.0)
    if experiment == "hbar":
        vals, lin = parse_scan_values("-3.0:3.0:101")
        return replace(base, scan=ScanSpec("p", vals, lin))
    if experiment == "spectrum":
        return replace(base, grid_n=4096, t_end=5.0, record_every=0.1)
    if experiment == "resonance":
        vals, lin = parse_scan_values("-1.5:1.5:61")
        return replace(base, t_end=None, t_burn=None, scan=ScanSpec("omega", vals, lin))
    if experiment == "rescale":
        return replace(base, t_end=5.0, record_every=0.5)
    if experiment == "waveconv":
        return replace(base, t_end=200.0, record_every=1.0)
    raise ConfigError(f"unknown experiment {experiment!r}")


# -- serialization ------------------------------------------------------------

def _fmt_opt(v: float | None) -> str:
    return "auto" if v is None else repr(float(v))


def serialize(cfg: ExperimentConfig) -> str:
    """Canonical text: fixed section and key order, ``repr`` floats."""
    out = ["[experiment]", f"name = {cfg.experiment}", f"out_dir = {cfg.out_dir}",
           f"plot = {'true' if cfg.plot else 'false'}", "",
           "[grid]", f"n = {cfg.grid_n}", "",
           "[forcing]", f"kind = {cfg.forcing_kind}"]
    if cfg.forcing_kind == "cosine_squared":
        out.append(f"kappa0 = {cfg.kappa0}")
    else:
        out.append(f"table = {cfg.table}")
    out += [f"omega = {cfg.omega!r}", "", "[initial]", f"p = {cfg.p!r}", f"kind = {cfg.u0_kind}"]
    if cfg.u0_kind == "sine":
        out.append(f"amplitude = {cfg.amplitude!r}")
    elif cfg.u0_kind == "stationary":
        out.append(f"index = {cfg.index}")
    elif cfg.u0_kind == "file":
        out.append(f"path = {cfg.u0_path}")
    out += ["", "[time]", f"t_end = {_fmt_opt(cfg.t_end)}", f"t_burn = {_fmt_opt(cfg.t_burn)}",
            f"cfl = {cfg.cfl!r}", f"record_every = {cfg.record_every!r}"]
    if cfg.scan is not None:
        out += ["", "[scan]", f"parameter = {cfg.scan.parameter}", f"values = {cfg.scan.text()}"]
    out += ["", "[analysis]", f"kmin = {cfg.kmin}", f"kmax = {cfg.kmax}",
            f"shock_fraction = {cfg.shock_fraction!r}"]
    if cfg.experiment == "rescale":
        out += ["", "[rescale]", f"m = {', '.join(str(m) for m in cfg.rescale_m)}"]
    if cfg.experiment == "waveconv":
        out += ["", "[waveconv]", f"mode = {cfg.wave_mode}", f"alpha = {cfg.alpha!r}",
                f"m = {', '.join(str(m) for m in cfg.wave_m)}"]
    return "\n".join(out) + "\n"


def normalize(text: str) -> str:
    """Strip comments and blank lines, tidy ``key = value`` spacing, one blank line
    between sections."""
    out: list[str] = []
    for line in text.splitlines():
        s = line.split("#", 1)[0].strip()
        if not s or s.startswith(";"):
            continue
        if s.startswith("["):
            if out:
                out.append("")
            out.append(s)
            continue
        key, _, value = s.partition("=")
        out.append(f"{key.strip().lower()} = {value.strip()}")
    return "\n".join(out) + "\n"
