"""Experiment configuration: INI grammar, validation, sweeps and presets.

A config file is an INI file with the sections below. Every key is
optional (defaults are the desk-scale convergence setting); unknown
sections or keys are rejected::

    [problem]
    d = 100              # feature dimension
    t_tasks = 200        # number of tasks T
    r = 2                # rank
    n = 30               # samples per task
    l_nodes = 10         # nodes L
    spectrum = gaussian  # gaussian | spectrum
    kappa = 1.0          # target condition number in spectrum mode

    [graph]
    p = 0.5
    graph_policy = per_trial   # per_trial | fixed
    max_retries = 1000

    [init]
    t_pm = 30
    t_con_init = 10
    hints = ground_truth       # ground_truth | explicit
    kappa_hint = 1.0           # used when hints = explicit
    mu_hint = 1.0

    [optimizer]
    algorithms = dif_altgdmin, altgdmin_central, dec_altgdmin, dgd_variant
    t_gd = 300
    t_con_gd = 10
    eta = auto                 # auto | theory | <number>
    c_eta = 0.4
    sample_split = false
    dgd_include_self = false

    [comm]
    latency = 0.02
    bandwidth = 150e6
    bytes_per_scalar = 8

    [experiment]
    trials = 20
    master_seed = 0
    compute_time = measured    # measured | none
    eps_con = 0.01             # accuracy used for the reported gamma bound

    [sweep]                    # optional; makes `run` perform a sweep
    axis = p
    values = 0.05, 0.25

Sweep axes are field names (``p``, ``l_nodes``, ``t_con_gd``, ...),
optionally qualified by their section (``graph.p``). The alias ``t_con``
sets ``t_con_init`` and ``t_con_gd`` together.
"""

import configparser
import dataclasses
from dataclasses import dataclass, fields
from typing import Tuple, Union

from ..errors import ConfigError
from ..optimizer import ALGORITHMS

SECTIONS = {
    "problem": ("d", "t_tasks", "r", "n", "l_nodes", "spectrum", "kappa"),
    "graph": ("p", "graph_policy", "max_retries"),
    "init": ("t_pm", "t_con_init", "hints", "kappa_hint", "mu_hint"),
    "optimizer": ("algorithms", "t_gd", "t_con_gd", "eta", "c_eta", "sample_split", "dgd_include_self"),
    "comm": ("latency", "bandwidth", "bytes_per_scalar"),
    "experiment": ("trials", "master_seed", "compute_time", "eps_con"),
}
AXIS_ALIASES = {"t_con": ("t_con_init", "t_con_gd")}


@dataclass(frozen=True)
class ExperimentConfig:
    d: int = 100
    t_tasks: int = 200
    r: int = 2
    n: int = 30
    l_nodes: int = 10
    spectrum: str = "gaussian"
    kappa: float = 1.0
    p: float = 0.5
    graph_policy: str = "per_trial"
    max_retries: int = 1000
    t_pm: int = 30
    t_con_init: int = 10
    hints: str = "ground_truth"
    kappa_hint: float = 1.0
    mu_hint: float = 1.0
    algorithms: Tuple[str, ...] = ALGORITHMS
    t_gd: int = 300
    t_con_gd: int = 10
    eta: Union[str, float] = "auto"
    c_eta: float = 0.4
    sample_split: bool = False
    dgd_include_self: bool = False
    latency: float = 20e-3
    bandwidth: float = 150e6
    bytes_per_scalar: int = 8
    trials: int = 20
    master_seed: int = 0
    compute_time: str = "measured"
    eps_con: float = 0.01

    def __post_init__(self):
        validate(self)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def with_axis_value(self, axis, value):
        """Copy with sweep `axis` set to `value` (a string or an already-typed value)."""
        names = resolve_axis(axis)
        return self.replace(**{name: coerce(name, value) for name in names})

    def to_ini(self):
        out = []
        for section, keys in SECTIONS.items():
            out.append(f"[{section}]")
            for key in keys:
                out.append(f"{key} = {format_value(getattr(self, key))}")
            out.append("")
        return "\n".join(out)


_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}
_INT_FIELDS = {"d", "t_tasks", "r", "n", "l_nodes", "max_retries", "t_pm", "t_con_init", "t_gd",
               "t_con_gd", "bytes_per_scalar", "trials", "master_seed"}
_FLOAT_FIELDS = {"kappa", "p", "kappa_hint", "mu_hint", "c_eta", "latency", "bandwidth", "eps_con"}
_BOOL_FIELDS = {"sample_split", "dgd_include_self"}
_CHOICES = {
    "spectrum": ("gaussian", "spectrum"),
    "graph_policy": ("per_trial", "fixed"),
    "hints": ("ground_truth", "explicit"),
    "compute_time": ("measured", "none"),
}


def format_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def coerce(name, raw):
    """Parse the string `raw` for field `name`; typed values pass through."""
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    try:
        if name in _INT_FIELDS:
            as_float = float(text)
            if not as_float.is_integer():
                raise ValueError(text)
            return int(as_float)
        if name in _FLOAT_FIELDS:
            return float(text)
        if name in _BOOL_FIELDS:
            lowered = text.lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if name == "algorithms":
            return tuple(part.strip() for part in text.split(",") if part.strip())
        if name == "eta":
            return text if text in ("auto", "theory") else float(text)
    except ValueError:
        raise ConfigError(f"{name}: cannot parse {raw!r}") from None
    return text


def validate(cfg):
    for name in ("d", "t_tasks", "r", "n", "l_nodes", "max_retries", "t_pm", "t_con_init", "trials"):
        if getattr(cfg, name) < 1:
            raise ConfigError(f"{name}: must be >= 1, got {getattr(cfg, name)}")
    for name in ("t_gd", "t_con_gd"):
        if getattr(cfg, name) < 0:
            raise ConfigError(f"{name}: must be >= 0, got {getattr(cfg, name)}")
    if cfg.r > min(cfg.d, cfg.t_tasks):
        raise ConfigError(f"r: {cfg.r} exceeds min(d, t_tasks) = {min(cfg.d, cfg.t_tasks)}")
    if cfg.l_nodes > cfg.t_tasks:
        raise ConfigError(f"l_nodes: {cfg.l_nodes} exceeds t_tasks = {cfg.t_tasks}")
    if cfg.n < cfg.r:
        raise ConfigError(f"n: {cfg.n} samples cannot fit rank {cfg.r}")
    if not 0 < cfg.p <= 1:
        raise ConfigError(f"p: must lie in (0, 1], got {cfg.p}")
    for name, choices in _CHOICES.items():
        if getattr(cfg, name) not in choices:
            raise ConfigError(f"{name}: expected one of {choices}, got {getattr(cfg, name)!r}")
    if not cfg.algorithms:
        raise ConfigError("algorithms: empty list")
    for alg in cfg.algorithms:
        if alg not in ALGORITHMS:
            raise ConfigError(f"algorithms: unknown algorithm {alg!r}")
    if len(set(cfg.algorithms)) != len(cfg.algorithms):
        raise ConfigError("algorithms: duplicate entries")
    if not 0 < cfg.c_eta < 0.5:
        raise ConfigError(f"c_eta: must lie in (0, 0.5), got {cfg.c_eta}")
    if not isinstance(cfg.eta, str) and not cfg.eta > 0:
        raise ConfigError(f"eta: explicit step size must be > 0, got {cfg.eta}")
    if cfg.kappa < 1:
        raise ConfigError(f"kappa: must be >= 1, got {cfg.kappa}")
    if cfg.kappa_hint < 1 or cfg.mu_hint < 1:
        raise ConfigError("kappa_hint/mu_hint: must be >= 1")
    if cfg.latency < 0 or cfg.bandwidth <= 0 or cfg.bytes_per_scalar < 1:
        raise ConfigError("latency/bandwidth/bytes_per_scalar: latency >= 0, bandwidth > 0, bytes >= 1")
    if not 0 < cfg.eps_con < 1:
        raise ConfigError(f"eps_con: must lie in (0, 1), got {cfg.eps_con}")
    if cfg.sample_split and cfg.n < 2 * cfg.t_gd + 2:
        raise ConfigError(f"n: sample splitting needs n >= {2 * cfg.t_gd + 2}, got {cfg.n}")


def resolve_axis(axis):
    """Field names set by sweep `axis`."""
    name = axis.split(".", 1)[-1]
    section = axis.split(".", 1)[0] if "." in axis else None
    if name in AXIS_ALIASES and section is None:
        return AXIS_ALIASES[name]
    if name not in _FIELD_TYPES:
        raise ConfigError(f"axis: unknown config field {axis!r}")
    if section is not None and name not in SECTIONS.get(section, ()):
        raise ConfigError(f"axis: field {name!r} is not in section [{section}]")
    return (name,)


@dataclass(frozen=True)
class SweepSpec:
    base: ExperimentConfig
    axis: str
    values: tuple

    def __post_init__(self):
        resolve_axis(self.axis)
        if not self.values:
            raise ConfigError("values: sweep needs at least one value")
        for value in self.values:
            self.base.with_axis_value(self.axis, value)


def parse_values(text):
    return tuple(part.strip() for part in text.split(",") if part.strip())


def parse_config_text(text, source="<config>"):
    """Parse INI text into ``(ExperimentConfig, Optional[SweepSpec])``."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    values = {}
    sweep = None
    for section in parser.sections():
        if section == "sweep":
            unknown = set(parser[section]) - {"axis", "values"}
            if unknown:
                raise ConfigError(f"sweep.{sorted(unknown)[0]}: unknown key")
            sweep = (parser[section].get("axis"), parse_values(parser[section].get("values", "")))
            continue
        if section not in SECTIONS:
            raise ConfigError(f"[{section}]: unknown section")
        for key, raw in parser[section].items():
            if key not in SECTIONS[section]:
                raise ConfigError(f"{section}.{key}: unknown key")
            values[key] = coerce(key, raw)
    try:
        cfg = ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    spec = None
    if sweep is not None:
        if not sweep[0]:
            raise ConfigError("sweep.axis: missing")
        spec = SweepSpec(base=cfg, axis=sweep[0], values=sweep[1])
    return cfg, spec


def load_config(path):
    with open(path) as fh:
        return parse_config_text(fh.read(), source=str(path))


# --- presets ----------------------------------------------------------------

_FIG1_DESK = dict(d=100, t_tasks=200, r=2, n=30, l_nodes=30, p=0.2, t_pm=30,
                  t_con_init=5, t_con_gd=5, t_gd=200, trials=20)
_FIG1_FULL = dict(d=300, t_tasks=800, r=4, n=50, l_nodes=300, p=0.03, t_pm=30,
                   t_con_init=5, t_con_gd=5, t_gd=200, trials=100)
_FIG2_DESK = dict(d=150, t_tasks=150, r=2, n=30, l_nodes=10, p=0.5, t_pm=30,
                  t_con_init=5, t_con_gd=5, t_gd=300, trials=20)
_FIG2_FULL = dict(d=600, t_tasks=600, r=4, n=50, l_nodes=20, p=0.25, t_pm=30,
                   t_con_init=5, t_con_gd=5, t_gd=400, trials=100)

# name -> (desk base, paper base, axis, desk values, paper values)
PRESETS = {
    "fig1a": (_FIG1_DESK, _FIG1_FULL, "t_con", (5, 20), (10, 20)),
    "fig1b": (_FIG1_DESK, _FIG1_FULL, "p", (0.1, 0.3), (0.05, 0.25)),
    "fig1c": (_FIG1_DESK, _FIG1_FULL, "l_nodes", (20, 40), (400, 800)),
    "fig2a": (_FIG2_DESK, _FIG2_FULL, "d", (100, 200), (400, 800)),
    "fig2b": (_FIG2_DESK, _FIG2_FULL, "r", (2, 4), (2, 4)),
    "fig2c": (_FIG2_DESK, _FIG2_FULL, "t_tasks", (100, 200), (400, 800)),
}


def preset(name, paper_scale=False):
    """Sweep spec for a named figure preset."""
    if name not in PRESETS:
        raise ConfigError(f"config: unknown preset {name!r}; choose from {sorted(PRESETS)}")
    desk, paper, axis, desk_values, paper_values = PRESETS[name]
    base = ExperimentConfig(**(paper if paper_scale else desk))
    return SweepSpec(base=base, axis=axis, values=tuple(paper_values if paper_scale else desk_values))


def sweep_key(value):
    """Canonical text of a sweep value, used in directory names and the key column."""
    if isinstance(value, str):
        return value.strip()
    return format_value(value)

