"""YAML run configuration: parsing with addressed errors and lossless serialization."""

import copy
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

import yaml

from .distributions import (CopulaSpec, ExponentialLaw, FrechetLaw, LoggammaLaw, ParetoLaw, ZeroLaw)
from .errors import ConfigError, DomainError
from .model import BcdcpModel, JointShockSpec, LineParams

LAW_FIELDS = {
    "zero": (),
    "exponential": ("rate",),
    "loggamma": ("scale", "rate", "c"),
    "frechet": ("scale", "shape"),
    "pareto": ("omega", "scale", "k"),
}
LAW_CLASSES = {"zero": ZeroLaw, "exponential": ExponentialLaw, "loggamma": LoggammaLaw,
               "frechet": FrechetLaw, "pareto": ParetoLaw}
LAW_NAMES = {cls: name for name, cls in LAW_CLASSES.items()}
EXAMPLES = ("5.1", "5.2-fgm", "5.2-gaussian", "5.3-t", "5.4-gumbel", "figure-1")


@dataclass
class McSettings:
    paths: int = 100000
    seed: Optional[int] = None
    burn_in: Optional[object] = None   # None: per-line default; number; or [line1, line2]
    grid_step: Optional[float] = None
    workers: int = 1


@dataclass
class NumericSettings:
    cross_nodes: int = 256
    cross_method: str = "auto"
    cross_mc_paths: int = 1000000
    cross_seed: int = 0
    ode_tol: float = 1e-10


@dataclass
class TableSpec:
    kind: str                      # univariate | bivariate
    numbers: list
    line: int = 1
    thetas: list = field(default_factory=list)


@dataclass
class RunConfig:
    model: BcdcpModel
    horizon: float = 1.0
    loading: float = 1.0
    mode: Optional[str] = None
    stationary: bool = True
    mc: McSettings = field(default_factory=McSettings)
    numeric: NumericSettings = field(default_factory=NumericSettings)
    transform: dict = field(default_factory=dict)
    tables: Optional[TableSpec] = None
    output: dict = field(default_factory=dict)
    name: Optional[str] = None


class _Reader:
    """Pulls typed fields out of nested mappings, naming the location on failure."""

    def __init__(self, data, where):
        if not isinstance(data, dict):
            raise ConfigError(f"{where or 'config'}: expected a mapping, got {type(data).__name__}")
        self.data = data
        self.where = where

    def loc(self, key):
        return f"{self.where}.{key}" if self.where else key

    def sub(self, key, required=True):
        if key not in self.data or self.data[key] is None:
            if required:
                raise ConfigError(f"{self.loc(key)}: missing required section")
            return None
        return _Reader(self.data[key], self.loc(key))

    def num(self, key, default=..., integer=False):
        if key not in self.data or self.data[key] is None:
            if default is ...:
                raise ConfigError(f"{self.loc(key)}: missing required field")
            return default
        v = self.data[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{self.loc(key)}: expected a number, got {v!r}")
        if integer:
            if int(v) != v:
                raise ConfigError(f"{self.loc(key)}: expected an integer, got {v!r}")
            return int(v)
        if not math.isfinite(v):
            raise ConfigError(f"{self.loc(key)}: must be finite")
        return float(v)

    def text(self, key, choices=None, default=...):
        if key not in self.data or self.data[key] is None:
            if default is ...:
                raise ConfigError(f"{self.loc(key)}: missing required field")
            return default
        v = self.data[key]
        if not isinstance(v, str):
            raise ConfigError(f"{self.loc(key)}: expected text, got {v!r}")
        if choices and v not in choices:
            raise ConfigError(f"{self.loc(key)}: must be one of {', '.join(choices)}; got {v!r}")
        return v


def _parse_law(reader):
    kind = reader.text("law", choices=tuple(LAW_FIELDS))
    params = [reader.num(name) for name in LAW_FIELDS[kind]]
    try:
        return LAW_CLASSES[kind](*params)
    except DomainError as exc:
        raise ConfigError(f"{reader.where}: {exc}") from exc


def _law_dict(law):
    name = LAW_NAMES[type(law)]
    out = {"law": name}
    for f in LAW_FIELDS[name]:
        out[f] = getattr(law, f)
    return out


def _parse_line(reader):
    line = LineParams(a=reader.num("a"), delta=reader.num("delta"), lam0=reader.num("lam0"),
                      self_jump=_parse_law(reader.sub("self_jump")),
                      severity=_parse_law(reader.sub("severity")))
    if not line.delta > 0:
        raise ConfigError(f"{reader.loc('delta')}: must be positive")
    if not line.lam0 > 0:
        raise ConfigError(f"{reader.loc('lam0')}: must be positive")
    if line.a < 0:
        raise ConfigError(f"{reader.loc('a')}: must be nonnegative")
    return line


def _parse_model(reader, numeric):
    line1 = _parse_line(reader.sub("line1"))
    line2 = _parse_line(reader.sub("line2"))
    sh = reader.sub("shocks")
    rho = sh.num("rho")
    if rho < 0:
        raise ConfigError(f"{sh.loc('rho')}: must be nonnegative")
    marg = []
    for key in ("marginal1", "marginal2"):
        law = _parse_law(sh.sub(key))
        if not isinstance(law, ExponentialLaw):
            raise ConfigError(f"{sh.loc(key)}: shock marginals must be exponential")
        marg.append(law)
    cr = sh.sub("copula")
    try:
        cop = CopulaSpec(cr.text("family", choices=("fgm", "gaussian", "student_t", "gumbel")),
                         cr.num("theta"), cr.num("dof", 5.0))
    except DomainError as exc:
        raise ConfigError(f"{cr.where}: {exc}") from exc
    shocks = JointShockSpec(rho, marg[0], marg[1], cop, numeric.cross_nodes, numeric.cross_method,
                            numeric.cross_mc_paths, numeric.cross_seed)
    return BcdcpModel(line1, line2, shocks)


def _parse_numeric(reader):
    if reader is None:
        return NumericSettings()
    return NumericSettings(
        cross_nodes=reader.num("cross_nodes", 256, integer=True),
        cross_method=reader.text("cross_method", ("auto", "closed", "quadrature", "mc"), "auto"),
        cross_mc_paths=reader.num("cross_mc_paths", 1000000, integer=True),
        cross_seed=reader.num("cross_seed", 0, integer=True),
        ode_tol=reader.num("ode_tol", 1e-10),
    )


def _parse_mc(reader):
    if reader is None:
        return McSettings()
    burn = reader.data.get("burn_in")
    if burn is not None:
        if isinstance(burn, list):
            if len(burn) != 2 or not all(isinstance(b, (int, float)) and not isinstance(b, bool) for b in burn):
                raise ConfigError(f"{reader.loc('burn_in')}: expected a number or a pair of numbers")
            burn = [float(b) for b in burn]
        else:
            burn = reader.num("burn_in")
    return McSettings(
        paths=reader.num("paths", 100000, integer=True),
        seed=reader.num("seed", None, integer=True),
        burn_in=burn,
        grid_step=reader.num("grid_step", None),
        workers=reader.num("workers", 1, integer=True),
    )


TRANSFORM_KEYS = ("theta", "eta", "nu", "zeta", "upsilon", "gamma")


def _parse_transform(reader):
    if reader is None:
        return {}
    out = {}
    for key in reader.data:
        if key not in TRANSFORM_KEYS:
            raise ConfigError(f"{reader.loc(key)}: unknown transform argument")
        val = reader.data[key]
        if isinstance(val, list):
            if not val or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in val):
                raise ConfigError(f"{reader.loc(key)}: expected a number or a list of numbers")
            out[key] = [float(v) for v in val]
        else:
            out[key] = reader.num(key)
    return out


def _parse_tables(reader):
    if reader is None:
        return None
    kind = reader.text("kind", ("univariate", "bivariate"))
    numbers = reader.data.get("numbers")
    if not isinstance(numbers, list) or not numbers:
        raise ConfigError(f"{reader.loc('numbers')}: expected a list of table labels")
    numbers = [str(n) for n in numbers]
    thetas = reader.data.get("thetas", [])
    if kind == "bivariate":
        if len(numbers) != 3:
            raise ConfigError(f"{reader.loc('numbers')}: a bivariate block needs three labels")
        if not isinstance(thetas, list) or not thetas:
            raise ConfigError(f"{reader.loc('thetas')}: expected a non-empty list")
        thetas = [float(t) for t in thetas]
    return TableSpec(kind, numbers, reader.num("line", 1, integer=True), thetas)


def parse(data, name=None):
    """Build a RunConfig from a decoded YAML document."""
    root = _Reader(data, "")
    numeric = _parse_numeric(root.sub("numeric", required=False))
    model = _parse_model(root.sub("model"), numeric)
    horizon = root.num("horizon", 1.0)
    if not horizon > 0:
        raise ConfigError("horizon: must be positive")
    loading = root.num("loading", 1.0)
    if not 0 <= loading <= 1:
        raise ConfigError("loading: must lie in [0, 1]")
    stationary = data.get("stationary", True)
    if not isinstance(stationary, bool):
        raise ConfigError("stationary: expected true or false")
    output = data.get("output") or {}
    if not isinstance(output, dict):
        raise ConfigError("output: expected a mapping")
    return RunConfig(
        model=model, horizon=horizon, loading=loading,
        mode=root.text("mode", ("simulate", "moments", "premium-table", "transform-eval", "validate"), None),
        stationary=stationary,
        mc=_parse_mc(root.sub("mc", required=False)),
        numeric=numeric,
        transform=_parse_transform(root.sub("transform", required=False)),
        tables=_parse_tables(root.sub("tables", required=False)),
        output=dict(output),
        name=name if name is not None else data.get("name"),
    )


def loads(text, name=None):
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}, column {mark.column + 1}: " if mark else ""
        raise ConfigError(f"{where}invalid YAML ({getattr(exc, 'problem', exc)})") from exc
    if data is None:
        raise ConfigError("config: empty document; missing required section 'model'")
    return parse(data, name)


def load(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return loads(text)


def load_example(label):
    """Bundled configuration of one of the worked examples."""
    if label not in EXAMPLES:
        raise ConfigError(f"unknown example {label!r}; expected one of {', '.join(EXAMPLES)}")
    fname = "figure-1.yaml" if label == "figure-1" else f"example-{label}.yaml"
    text = resources.files("bcdcp.configs").joinpath(fname).read_text(encoding="utf-8")
    return loads(text)


def _line_dict(line):
    return {"a": line.a, "delta": line.delta, "lam0": line.lam0,
            "self_jump": _law_dict(line.self_jump), "severity": _law_dict(line.severity)}


def to_dict(cfg):
    """Inverse of ``parse``: ``parse(to_dict(c))`` reproduces ``c`` field for field."""
    m = cfg.model
    cop = m.shocks.copula
    out = {
        "name": cfg.name,
        "mode": cfg.mode,
        "horizon": cfg.horizon,
        "loading": cfg.loading,
        "stationary": cfg.stationary,
        "model": {
            "line1": _line_dict(m.line1),
            "line2": _line_dict(m.line2),
            "shocks": {"rho": m.shocks.rho,
                       "marginal1": _law_dict(m.shocks.marg1),
                       "marginal2": _law_dict(m.shocks.marg2),
                       "copula": {"family": cop.family, "theta": cop.theta, "dof": cop.dof}},
        },
        "mc": {"paths": cfg.mc.paths, "seed": cfg.mc.seed, "burn_in": copy.deepcopy(cfg.mc.burn_in),
               "grid_step": cfg.mc.grid_step, "workers": cfg.mc.workers},
        "numeric": {"cross_nodes": cfg.numeric.cross_nodes, "cross_method": cfg.numeric.cross_method,
                    "cross_mc_paths": cfg.numeric.cross_mc_paths, "cross_seed": cfg.numeric.cross_seed,
                    "ode_tol": cfg.numeric.ode_tol},
        "transform": copy.deepcopy(cfg.transform),
        "output": dict(cfg.output),
    }
    if cfg.tables is not None:
        out["tables"] = {"kind": cfg.tables.kind, "numbers": list(cfg.tables.numbers),
                         "line": cfg.tables.line, "thetas": list(cfg.tables.thetas)}
    return out


def dumps(cfg):
    return yaml.safe_dump(to_dict(cfg), sort_keys=False)
