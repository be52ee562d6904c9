"""Run configuration: one TOML (or JSON) document with nested blocks.

Every block maps onto a frozen dataclass.  Unknown keys, wrong types and
out-of-range values all fail with a :class:`ConfigError` naming the field
path, e.g. ``solve.max_iters``.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import tomli

from .errors import ConfigError, DomainError
from .nonlinearity import Nonlinearity, make_model
from .operator import QuadSpec
from .params import Params, validate
from .profiles import GridSpec
from .solver import SolveConfig

COMMANDS = ("operator", "energy", "solve", "pohozaev", "ibp-check", "limit-study", "selftest")


@dataclass(frozen=True)
class ParamsBlock:
    N: int = 2
    s: float = 0.5
    p: float = 2.0


@dataclass(frozen=True)
class NonlinearityBlock:
    family: str = "two_power"
    m: float = 1.0
    q: float = 3.0
    T: float | None = None


@dataclass(frozen=True)
class KernelBlock:
    """Pair-rule orders and an optional on-disk cache for the angular kernel."""

    n_g: int = 4
    n_d: int = 8
    cache_dir: str | None = None


@dataclass(frozen=True)
class InputBlock:
    """Where the profile comes from.

    ``kind`` is ``"gaussian"`` (``amplitude * exp(-(r/width)^2)`` on the grid
    block), ``"file"`` (a stored ``r,u`` CSV, resolved relative to the config
    file) or ``"solve"`` (the rescaled minimizer of a fresh solve).  ``None``
    picks the command default.
    """

    kind: str | None = None
    width: float = 2.0
    amplitude: float = 1.0
    path: str | None = None


@dataclass(frozen=True)
class OperatorBlock:
    x_radius: float | list = 0.0


@dataclass(frozen=True)
class IbpBlock:
    lam: float = 0.05


@dataclass(frozen=True)
class LimitBlock:
    lambdas: list = field(default_factory=lambda: [0.8, 0.4, 0.2])
    zero_limit: bool = True


_BLOCKS = {
    "params": ParamsBlock,
    "nonlinearity": NonlinearityBlock,
    "grid": GridSpec,
    "quad": QuadSpec,
    "kernel": KernelBlock,
    "solve": SolveConfig,
    "input": InputBlock,
    "operator": OperatorBlock,
    "ibp_check": IbpBlock,
    "limit_study": LimitBlock,
}
_SOLVE_SKIP = {"grid", "n_g", "n_d"}  # filled from the grid and kernel blocks


@dataclass(frozen=True)
class RunConfig:
    params: Params
    nonlinearity: Nonlinearity
    grid: GridSpec
    quad: QuadSpec
    kernel: KernelBlock
    solve: SolveConfig
    input: InputBlock
    operator: OperatorBlock
    ibp_check: IbpBlock
    limit_study: LimitBlock
    echo: dict
    base_dir: Path = Path(".")

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else self.base_dir / p


def _check_type(value, annotation: str, where: str):
    ann = annotation.replace(" ", "")
    opts = ann.split("|")
    if value is None:
        if "None" in opts:
            return None
        raise ConfigError(where, "must not be null")
    for opt in opts:
        if opt == "int" and isinstance(value, int) and not isinstance(value, bool):
            return value
        if opt == "float" and isinstance(value, (int, float)) and not isinstance(value, bool):
            v = float(value)
            return v
        if opt == "bool" and isinstance(value, bool):
            return value
        if opt == "str" and isinstance(value, str):
            return value
        if opt == "list" and isinstance(value, list):
            return value
    raise ConfigError(where, f"expected {annotation}, got {type(value).__name__} {value!r}")


def _block(name: str, raw, cls):
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(name, f"expected a table, got {type(raw).__name__}")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    skip = _SOLVE_SKIP if cls is SolveConfig else set()
    kw = {}
    for key, value in raw.items():
        where = f"{name}.{key}"
        if key not in fields or key in skip:
            raise ConfigError(where, "unknown key")
        kw[key] = _check_type(value, str(fields[key].type), where)
    return kw


def _build(name: str, cls, kw: dict):
    try:
        return cls(**kw)
    except DomainError as exc:
        msg = str(exc)
        # point at the field the message names when there is one
        key = next((k for k in kw if f"{name}.{k} " in msg or msg.startswith(f"{k} ")), None)
        raise ConfigError(f"{name}.{key}" if key else name, msg) from None


def parse_config(doc: dict, base_dir: Path | str = ".") -> RunConfig:
    """Validate a parsed document and build the module-level types."""
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "expected a table")
    for key in doc:
        if key not in _BLOCKS:
            raise ConfigError(key, "unknown block")
    kws = {name: _block(name, doc.get(name), cls) for name, cls in _BLOCKS.items()}

    pk = {**dataclasses.asdict(ParamsBlock()), **kws["params"]}
    try:
        params = validate(pk["N"], pk["s"], pk["p"])
    except DomainError as exc:
        bad = next((k for k in ("N", "s", "p") if str(exc).startswith(k) or f" {k} " in str(exc)), None)
        raise ConfigError(f"params.{bad}" if bad else "params", str(exc)) from None

    nk = {**dataclasses.asdict(NonlinearityBlock()), **kws["nonlinearity"]}
    try:
        nl = make_model(nk["m"], nk["q"], params, nk["family"], nk["T"])
    except DomainError as exc:
        msg = str(exc)
        bad = "family" if "family" in msg else next((k for k in ("m", "q", "T") if msg.startswith(k) or f" {k} " in msg), None)
        raise ConfigError(f"nonlinearity.{bad}" if bad else "nonlinearity", msg) from None

    grid = _build("grid", GridSpec, kws["grid"])
    quad = _build("quad", QuadSpec, kws["quad"])
    kernel = _build("kernel", KernelBlock, kws["kernel"])
    for k in ("n_g", "n_d"):
        if getattr(kernel, k) < 1:
            raise ConfigError(f"kernel.{k}", "must be >= 1")
    solve = _build("solve", SolveConfig, {**kws["solve"], "grid": grid, "n_g": kernel.n_g, "n_d": kernel.n_d})
    inp = _build("input", InputBlock, kws["input"])
    if inp.kind not in (None, "gaussian", "file", "solve"):
        raise ConfigError("input.kind", f"expected gaussian, file or solve, got {inp.kind!r}")
    if inp.kind == "file" and not inp.path:
        raise ConfigError("input.path", "required when input.kind = 'file'")
    if not inp.width > 0:
        raise ConfigError("input.width", "must be positive")
    op = _build("operator", OperatorBlock, kws["operator"])
    xs = op.x_radius if isinstance(op.x_radius, list) else [op.x_radius]
    for i, x in enumerate(xs):
        if isinstance(x, bool) or not isinstance(x, (int, float)) or not (x >= 0 and math.isfinite(x)):
            raise ConfigError(f"operator.x_radius[{i}]", f"must be a finite nonnegative number, got {x!r}")
    ibp = _build("ibp_check", IbpBlock, kws["ibp_check"])
    if not ibp.lam > 0:
        raise ConfigError("ibp_check.lam", "must be positive")
    lim = _build("limit_study", LimitBlock, kws["limit_study"])
    lams = lim.lambdas
    for i, x in enumerate(lams):
        if isinstance(x, bool) or not isinstance(x, (int, float)) or not x > 0:
            raise ConfigError(f"limit_study.lambdas[{i}]", f"must be a positive number, got {x!r}")
    if any(b >= a for a, b in zip(lams, lams[1:])):
        raise ConfigError("limit_study.lambdas", "must be strictly decreasing")

    echo = {"params": pk, "nonlinearity": nk}
    for name, obj in (("grid", grid), ("quad", quad), ("kernel", kernel), ("solve", solve), ("input", inp),
                      ("operator", op), ("ibp_check", ibp), ("limit_study", lim)):
        echo[name] = {k: v for k, v in dataclasses.asdict(obj).items() if not (name == "solve" and k in _SOLVE_SKIP)}
    return RunConfig(params, nl, grid, quad, kernel, solve, inp, op, ibp, lim, echo, Path(base_dir))


def load_config(path) -> RunConfig:
    """Read a ``.toml`` (or ``.json``) run configuration.

    Raises
    ------
    ConfigError
        Syntax errors (path ``<file>``), unknown blocks or keys, bad types or values.
    OSError
        The file cannot be read.
    """
    path = Path(path)
    text = path.read_text()
    try:
        doc = json.loads(text) if path.suffix == ".json" else tomli.loads(text)
    except (tomli.TOMLDecodeError, json.JSONDecodeError) as exc:
        raise ConfigError(str(path), f"syntax error: {exc}") from None
    return parse_config(doc, path.parent)
