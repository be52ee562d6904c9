"""Command-line entry point: ``fracp <command> --config <path> [--out dir]``.

Each run writes ``report.json`` (the payload alone, bitwise reproducible) and
``run_record.json`` (payload plus config echo, timestamps, version and file
digests) into the output directory, together with any CSV profiles.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from datetime import datetime, timezone
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from .config import COMMANDS, RunConfig, load_config, parse_config
from .energy import potential_energy
from .errors import (
    ConfigError,
    ConstraintError,
    DomainError,
    FracpError,
    InfeasibleStart,
    KernelMismatch,
    ParseError,
    PointwiseUnsupported,
    QuadratureError,
    SchemaError,
    SolverDiverged,
    StepFailure,
)
from .identities import VectorFieldSpec, cutoff_limit_study, ibp_check, pohozaev_residual
from .io import file_digest, load_profile, store_profile
from .kernel import AngularKernel
from .operator import flp_apply
from .profiles import RadialProfile, gaussian_bump
from .selftest import run_selftest
from .solver import solve

log = logging.getLogger("fracp")

EXIT_OK, EXIT_SELFTEST, EXIT_DOMAIN, EXIT_NUMERIC, EXIT_INPUT = 0, 1, 2, 3, 4
_EXIT_CODES = (
    ((DomainError, ConstraintError, PointwiseUnsupported, InfeasibleStart), EXIT_DOMAIN),
    ((SolverDiverged, QuadratureError, StepFailure), EXIT_NUMERIC),
    ((ConfigError, ParseError, SchemaError, KernelMismatch, OSError), EXIT_INPUT),
)
DEFAULT_INPUT = {"operator": "gaussian", "energy": "gaussian", "ibp-check": "gaussian",
                 "pohozaev": "solve", "limit-study": "solve"}


def exit_code_for(exc: BaseException) -> int:
    """Map an exception onto the documented exit code (``1`` for anything unexpected)."""
    for kinds, code in _EXIT_CODES:
        if isinstance(exc, kinds):
            return code
    return 1


def artifact_version() -> str:
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "0+unknown"


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, Path):
        return str(x)
    return x


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True)


class _Run:
    """Per-run context: output directory and input/output file tracking."""

    def __init__(self, cfg: RunConfig, out: Path):
        self.cfg = cfg
        self.out = out
        self.inputs: dict[str, str] = {}
        self.outputs: dict[str, str] = {}
        self._kernels: dict = {}

    def kernel(self, u: RadialProfile) -> AngularKernel:
        key = u.base_nodes.tobytes()
        if key not in self._kernels:
            k = self.cfg.kernel
            self._kernels[key] = AngularKernel.build(self.cfg.params, u.base_nodes, k.n_g, k.n_d,
                                                     cache_dir=self.cfg.resolve(k.cache_dir) if k.cache_dir else None)
        return self._kernels[key]

    def write_profile(self, u: RadialProfile, name: str) -> None:
        path = store_profile(u, self.out / name)
        self.outputs[name] = file_digest(path)

    def profile(self, command: str):
        """The input profile and, for ``solve`` inputs, the solver payload."""
        inp = self.cfg.input
        kind = inp.kind or DEFAULT_INPUT[command]
        if kind == "gaussian":
            return gaussian_bump(inp.width, inp.amplitude, self.cfg.grid), None
        if kind == "file":
            path = self.cfg.resolve(inp.path)
            u = load_profile(path)
            self.inputs[str(inp.path)] = file_digest(path)
            return u, None
        rep = solve(self.cfg.nonlinearity, self.cfg.params, self.cfg.solve)
        self.write_profile(rep.u_bar, "u_bar.csv")
        return rep.u_bar, rep


def _summary(rep) -> dict:
    d = rep.as_dict()
    d.pop("trace")
    return d


def cmd_operator(run: _Run) -> dict:
    u, _ = run.profile("operator")
    xr = run.cfg.operator.x_radius
    xs = xr if isinstance(xr, list) else [xr]
    vals, tails = zip(*(flp_apply(u, float(x), run.cfg.params, run.cfg.quad) for x in xs))
    if isinstance(xr, list):
        return {"x_radius": list(xs), "value": list(vals), "tail_bound": list(tails)}
    return {"x_radius": xr, "value": vals[0], "tail_bound": tails[0]}


def cmd_energy(run: _Run) -> dict:
    u, _ = run.profile("energy")
    rep = potential_energy(u, run.cfg.nonlinearity, run.cfg.params, run.kernel(u))
    return rep.as_dict()


def cmd_solve(run: _Run) -> dict:
    rep = solve(run.cfg.nonlinearity, run.cfg.params, run.cfg.solve)
    run.write_profile(rep.u, "u_constrained.csv")
    run.write_profile(rep.u_bar, "u_bar.csv")
    return rep.as_dict()


def cmd_pohozaev(run: _Run) -> dict:
    u, rep = run.profile("pohozaev")
    ker = run.kernel(u)
    en = potential_energy(u, run.cfg.nonlinearity, run.cfg.params, ker)
    P = pohozaev_residual(u, run.cfg.nonlinearity, run.cfg.params, ker)
    q1 = run.cfg.params.N - run.cfg.params.sp
    out = {"pohozaev_residual": P, "a": en.a_value, "b": en.b_value,
           "normalized": abs(P) / (q1 * en.a_value) if en.a_value else None}
    if rep is not None:
        out["solve"] = _summary(rep)
    return out


def cmd_ibp_check(run: _Run) -> dict:
    u, rep = run.profile("ibp-check")
    X = VectorFieldSpec("identity_cutoff", run.cfg.ibp_check.lam)
    k = run.cfg.kernel
    out = ibp_check(u, X, run.cfg.params, run.cfg.quad, k.n_g, k.n_d).as_dict()
    out["lam"] = X.lam
    if rep is not None:
        out["solve"] = _summary(rep)
    return out


def cmd_limit_study(run: _Run) -> dict:
    u, rep = run.profile("limit-study")
    lams = list(run.cfg.limit_study.lambdas)
    if run.cfg.limit_study.zero_limit:
        # far enough below 1/Rmax that the cutoff and the pair tail beyond 2/λ are both negligible
        lams.append(min(lams[-1] / 2.0, 1e-6 / u.Rmax))
    k = run.cfg.kernel
    rows = cutoff_limit_study(u, run.cfg.nonlinearity, run.cfg.params, lams, k.n_g, k.n_d)
    out = {"rows": [r.as_dict() for r in rows],
           "pohozaev_residual": pohozaev_residual(u, run.cfg.nonlinearity, run.cfg.params, run.kernel(u))}
    if rep is not None:
        out["solve"] = _summary(rep)
    return out


def cmd_selftest(run: _Run) -> dict:
    return run_selftest()


HANDLERS = {
    "operator": cmd_operator,
    "energy": cmd_energy,
    "solve": cmd_solve,
    "pohozaev": cmd_pohozaev,
    "ibp-check": cmd_ibp_check,
    "limit-study": cmd_limit_study,
    "selftest": cmd_selftest,
}


def run(command: str, cfg: RunConfig, out_dir, config_path: Path | None = None) -> dict:
    """Execute one command and persist its report; returns the run record."""
    if command not in HANDLERS:
        raise ConfigError("command", f"unknown command {command!r}; expected one of {COMMANDS}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ctx = _Run(cfg, out)
    if config_path is not None:
        ctx.inputs[str(config_path)] = file_digest(config_path)
    started = datetime.now(timezone.utc).isoformat()
    payload = HANDLERS[command](ctx)
    (out / "report.json").write_text(dumps(payload) + "\n")
    ctx.outputs["report.json"] = file_digest(out / "report.json")
    record = {
        "command": command,
        "version": artifact_version(),
        "started": started,
        "finished": datetime.now(timezone.utc).isoformat(),
        "config": cfg.echo,
        "payload": payload,
        "digests": {"inputs": ctx.inputs, "outputs": ctx.outputs},
    }
    (out / "run_record.json").write_text(dumps(record) + "\n")
    return record


def _threads() -> int | None:
    raw = os.environ.get("FRACP_THREADS")
    if raw is None or raw == "":
        return None
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError("FRACP_THREADS", f"expected a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError("FRACP_THREADS", f"expected a positive integer, got {raw!r}")
    return n


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="fracp", description="Fractional p-Laplacian ground-state toolkit.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", type=Path, help="TOML (or JSON) run configuration; optional for selftest")
    ap.add_argument("--out", type=Path, default=Path("fracp_out"), help="output directory (default: fracp_out)")
    ap.add_argument("-v", "--verbose", action="store_true")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.config is None:
            if args.command != "selftest":
                raise ConfigError("--config", f"required for {args.command}")
            cfg = parse_config({})
        else:
            cfg = load_config(args.config)
        with threadpool_limits(limits=_threads()):
            record = run(args.command, cfg, args.out, args.config)
    except FracpError as exc:
        print(f"fracp {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exit_code_for(exc)
    except OSError as exc:
        print(f"fracp {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.command == "selftest":
        for name, status in record["payload"]["checks"].items():
            print(f"{name:16s} {'ok' if status == 'ok' else 'FAIL'}")
            if status != "ok":
                print(status)
        return EXIT_OK if record["payload"]["passed"] else EXIT_SELFTEST
    print(f"fracp {args.command}: wrote {args.out / 'report.json'}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
