"""Command-line front end.

Subcommands: ``kappa``, ``roots``, ``legendre``, ``sim-levy``, ``sim-pssmp``,
``sim-branching``, ``verify <suite>``, ``explode``.  Exit codes: 0 success,
2 validation/usage error, 3 a verify suite failed its statistical gate.

Outputs are written atomically (temp file + rename) and embed the model
echo, the seed and the tool version; no timestamps, so identical inputs
give byte-identical files.  CSV files carry the provenance as '#' comment
lines ahead of the header row (comma-separated, '.' decimals, LF endings).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .branching import SimCaps, simulate_population, snapshot
from .errors import ConfigError, GfragError
from .kappa_core import (
    DislocationMeasure,
    ModelParams,
    kappa,
    legendre,
    levy_characteristics,
    malthus_roots,
    validate_model,
)
from .levy_sim import simulate_levy
from .pssmp import simulate_pssmp
from .branching import explosion_experiment
from .rng import RngStream
from .verify import canonical_json, SUITES

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_GATE = 3

_CONFIG_DEFAULTS = {
    "grid_step": 1e-3,
    "n": 10_000,
    "min_size": 1e-8,
    "max_events": 10_000_000,
}
_CONFIG_KEYS = {
    "model", "seed", "n", "t", "q", "k", "omega", "x0", "r", "grid_step",
    "min_size", "max_events", "horizon", "x_small", "out", "threads",
}


@dataclass
class RunConfig:
    model: ModelParams
    seed: int
    n: int = 10_000
    grid_step: float = 1e-3
    min_size: float = 1e-8
    max_events: int = 10_000_000
    t: float | list[float] | None = None
    q: list[float] | None = None
    k: list[int] | None = None
    omega: float | None = None
    x0: float | None = None
    r: float | None = None
    horizon: float | None = None
    x_small: float | None = None
    out: str | None = None
    threads: int = 1
    extras: dict = field(default_factory=dict)


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON run configuration.

    The seed is mandatory (no wall-clock default); unknown keys are
    rejected by name; a model given as a path must exist at parse time.
    """
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: "
                          f"{exc.msg}") from exc
    if not isinstance(obj, dict):
        raise ConfigError("configuration must be a JSON object")
    unknown = set(obj) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown configuration key(s): {', '.join(sorted(unknown))}")
    missing = [k for k in ("model", "seed") if k not in obj]
    if missing:
        raise ConfigError(f"missing required key(s): {', '.join(missing)}")
    model = obj["model"]
    if isinstance(model, str):
        if not os.path.exists(model):
            raise ConfigError(f"model file does not exist: {model}")
        with open(model, "r", encoding="utf-8") as fh:
            model = json.load(fh)
    try:
        params = ModelParams.from_json(model)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid model object: {exc}") from exc
    merged = dict(_CONFIG_DEFAULTS)
    merged.update({k: v for k, v in obj.items() if k not in ("model",)})
    if not isinstance(merged["seed"], int):
        raise ConfigError("seed must be an integer")
    known = {
        k: merged[k]
        for k in ("seed", "n", "grid_step", "min_size", "max_events", "t", "q",
                  "k", "omega", "x0", "r", "horizon", "x_small", "out", "threads")
        if k in merged
    }
    return RunConfig(model=params, **known)


# ---------------------------------------------------------------------------
# output plumbing
# ---------------------------------------------------------------------------

def _atomic_write(path: str, data: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".gfrag-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        _atomic_write(out, text)


def _provenance(model: ModelParams | None, seed: int | None) -> dict:
    out: dict = {"version": __version__}
    if model is not None:
        out["model"] = model.to_json()
    if seed is not None:
        out["seed"] = seed
    return out


def _csv_text(header: list[str], rows: list[list], model: ModelParams | None,
              seed: int | None) -> str:
    lines = ["# " + json.dumps(_provenance(model, seed), sort_keys=True)]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_csv_cell(v) for v in row))
    return "\n".join(lines) + "\n"


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, np.generic):
        v = v.item()
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(v)


def _json_report(payload: dict, model: ModelParams | None, seed: int | None) -> str:
    body = dict(payload)
    body.update(_provenance(model, seed))
    return canonical_json(body)


# ---------------------------------------------------------------------------
# argument helpers
# ---------------------------------------------------------------------------

def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip() != ""]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip() != ""]


def _load_model(args) -> ModelParams:
    if getattr(args, "config_obj", None) is not None and args.model is None:
        model = args.config_obj.model
    elif args.model is not None:
        with open(args.model, "r", encoding="utf-8") as fh:
            model = ModelParams.from_json(json.load(fh))
    else:
        raise ConfigError("a model is required (--model or --config)")
    if getattr(args, "alpha_override", None) is not None:
        model = ModelParams(model.a, model.b, args.alpha_override, model.K)
    return validate_model(model)


def _seed_of(args) -> int:
    if args.seed is not None:
        return args.seed
    if getattr(args, "config_obj", None) is not None:
        return args.config_obj.seed
    raise ConfigError("a seed is required (--seed or config)")


def _cfg_get(args, name: str, default):
    flag = getattr(args, name, None)
    if flag is not None:
        return flag
    cfg = getattr(args, "config_obj", None)
    if cfg is not None:
        val = getattr(cfg, name, None)
        if val is not None:
            return val
    return default


# ---------------------------------------------------------------------------
# subcommand implementations
# ---------------------------------------------------------------------------

def _cmd_kappa(args) -> int:
    model = _load_model(args)
    qs = args.q if args.q is not None else (_cfg_get(args, "q", None) or [0.0, 1.0, 2.0])
    rows = []
    for q in qs:
        rep = kappa(model, q)
        rows.append([q, rep.value, rep.first_derivative, rep.second_derivative])
    _emit(_csv_text(["q", "kappa", "dkappa", "d2kappa"], rows, model, None), args.out)
    return EXIT_OK


def _cmd_roots(args) -> int:
    model = _load_model(args)
    roots = malthus_roots(model)
    _emit(_json_report({"roots": roots.to_json()}, model, None), args.out)
    return EXIT_OK


def _cmd_legendre(args) -> int:
    model = _load_model(args)
    rows = []
    for r in args.r:
        lp = legendre(model, r)
        rows.append([r, lp.theta, lp.kappa_star])
    _emit(_csv_text(["r", "theta", "kappa_star"], rows, model, None), args.out)
    return EXIT_OK


def _cmd_sim_levy(args) -> int:
    model = _load_model(args)
    seed = _seed_of(args)
    chars = levy_characteristics(model, args.omega, killed=args.killed)
    path = simulate_levy(chars, args.x0_log, args.horizon,
                         _cfg_get(args, "grid_step", 1e-3), RngStream(seed))
    rows = [
        [t, v, int(j)]
        for t, v, j in zip(path.times, path.values, path.jump_flags)
    ]
    _emit(_csv_text(["t", "xi", "is_jump"], rows, model, seed), args.out)
    return EXIT_OK


def _cmd_sim_pssmp(args) -> int:
    model = _load_model(args)
    seed = _seed_of(args)
    omega = args.omega
    if omega is None:
        omega = malthus_roots(model).omega_plus
        if omega is None:
            raise ConfigError("no Malthusian root; pass --omega explicitly")
    t_grid = args.t_grid
    path = simulate_pssmp(model, omega, args.x0, t_grid,
                          _cfg_get(args, "grid_step", 1e-3), RngStream(seed))
    rows = [[t, v, ""] for t, v in zip(path.times, path.values)]
    if path.absorbed is not None:
        rows.append([path.absorbed.time, None, path.absorbed.state])
    _emit(_csv_text(["t", "X", "absorbed"], rows, model, seed), args.out)
    return EXIT_OK


def _cmd_sim_branching(args) -> int:
    model = _load_model(args)
    seed = _seed_of(args)
    caps = SimCaps(
        max_events=int(_cfg_get(args, "max_events", 10_000_000)),
        min_size=_cfg_get(args, "min_size", 1e-8),
        horizon=args.horizon,
    )
    trace = simulate_population(model, args.x0, caps, RngStream(seed))
    rows = []
    reasons = ("split", "horizon", "frozen_small", "capped")
    for i in range(trace.n_particles):
        fc = int(trace.first_child[i])
        rows.append([
            i,
            None if trace.parent[i] < 0 else int(trace.parent[i]),
            float(trace.birth_time[i]),
            float(trace.birth_size[i]),
            float(trace.end_time[i]),
            reasons[int(trace.end_reason[i])],
            None if fc < 0 else fc,
            None if fc < 0 else fc + 1,
        ])
    header = ["id", "parent_id", "birth_time", "birth_size", "end_time",
              "end_reason", "child0", "child1"]
    _emit(_csv_text(header, rows, model, seed), args.out)
    if args.snapshot_t is not None:
        sizes = snapshot(trace, args.snapshot_t)
        snap_rows = [[args.snapshot_t, float(s)] for s in np.sort(sizes)]
        _emit(_csv_text(["t", "size"], snap_rows, model, seed), args.snapshot_out)
    return EXIT_OK


def _cmd_verify(args) -> int:
    seed = _seed_of(args)
    suite_fn = SUITES[args.suite]
    kwargs: dict = {"seed": seed}
    model = None
    if args.model is not None or getattr(args, "config_obj", None) is not None:
        try:
            model = _load_model(args)
        except ConfigError:
            model = None
    if model is not None and args.suite not in ("kappa", "explosion"):
        kwargs["model"] = model
    n = _cfg_get(args, "n", None)
    if n is not None and args.suite not in ("kappa", "support", "explosion",
                                            "homogeneous"):
        kwargs["n"] = int(n)
    if args.suite == "homogeneous":
        if n is not None:
            kwargs["n_branch"] = int(n)
        if args.t is not None:
            kwargs["t"] = args.t[0] if isinstance(args.t, list) else args.t
    elif args.suite in ("tails", "clt") and args.t is not None:
        kwargs["t"] = args.t[0] if isinstance(args.t, list) else args.t
    elif args.suite in ("t2", "rescaling") and args.t is not None:
        kwargs["ts"] = tuple(args.t)
    if args.suite == "t2" and args.k is not None:
        kwargs["ks"] = tuple(args.k)
    report = suite_fn(**kwargs)
    _emit(canonical_json(report), args.out)
    return EXIT_OK if report["pass"] else EXIT_GATE


def _cmd_explode(args) -> int:
    model = _load_model(args)
    seed = _seed_of(args)
    caps = SimCaps(
        max_events=int(_cfg_get(args, "max_events", 10_000_000)),
        min_size=_cfg_get(args, "min_size", 1e-8),
        horizon=_cfg_get(args, "horizon", 60.0),
    )
    c = model.b + model.K.first_moment()
    report = explosion_experiment(
        model.K, c, model.alpha, tuple(args.interval), tuple(args.thresholds),
        caps, RngStream(seed), runs=args.runs,
    )
    _emit(_json_report({"experiment": report}, model, seed), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gfrag",
        description="Growth-fragmentation analytics, simulation and verification.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, seed_required=False):
        sp.add_argument("--model", help="path to a model JSON file")
        sp.add_argument("--config", help="path to a run-configuration JSON file")
        sp.add_argument("--seed", type=int, required=False,
                        help="RNG seed (mandatory for stochastic commands)")
        sp.add_argument("--alpha-override", type=float, dest="alpha_override",
                        help="replace the model's alpha (re-validated)")
        sp.add_argument("--out", help="output file (default: stdout)")
        sp.add_argument("--threads", type=int,
                        default=int(os.environ.get("GFRAG_THREADS", "1")),
                        help="worker hint (replicas are sequential in this build)")

    sp = sub.add_parser("kappa", help="evaluate the cumulant function")
    common(sp)
    sp.add_argument("--q", type=_floats, help="comma-separated orders")
    sp.set_defaults(fn=_cmd_kappa)

    sp = sub.add_parser("roots", help="Malthusian roots and infimum")
    common(sp)
    sp.set_defaults(fn=_cmd_roots)

    sp = sub.add_parser("legendre", help="Legendre transform at slopes r")
    common(sp)
    sp.add_argument("--r", type=_floats, required=True)
    sp.set_defaults(fn=_cmd_legendre)

    sp = sub.add_parser("sim-levy", help="simulate the shifted Levy process")
    common(sp)
    sp.add_argument("--omega", type=float, required=True)
    sp.add_argument("--killed", action="store_true")
    sp.add_argument("--x0-log", type=float, default=0.0, dest="x0_log")
    sp.add_argument("--horizon", type=float, required=True)
    sp.add_argument("--grid-step", type=float, dest="grid_step")
    sp.set_defaults(fn=_cmd_sim_levy)

    sp = sub.add_parser("sim-pssmp", help="simulate the self-similar process")
    common(sp)
    sp.add_argument("--omega", type=float)
    sp.add_argument("--x0", type=float, default=1.0)
    sp.add_argument("--t-grid", type=_floats, required=True, dest="t_grid")
    sp.add_argument("--grid-step", type=float, dest="grid_step")
    sp.set_defaults(fn=_cmd_sim_pssmp)

    sp = sub.add_parser("sim-branching", help="simulate the particle system")
    common(sp)
    sp.add_argument("--x0", type=float, default=1.0)
    sp.add_argument("--horizon", type=float, required=True)
    sp.add_argument("--min-size", type=float, dest="min_size")
    sp.add_argument("--max-events", type=int, dest="max_events")
    sp.add_argument("--snapshot-t", type=float, dest="snapshot_t")
    sp.add_argument("--snapshot-out", dest="snapshot_out")
    sp.set_defaults(fn=_cmd_sim_branching)

    sp = sub.add_parser("verify", help="run a verification suite")
    sp.add_argument("suite", choices=["homogeneous", "t2", "suplaw", "entrance",
                                      "clt", "tails", "rescaling", "kappa",
                                      "levy", "support", "explosion"])
    common(sp)
    sp.add_argument("--n", type=int)
    sp.add_argument("--t", type=_floats)
    sp.add_argument("--q", type=_floats)
    sp.add_argument("--k", type=_ints)
    sp.set_defaults(fn=_cmd_verify)

    sp = sub.add_parser("explode", help="explosion experiment on an interval")
    common(sp)
    sp.add_argument("--interval", type=_floats, default=[1.0, 2.0])
    sp.add_argument("--thresholds", type=_ints, default=[100])
    sp.add_argument("--runs", type=int, default=100)
    sp.add_argument("--min-size", type=float, dest="min_size")
    sp.add_argument("--max-events", type=int, dest="max_events")
    sp.add_argument("--horizon", type=float)
    sp.set_defaults(fn=_cmd_explode)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.config_obj = None
    if getattr(args, "config", None):
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                args.config_obj = parse_config(fh.read())
        except OSError as exc:
            print(f"gfrag: cannot read config: {exc}", file=sys.stderr)
            return EXIT_VALIDATION
        except ConfigError as exc:
            print(f"gfrag: {exc}", file=sys.stderr)
            return EXIT_VALIDATION
        if args.out is None:
            args.out = args.config_obj.out
    try:
        return args.fn(args)
    except GfragError as exc:
        print(f"gfrag: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (OSError, ValueError) as exc:
        print(f"gfrag: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
