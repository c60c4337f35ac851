"""Command-line front end.

Every subcommand writes one report (JSON by default, CSV on request) to
stdout.  Exit status is 0 on success, 2 for invalid input and 3 when a
computation would exceed its memory budget.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Sequence

import numpy as np

from . import heinrich
from .bounds import corollary_bound, theorem2_bound, wasserstein_bound
from .errors import DomainError, ResourceError, ValidationError
from .experiments import build_model, evaluate, run_grid
from .metrics import (
    check_wasserstein_inequality,
    difference,
    presman_bound,
    total_variation_norm,
    wasserstein_norm,
    weighted_difference,
)
from .models import RNG_ALGORITHM, WindowModel, exact_sum_law, model_from_dict, sample_sum
from .moments import summarize
from .pmf import DEFAULT_TAIL_TOL, CpParams, compound_poisson_pmf

COMMANDS = ("pmf", "distance", "bound", "converge", "heinrich-check", "presman-check", "simulate")
EXIT_OK, EXIT_INVALID, EXIT_RESOURCE = 0, 2, 3


@dataclass
class RunConfig:
    command: str
    model: dict[str, Any] = field(default_factory=dict)
    lambdas: list[float] | None = None
    s: int | None = None
    h: float = 0.0
    c0: int | None = None
    grid: list[int] | None = None
    calibration: str | None = None
    format: str = "json"
    seed: int = 0
    reps: int = 100_000
    tol: float = DEFAULT_TAIL_TOL
    panels: int = 4096
    t_grid: list[float] | None = None
    against: str = "cp"
    target: dict[str, Any] | None = None
    corollary: bool = False

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ValidationError(f"unknown command {self.command!r}")
        if not math.isfinite(self.h) or self.h < 0:
            raise ValidationError(f"invalid h: must be >= 0, got {self.h}")
        if self.lambdas is not None:
            if not self.lambdas:
                raise ValidationError("invalid lambdas: empty list")
            if any(not math.isfinite(x) or x < 0 for x in self.lambdas):
                raise ValidationError(f"invalid lambdas: rates must be >= 0, got {self.lambdas}")
            if self.s is not None and self.s != len(self.lambdas):
                raise ValidationError(f"invalid s: s = {self.s} but {len(self.lambdas)} rates given")
        if self.s is not None and self.s < 1:
            raise ValidationError(f"invalid s: must be >= 1, got {self.s}")
        if self.grid is not None:
            if not self.grid:
                raise ValidationError("invalid grid: empty")
            if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
                raise ValidationError(f"invalid grid: must be strictly increasing, got {self.grid}")
            if self.grid[0] < 1:
                raise ValidationError("invalid grid: n must be positive")
        if self.format not in ("json", "csv"):
            raise ValidationError(f"invalid format {self.format!r}")
        if self.calibration not in (None, "fixed-p", "fixed-lambda"):
            raise ValidationError(f"invalid calibration {self.calibration!r}")
        if self.tol <= 0:
            raise ValidationError("invalid tol: must be positive")
        if self.reps < 1:
            raise ValidationError("invalid reps: must be >= 1")
        if self.against not in ("cp", "self", "model"):
            raise ValidationError(f"invalid against {self.against!r}")


# ---------------------------------------------------------------------------
# helpers


def _num(x: Any) -> Any:
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x)
    return x


def _clean(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return _num(obj)


def to_json(obj: Any) -> str:
    return json.dumps(_clean(obj), indent=2) + "\n"


def to_csv(rows: list[dict[str, Any]]) -> str:
    buf = io.StringIO()
    columns: list[str] = []
    for r in rows:
        columns += [k for k in r if k not in columns]
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow(["" if r.get(c) is None else _fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def _fmt(v: Any) -> str:
    v = _num(v)
    if isinstance(v, bool):
        return "true" if v else "false"
    return repr(v) if isinstance(v, float) else str(v)


def _model(cfg: RunConfig) -> WindowModel:
    if not cfg.model:
        raise ValidationError("no model given (use --model or --model-json)")
    return model_from_dict(cfg.model)


def _params(cfg: RunConfig, model: WindowModel) -> CpParams:
    if cfg.lambdas is None:
        raise ValidationError("target rates required (use --lambda)")
    c0 = model.c0 if cfg.c0 is None else cfg.c0
    if c0 < model.c0:
        raise ValidationError(f"invalid c0: {c0} is below the model's block bound {model.c0}")
    return CpParams(len(cfg.lambdas), tuple(cfg.lambdas), cfg.h, c0)


def _rows_or_json(cfg: RunConfig, payload: dict[str, Any], rows: list[dict[str, Any]]) -> str:
    return to_csv(rows) if cfg.format == "csv" else to_json(payload)


# ---------------------------------------------------------------------------
# commands


def _cmd_pmf(cfg: RunConfig) -> str:
    model = _model(cfg)
    law = exact_sum_law(model)
    rows = [{"k": k, "prob": p} for k, p in enumerate(law.probs)]
    return _rows_or_json(cfg, {"command": "pmf", "model": model.to_dict(), "pmf": law.probs,
                               "trunc_defect": law.trunc_defect}, rows)


def _cmd_distance(cfg: RunConfig) -> str:
    model = _model(cfg)
    law = exact_sum_law(model)
    if cfg.against == "cp":
        target = compound_poisson_pmf(_params(cfg, model), cfg.tol)
    elif cfg.against == "self":
        target = law
    else:
        if not cfg.target:
            raise ValidationError("--against model needs --target-json")
        target = exact_sum_law(model_from_dict(cfg.target))
    out = {
        "dist_tv": total_variation_norm(weighted_difference(law, target, 0.0)),
        "dist_wtv": total_variation_norm(weighted_difference(law, target, cfg.h)),
        "dist_wass": wasserstein_norm(difference(law, target), cfg.h),
    }
    if cfg.h > 0:
        rep = check_wasserstein_inequality(law, target, cfg.h)
        out["wass_inequality_rhs"] = rep.rhs
        out["wass_inequality_holds"] = rep.holds
    payload = {"command": "distance", "model": model.to_dict(), "against": cfg.against, "h": cfg.h, **out}
    return _rows_or_json(cfg, payload, [{"h": cfg.h, **out}])


def _cmd_bound(cfg: RunConfig) -> str:
    model = _model(cfg)
    params = _params(cfg, model)
    res = evaluate(model, params, cfg.tol)
    report = corollary_bound(res.summary, params) if cfg.corollary else res.bound
    out = report.to_dict()
    out["gamma2"] = res.summary.gamma2
    out["dist_wtv"] = res.dist_wtv
    out["dominated"] = res.dist_wtv <= report.total + 1e-9
    if cfg.h > 0:
        out["wasserstein_bound"] = wasserstein_bound(report, cfg.h)
        out["dist_wass"] = res.dist_wass
    if cfg.corollary and params.s == 2:
        # the s = 2 corollary writes the second gap as |sum nu_2 - 2 lambda_2|
        out["corollary_gap_m2"] = abs(res.summary.nu_sum(2) - 2 * params.lambdas[1])
    payload = {"command": "bound", "model": model.to_dict(), "params": asdict(params), "report": out}
    return _rows_or_json(cfg, payload, [out])


def _cmd_converge(cfg: RunConfig) -> str:
    if not cfg.grid:
        raise ValidationError("invalid grid: converge needs --grid")
    kind = cfg.model.get("type")
    if kind not in ("kk_events", "k_runs", "cp2"):
        raise ValidationError(f"converge supports kk_events, k_runs and cp2, got {kind!r}")
    if cfg.lambdas is None:
        raise ValidationError("target rates required (use --lambda)")
    calibration = cfg.calibration or ("fixed-p" if "p" in cfg.model else "fixed-lambda")
    shape = {k: v for k, v in cfg.model.items() if k not in ("type", "n")}

    def make(n: int):
        model = build_model(kind, n, shape, cfg.lambdas, calibration)
        return model, _params(cfg, model)

    results = run_grid(cfg.grid, make, cfg.tol)
    rows = [r.row() for r in results]
    payload = {
        "command": "converge",
        "model": {"type": kind, **shape},
        "calibration": calibration,
        "lambdas": cfg.lambdas,
        "h": cfg.h,
        "rows": rows,
    }
    return _rows_or_json(cfg, payload, rows)


def _cmd_heinrich(cfg: RunConfig) -> str:
    model = _model(cfg)
    params = _params(cfg, model) if cfg.lambdas is not None else CpParams(1, (0.0,), cfg.h, model.c0)
    law = heinrich.joint_law(model)
    exact = exact_sum_law(model).probs
    ts = cfg.t_grid if cfg.t_grid is not None else [-math.pi, -math.pi / 2, 0.0, math.pi / 2, math.pi]
    rows = []
    for t in ts:
        point = heinrich.EvalPoint(t, cfg.h)
        region = heinrich.region_check(model, point)
        row: dict[str, Any] = {"t": t, "h": cfg.h, "w": region.w, "in_region": region.in_region}
        if region.in_region:
            phis = heinrich.phi_sequence(law, point)
            direct = heinrich.tilted_transform(exact, point.u)
            row["product_rel_err"] = abs(complex(np.prod(phis)) - direct) / abs(direct)
            try:
                lem = heinrich.lemma_checks(model, point, params)
            except DomainError:
                row["lemmas_checked"] = False
            else:
                row["lemmas_checked"] = True
                row["lemmas_hold"] = lem.all_hold
                row["lemma_failures"] = len([c for c in lem.checks if not c.holds])
        rows.append(row)
    payload = {"command": "heinrich-check", "model": model.to_dict(), "points": rows}
    return _rows_or_json(cfg, payload, rows)


def _cmd_presman(cfg: RunConfig) -> str:
    model = _model(cfg)
    params = _params(cfg, model)
    m = weighted_difference(exact_sum_law(model), compound_poisson_pmf(params, cfg.tol), cfg.h)
    rep = presman_bound(m, cfg.panels)
    fine = presman_bound(m, 2 * cfg.panels)
    out = {"lhs": rep.lhs, "rhs": rep.rhs, "holds": rep.holds, "panels": cfg.panels,
           "rhs_doubling_change": abs(fine.rhs - rep.rhs)}
    payload = {"command": "presman-check", "model": model.to_dict(), "h": cfg.h, **out}
    return _rows_or_json(cfg, payload, [out])


def _cmd_simulate(cfg: RunConfig) -> str:
    model = _model(cfg)
    emp = sample_sum(model, cfg.seed, cfg.reps)
    exact = exact_sum_law(model)
    out = {"rng": RNG_ALGORITHM, "seed": cfg.seed, "reps": cfg.reps,
           "tv_to_exact": total_variation_norm(weighted_difference(emp, exact, 0.0))}
    payload = {"command": "simulate", "model": model.to_dict(), **out, "pmf": emp.probs}
    rows = [{"k": k, "prob": p} for k, p in enumerate(emp.probs)]
    return _rows_or_json(cfg, payload, rows)


_DISPATCH = {
    "pmf": _cmd_pmf,
    "distance": _cmd_distance,
    "bound": _cmd_bound,
    "converge": _cmd_converge,
    "heinrich-check": _cmd_heinrich,
    "presman-check": _cmd_presman,
    "simulate": _cmd_simulate,
}


def run(config: RunConfig) -> tuple[int, str]:
    """Execute one configured command; returns ``(exit_code, report_text)``."""
    try:
        config.validate()
        return EXIT_OK, _DISPATCH[config.command](config)
    except ResourceError as exc:
        return EXIT_RESOURCE, f"resource error: {exc}\n"
    except (ValidationError, DomainError) as exc:
        return EXIT_INVALID, f"validation error: {exc}\n"


# ---------------------------------------------------------------------------
# argument parsing


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _load_json(text: str) -> Any:
    if text.startswith("@"):
        with open(text[1:], encoding="utf-8") as fh:
            text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed JSON: {exc}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cpapprox", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="JSON file with RunConfig fields; flags override it")
    g = parser.add_argument_group("model")
    g.add_argument("--model", choices=("kk_events", "k_runs", "cp2", "custom"))
    g.add_argument("--model-json", help="model description as JSON, or @path")
    g.add_argument("--k1", type=int)
    g.add_argument("--k2", type=int)
    g.add_argument("--k", type=int)
    g.add_argument("--n", type=int)
    g.add_argument("--p", type=float)
    g.add_argument("--pbar", type=float)
    t = parser.add_argument_group("target and weights")
    t.add_argument("--lambda", dest="lambdas", type=_floats, help="comma-separated rates lambda_1..lambda_s")
    t.add_argument("--s", type=int)
    t.add_argument("--h", type=float)
    t.add_argument("--c0", type=int)
    t.add_argument("--against", choices=("cp", "self", "model"))
    t.add_argument("--target-json", help="second model for 'distance --against model'")
    t.add_argument("--corollary", action="store_true", default=None)
    r = parser.add_argument_group("run")
    r.add_argument("--grid", type=_ints, help="comma-separated strictly increasing n values")
    r.add_argument("--calibration", choices=("fixed-p", "fixed-lambda"))
    r.add_argument("--format", choices=("json", "csv"))
    r.add_argument("--seed", type=int)
    r.add_argument("--reps", type=int)
    r.add_argument("--tol", type=float)
    r.add_argument("--panels", type=int)
    r.add_argument("--t-grid", dest="t_grid", type=_floats)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    base: dict[str, Any] = {}
    if args.config:
        loaded = _load_json("@" + args.config)
        if not isinstance(loaded, dict):
            raise ValidationError("config file must hold a JSON object")
        known = {f.name for f in fields(RunConfig)}
        unknown = set(loaded) - known
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        base.update(loaded)
    base["command"] = args.command

    model = dict(base.get("model") or {})
    if args.model_json:
        model = _load_json(args.model_json)
    if args.model:
        model = {"type": args.model}
    for key in ("k1", "k2", "k", "n", "p", "pbar"):
        val = getattr(args, key)
        if val is not None:
            model[key] = val
    base["model"] = model
    if args.target_json:
        base["target"] = _load_json(args.target_json)
    for key in ("lambdas", "s", "h", "c0", "grid", "calibration", "format", "seed", "reps",
                "tol", "panels", "t_grid", "against", "corollary"):
        val = getattr(args, key)
        if val is not None:
            base[key] = val
    try:
        return RunConfig(**base)
    except TypeError as exc:
        raise ValidationError(str(exc)) from None


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
    except (ValidationError, OSError) as exc:
        sys.stderr.write(f"validation error: {exc}\n")
        return EXIT_INVALID
    code, text = run(cfg)
    (sys.stdout if code == EXIT_OK else sys.stderr).write(text)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
