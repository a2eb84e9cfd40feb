"""Command-line interface: problem files in, bounds and tables out.

Problem files are JSON documents::

    {"domain": "half_line", "baseline": 0,
     "a": {"type": "constant", "value": 1},
     "b": {"type": "power_law", "coef": -1, "shift": 0, "exponent": 1},
     "overrides": {"halfline_case": "IntInf"}}

Whole-line problems may give ``b_neg``/``b_pos`` instead of ``b``.  Radial
problem files carry ``dimension``, ``field``, ``potential`` and ``r0``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import dataclasses
from dataclasses import replace
from typing import Optional

import numpy as np

from . import experiments
from .bounds import compact_resolvent, essential_bounds, spectrum_bounds
from .coefficients import Asymptotic, Domain, Problem, Sided, from_dict
from .errors import DiffspecError, InconclusiveError
from .integrate import QuadConfig
from .omega import INT_FIN, INT_INF, LINE_TAGS, classify_halfline, classify_line, h_transform_drift
from .oracle import MCConfig, fixed_point, mc_exponential_moment, principal_eigenvalue
from .radial import (
    RadialProblem,
    davies_classify,
    identity_field,
    radial_bounds,
    remark13_radial,
    remark13_tangential,
    scalar_field,
)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_INCONCLUSIVE = 3
EXIT_NUMERICAL = 4

PROBLEM_KEYS = {"domain", "a", "b", "b_pos", "b_neg", "baseline", "overrides"}
OVERRIDE_KEYS = {"halfline_case", "line_case"}
RADIAL_KEYS = {"dimension", "field", "potential", "r0", "resolution"}


class ProblemFileError(ValueError):
    """A problem file could not be parsed; carries line/column when known."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)
        self.line, self.column = line, column


def _load_json(text: str) -> dict:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFileError(exc.msg, exc.lineno, exc.colno) from None
    if not isinstance(data, dict):
        raise ProblemFileError("problem file must hold a JSON object", 1, 1)
    return data


def _coef(data, key):
    try:
        return from_dict(data)
    except (ValueError, KeyError, TypeError) as exc:
        raise ProblemFileError(f"field {key!r}: {exc}") from None


def problem_from_dict(data: dict) -> Problem:
    extra = set(data) - PROBLEM_KEYS
    if extra:
        raise ProblemFileError(f"unknown keys {sorted(extra)}")
    for key in ("domain", "a"):
        if key not in data:
            raise ProblemFileError(f"missing field {key!r}")
    try:
        domain = Domain(data["domain"])
    except ValueError:
        raise ProblemFileError(f"domain must be 'half_line' or 'whole_line', got {data['domain']!r}") from None
    a = _coef(data["a"], "a")
    if "b" in data:
        if "b_pos" in data or "b_neg" in data:
            raise ProblemFileError("give either 'b' or the pair 'b_neg'/'b_pos'")
        b = _coef(data["b"], "b")
    elif "b_pos" in data and "b_neg" in data:
        b = Sided(_coef(data["b_neg"], "b_neg"), _coef(data["b_pos"], "b_pos"))
    else:
        raise ProblemFileError("missing field 'b' (or 'b_neg' and 'b_pos')")
    overrides = data.get("overrides") or {}
    if not isinstance(overrides, dict) or set(overrides) - OVERRIDE_KEYS:
        raise ProblemFileError(f"overrides may only contain {sorted(OVERRIDE_KEYS)}")
    hc, lc = overrides.get("halfline_case"), overrides.get("line_case")
    if hc is not None and hc not in (INT_INF, INT_FIN):
        raise ProblemFileError(f"halfline_case must be IntInf or IntFin, got {hc!r}")
    if lc is not None and lc not in LINE_TAGS:
        raise ProblemFileError(f"line_case must be one of {list(LINE_TAGS)}, got {lc!r}")
    try:
        baseline = float(data.get("baseline", 0.0))
        return Problem(a=a, b=b, domain=domain, baseline=baseline, halfline_case=hc, line_case=lc)
    except (ValueError, TypeError) as exc:
        raise ProblemFileError(str(exc)) from None


def load_problem(text: str) -> Problem:
    return problem_from_dict(_load_json(text))


def dump_problem(p: Problem) -> str:
    return json.dumps(p.to_dict(), indent=2, sort_keys=True)


def _field_from_dict(d: int, data: dict):
    kind = data.get("type")
    if kind == "identity":
        return identity_field(d)
    if kind == "scalar":
        return scalar_field(_coef(data["c"], "field.c"), d)
    if kind in ("radial_gamma", "tangential_gamma"):
        gamma = _coef(data["gamma"], "field.gamma")
        return (remark13_radial if kind == "radial_gamma" else remark13_tangential)(gamma, d)
    raise ProblemFileError(f"unknown field type {kind!r}")


def radial_from_dict(data: dict) -> RadialProblem:
    extra = set(data) - RADIAL_KEYS
    if extra:
        raise ProblemFileError(f"unknown keys {sorted(extra)}")
    d = data.get("dimension")
    if d not in (2, 3):
        raise ProblemFileError("dimension must be 2 or 3")
    field_ = _field_from_dict(d, data.get("field", {"type": "identity"}))
    pot = data.get("potential") or {"type": "none"}
    kw = {}
    if pot.get("type") == "quadratic":
        kappa = float(pot["kappa"])
        kw = dict(Q=lambda x: -0.5 * kappa * np.sum(x * x, axis=-1), grad_Q=lambda x: -kappa * x,
                  q_r_asymptotic=Asymptotic(-kappa, 1.0), q_radial=True)
    elif pot.get("type") != "none":
        raise ProblemFileError(f"unknown potential type {pot.get('type')!r}")
    res = data.get("resolution")
    try:
        return RadialProblem(field_, r0=float(data.get("r0", 1.0)),
                             resolution=tuple(res) if res else None, **kw)
    except ValueError as exc:
        raise ProblemFileError(str(exc)) from None


# -- output ------------------------------------------------------------------------------


def _clean(obj):
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return _clean(obj.item())
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return _clean(dataclasses.asdict(obj))
    if obj is None or isinstance(obj, (str, int, bool)):
        return obj
    return str(obj)


def _flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        elif isinstance(v, (list, tuple)):
            out[key] = json.dumps(v)
        else:
            out[key] = v
    return out


def to_csv(rows: list) -> str:
    flat = [_flatten(_clean(r)) for r in rows]
    cols: list = []
    for r in flat:
        cols += [k for k in r if k not in cols]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=cols, lineterminator="\r\n")
    writer.writeheader()
    writer.writerows(flat)
    return buf.getvalue()


def render(report, fmt: str) -> str:
    """A report is a dict (one row) or an ExperimentTable."""
    if isinstance(report, experiments.ExperimentTable):
        if fmt == "csv":
            return to_csv(report.rows)
        return json.dumps(_clean(report.to_dict()), indent=2) + "\n"
    if fmt == "csv":
        return to_csv([report])
    return json.dumps(_clean(report), indent=2) + "\n"


# -- commands --------------------------------------------------------------------------


def _config(args) -> QuadConfig:
    cfg = QuadConfig()
    if args.tol is not None:
        cfg = replace(cfg, rel_tol=args.tol)
    if args.xmax is not None:
        cfg = replace(cfg, x_max=args.xmax)
    return cfg


def _read_problem(args) -> Problem:
    if not args.problem:
        raise ProblemFileError("--problem is required")
    with open(args.problem, encoding="utf-8") as fh:
        p = load_problem(fh.read())
    if args.override:
        if args.override in (INT_INF, INT_FIN):
            p = replace(p, halfline_case=args.override)
        elif args.override in LINE_TAGS:
            p = replace(p, line_case=args.override)
        else:
            raise ProblemFileError(f"unknown override {args.override!r}")
    return p


def _case(p: Problem, cfg: QuadConfig) -> dict:
    if p.domain is Domain.HALF_LINE:
        c = classify_halfline(p, cfg)
        return {"case": c.tag, "overridden": c.overridden}
    c = classify_line(p, cfg)
    return {"case": c.tag, "plus": c.plus, "minus": c.minus, "overridden": c.overridden}


def cmd_bounds(args) -> dict:
    p, cfg = _read_problem(args), _config(args)
    out = _case(p, cfg)
    out.update(spectrum_bounds(p, cfg).to_dict())
    return out


def cmd_essential(args) -> dict:
    p, cfg = _read_problem(args), _config(args)
    out = _case(p, cfg)
    out.update(essential_bounds(p, cfg).to_dict())
    return out


def cmd_classify(args) -> dict:
    p, cfg = _read_problem(args), _config(args)
    out = _case(p, cfg)
    rv = compact_resolvent(p, cfg)
    out["compact_resolvent"] = rv.compact.lower()
    out["summary"] = f"compact resolvent: {rv.compact.lower()}"
    out["note"] = rv.note
    out["omega_hat"] = rv.reason.to_dict()
    return out


def cmd_oracle(args) -> dict:
    p, cfg = _read_problem(args), _config(args)
    if args.L is None or args.n is None:
        L, n = experiments.oracle_window(p, cfg)
    else:
        L, n = args.L, args.n
    out = {"eigenvalue": principal_eigenvalue(p, L, n).to_dict()}
    if args.lam is not None:
        q = p
        if p.domain is Domain.HALF_LINE and classify_halfline(p, cfg).tag == INT_FIN:
            q = h_transform_drift(p, cfg)
        out["fixed_point"] = fixed_point(q, args.lam, p.baseline + L, n, cfg=cfg).to_dict()
        if args.paths:
            mc = MCConfig(paths=args.paths, seed=args.seed)
            out["monte_carlo"] = mc_exponential_moment(p, args.lam, args.x0 or p.baseline + 1.0, mc).to_dict()
    return out


def cmd_radial(args) -> dict:
    if not args.problem:
        raise ProblemFileError("--problem is required")
    with open(args.problem, encoding="utf-8") as fh:
        rp = radial_from_dict(_load_json(fh.read()))
    out = radial_bounds(rp, _config(args)).to_dict()
    if rp.zero_potential:
        out["davies"] = davies_classify(rp).to_dict()
    return out


def cmd_experiment(args):
    return experiments.run_experiment(args.id, _config(args))


COMMANDS = {
    "bounds": cmd_bounds,
    "essential": cmd_essential,
    "classify": cmd_classify,
    "oracle": cmd_oracle,
    "radial": cmd_radial,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--problem", help="problem file (JSON)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--tol", type=float, help="relative quadrature tolerance")
    common.add_argument("--xmax", type=float, help="outer end of the search grid")
    common.add_argument("--L", type=float, help="oracle truncation length")
    common.add_argument("--n", type=int, help="oracle mesh intervals")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--paths", type=int, help="Monte Carlo paths")
    common.add_argument("--lambda", dest="lam", type=float, help="spectral parameter for the fixed-point test")
    common.add_argument("--x0", type=float, help="Monte Carlo start point")
    common.add_argument("--override", help="analytic case tag (IntInf, IntFin, Recurrent, ...)")
    parser = argparse.ArgumentParser(prog="diffspec", description="Spectral bounds for 1-D diffusion operators.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    exp = sub.add_parser("experiment", parents=[common])
    exp.add_argument("id", help="one of: " + ", ".join(experiments.CATALOG))
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "experiment":
            if args.id not in experiments.CATALOG:
                print(f"unknown experiment {args.id!r}; available: {', '.join(experiments.CATALOG)}",
                      file=sys.stderr)
                return EXIT_PARSE
            report = cmd_experiment(args)
        else:
            report = COMMANDS[args.command](args)
    except (ProblemFileError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except InconclusiveError as exc:
        print(f"inconclusive: {exc}; pass --override to supply the case", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    except (DiffspecError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    text = render(report, args.format)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
