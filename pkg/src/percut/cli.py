"""Command line front end for the experiments.

Every command resolves a graph (file path or family spec such as
``path:5``, ``grid:3,3,torus``, ``star:3``), runs one operation, and
emits a result record as CSV or JSON.  Randomized commands require an
explicit seed and are pure functions of (config, seed); ``--threads``
is accepted for symmetry with batch drivers but execution is serial,
which produces identical records because all aggregation commutes.

Exit codes: 0 success, 1 usage or input problems, 2 a violated
mathematical invariant (so batch pipelines can tell bugs from typos).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import re
import sys
import time
from pathlib import Path

import numpy as np

from ._util import fmt12
from .errors import (
    CapExceededError,
    GraphStructureError,
    NumericalError,
    ParseError,
    PreconditionError,
    TheoremViolationError,
)
from .graph_core import FAMILY_BUILDERS, Graph, grid_graph, load_graph, subdivide
from .cutsets import (
    default_karger_trials,
    enumerate_minimal_cutsets_bruteforce,
    enumerate_minimal_cutsets_by_components,
    karger_count_min_cuts,
    verified_cutset,
)
from .percolation import (
    boundary_census_exact,
    boundary_census_mc,
    peierls_bound,
    profile_probability,
    theta,
)
from .fkg_chain import build_chain, fkg_lower_bound
from .cover_lemma import (
    covering_sum_exact,
    covering_sum_mc,
    delta_bound,
    load_matrix_file,
    min_cut,
)
from .rw_cutsets import (
    crossing_matrix,
    escape_constant,
    escape_probabilities,
    escape_probability_mc,
    qn_census_rw,
)
from .gff import green, section8_pipeline

_USAGE_ERRORS = (ParseError, GraphStructureError, PreconditionError, CapExceededError)
_HASH_SKIP = {"func", "fmt", "output_file", "threads", "config"}


class _Parser(argparse.ArgumentParser):
    """argparse reserves status 2 for usage; here that signals violated math."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(1)


# ---- argument helpers ----


def _int_list(text: str) -> tuple[int, ...]:
    if text.strip().lower() in ("", "none"):
        return ()
    try:
        return tuple(int(t) for t in re.split(r"[\s,;]+", text.strip()) if t)
    except ValueError as exc:
        raise PreconditionError(f"bad id list {text!r}") from exc


def resolve_graph(spec: str, horizon: str | None) -> Graph:
    """A file path, or a family name with parameters after ':' or spaces."""
    path = Path(spec)
    if path.is_file():
        graph = load_graph(path.read_text())
        if horizon is None:
            return graph
        if horizon.strip().lower() == "boundary":
            raise PreconditionError("boundary horizon applies to generated families only")
        return Graph(graph.n_vertices, graph.edges, frozenset(_int_list(horizon)))
    tokens = [t for t in re.split(r"[\s:,]+", spec.strip()) if t]
    if not tokens or tokens[0] not in FAMILY_BUILDERS:
        raise PreconditionError(f"graph {spec!r} is neither a file nor a known family")
    name, *rest = tokens
    torus = False
    if name == "grid" and rest and rest[-1].lower() == "torus":
        torus = True
        rest = rest[:-1]
    try:
        nums = [int(t) for t in rest]
    except ValueError as exc:
        raise PreconditionError(f"bad parameters for family {name!r} in {spec!r}") from exc
    arity = {"path": 1, "cycle": 1, "star": 1, "grid": 2, "box3d": 3}[name]
    if len(nums) != arity:
        raise PreconditionError(f"family {name!r} takes {arity} size parameters")
    if horizon is None or horizon.strip().lower() == "boundary":
        hz = "boundary"
    else:
        hz = _int_list(horizon)
    if name == "grid":
        return grid_graph(nums[0], nums[1], torus, hz)
    return FAMILY_BUILDERS[name](*nums, horizon=hz)


def _check_seed(args) -> None:
    seed = getattr(args, "seed", None)
    if seed is not None and not 0 <= seed < 1 << 64:
        raise PreconditionError("seed must fit in 64 unsigned bits")


def _require_seed(args) -> int:
    if getattr(args, "seed", None) is None:
        raise PreconditionError("--seed is required for randomized commands")
    return args.seed


# ---- emission ----


def _json_value(v):
    if isinstance(v, float):
        return float(fmt12(v)) if np.isfinite(v) else str(v)
    if isinstance(v, (list, tuple)):
        return [_json_value(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_json_value(x) for x in v.tolist()]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return _json_value(float(v))
    return v


def _csv_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return fmt12(v) if np.isfinite(v) else str(v)
    if isinstance(v, (list, tuple)):
        return ";".join(_csv_value(x) for x in v)
    if isinstance(v, np.ndarray):
        return _csv_value(v.tolist())
    return str(v)


def _emit(args, echo: str, cfg_hash: str, wall: float, rows: list[dict]) -> None:
    stream = sys.stdout
    close = False
    if getattr(args, "output_file", None):
        stream = open(args.output_file, "w", encoding="utf-8")
        close = True
    try:
        if args.fmt == "json":
            record = {
                "command": echo,
                "config_hash": cfg_hash,
                "wall_time_s": float(f"{wall:.6f}"),
                "rows": [{k: _json_value(v) for k, v in row.items()} for row in rows],
            }
            json.dump(record, stream, indent=2)
            stream.write("\n")
        else:
            stream.write(f"# command={echo}\n")
            stream.write(f"# config_hash={cfg_hash}\n")
            stream.write(f"# wall_time_s={wall:.6f}\n")
            if rows:
                writer = csv.writer(stream, lineterminator="\n")
                header = list(rows[0])
                writer.writerow(header)
                for row in rows:
                    writer.writerow([_csv_value(row.get(k)) for k in header])
    finally:
        if close:
            stream.close()


def _config_hash(args) -> str:
    cfg = {
        k: v
        for k, v in sorted(vars(args).items())
        if k not in _HASH_SKIP and not callable(v)
    }
    blob = json.dumps(cfg, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


# ---- handlers, one per action ----


def _run_cutsets_enum(args) -> list[dict]:
    graph = resolve_graph(args.graph, args.horizon)
    if args.algo == "brute":
        table = enumerate_minimal_cutsets_bruteforce(graph, args.vertex, args.nmax)
    else:
        table = enumerate_minimal_cutsets_by_components(graph, args.vertex, args.nmax)
    kappa = table.kappa_estimate
    rows = []
    for n, count in sorted(table.counts.get(args.vertex, {}).items()):
        rows.append(
            {"vertex": args.vertex, "n": n, "count": count, "kappa_estimate": kappa}
        )
    return rows


def _run_cutsets_karger(args) -> list[dict]:
    graph = resolve_graph(args.graph, args.horizon)
    seed = _require_seed(args)
    trials = args.trials if args.trials is not None else default_karger_trials(graph.n_vertices)
    rng = np.random.Generator(np.random.PCG64(seed))
    result = karger_count_min_cuts(graph, rng, trials)
    return [
        {
            "min_cut_size": result.min_cut_size,
            "distinct_min_cuts": result.distinct_count,
            "trials": result.trials,
        }
    ]


def _run_perc_theta(args) -> list[dict]:
    graph = resolve_graph(args.graph, args.horizon)
    use_exact = args.exact or (
        args.trials is None and args.seed is None and graph.n_edges <= 20
    )
    if use_exact:
        result = theta(graph, args.p, args.vertex, exact=True)
    else:
        seed = _require_seed(args)
        trials = args.trials if args.trials is not None else 100_000
        result = theta(graph, args.p, args.vertex, exact=False, trials=trials, seed=seed)
    return [
        {
            "vertex": args.vertex,
            "p": args.p,
            "value": result.value,
            "method": result.method,
            "trials": result.trials,
            "ci_low": result.ci_low,
            "ci_high": result.ci_high,
        }
    ]


def _run_perc_peierls(args) -> list[dict]:
    graph = resolve_graph(args.graph, args.horizon)
    if args.algo == "brute":
        table = enumerate_minimal_cutsets_bruteforce(graph, args.vertex, args.nmax)
    else:
        table = enumerate_minimal_cutsets_by_components(graph, args.vertex, args.nmax)
    bound = peierls_bound(table, args.p, args.vertex)
    return [{"vertex": args.vertex, "p": args.p, "nmax": args.nmax, "bound": bound}]


def _run_perc_census(args) -> list[dict]:
    graph = resolve_graph(args.graph, args.horizon)
    rows: list[dict] = []
    if args.exact or (args.trials is None and args.seed is None):
        profiles, infinite = boundary_census_exact(graph, args.vertex)
        for ids in sorted(profiles, key=lambda t: (len(t), t)):
            rows.append(
                {
                    "kind": "cutset",
                    "edge_ids": list(ids),
                    "n": len(ids),
                    "probability": profile_probability(profiles[ids], args.p),
                }
            )
        rows.append(
            {
                "kind": "infinite",
                "edge_ids": None,
                "n": None,
                "probability": profile_probability(infinite, args.p),
            }
        )
        return rows
    seed = _require_seed(args)
    trials = args.trials if args.trials is not None else 100_000
    counts, infinite_count = boundary_census_mc(graph, args.vertex, args.p, trials, seed)
    for ids in sorted(counts, key=lambda t: (len(t), t)):
        rows.append(
            {
                "kind": "cutset",
                "edge_ids": list(ids),
                "n": len(ids),
                "count": counts[ids],
                "frequency": counts[ids] / trials,
            }
        )
    rows.append(
        {
            "kind": "infinite",
            "edge_ids": None,
            "n": None,
            "count": infinite_count,
            "frequency": infinite_count / trials,
        }
    )
    return rows


def _run_chain_build(args) -> list[dict]:
    graph = resolve_graph(args.graph, args.horizon)
    region = _int_list(args.set_a)
    targets = _int_list(args.set_b)
    if args.trials is not None and not args.exact:
        seed = _require_seed(args)
        chain = build_chain(
            graph, region, targets, args.origin, theta=args.theta, p=args.p,
            mode="monte_carlo", trials=args.trials, seed=seed,
        )
    else:
        chain = build_chain(
            graph, region, targets, args.origin, theta=args.theta, p=args.p, mode="exact"
        )
    return [
        {
            "vertices": list(chain.vertices),
            "probs": list(chain.probs),
            "theta": chain.theta,
            "k_bound": 2.0 * chain.n_targets / chain.theta,
            "c": fkg_lower_bound(chain.theta, args.p, 1),
        }
    ]


def _cover_common(args) -> tuple:
    sub = load_matrix_file(Path(args.matrix).read_text())
    eps = min_cut(sub) if sub.n > 1 else float("inf")
    delta = delta_bound(eps, sub.n) if 0.0 < eps <= 1.0 else None
    return sub, eps, delta


def _run_cover_exact(args) -> list[dict]:
    sub, eps, delta = _cover_common(args)
    value = covering_sum_exact(sub)
    return [
        {
            "n": sub.n,
            "epsilon": eps,
            "delta_n": delta,
            "sum": value,
            "method": "exact",
            "ci_low": None,
            "ci_high": None,
        }
    ]


def _run_cover_mc(args) -> list[dict]:
    sub, eps, delta = _cover_common(args)
    seed = _require_seed(args)
    trials = args.trials if args.trials is not None else 100_000
    est = covering_sum_mc(sub, trials, seed)
    return [
        {
            "n": sub.n,
            "epsilon": eps,
            "delta_n": delta,
            "sum": est.value,
            "method": "monte_carlo",
            "trials": est.trials,
            "ci_low": est.ci_low,
            "ci_high": est.ci_high,
            "aborted": est.aborted,
        }
    ]


def _run_cover_verify(args) -> list[dict]:
    sub, eps, delta = _cover_common(args)
    value = covering_sum_exact(sub)
    if delta is not None and value < delta - 1e-15:
        raise TheoremViolationError(
            f"cover sum {fmt12(value)} below the guarantee {fmt12(delta)}"
        )
    return [
        {
            "n": sub.n,
            "epsilon": eps,
            "delta_n": delta,
            "sum": value,
            "method": "exact",
            "ok": True,
        }
    ]


def _run_rw_escape(args) -> list[dict]:
    graph = resolve_graph(args.graph, args.horizon)
    if args.trials is not None and not args.exact:
        seed = _require_seed(args)
        if args.vertex is None:
            raise PreconditionError("sampled escape needs --vertex")
        est = escape_probability_mc(graph, args.vertex, args.trials, seed)
        return [
            {
                "vertex": args.vertex,
                "escape": est.value,
                "method": "monte_carlo",
                "trials": est.trials,
                "ci_low": est.ci_low,
                "ci_high": est.ci_high,
            }
        ]
    probs = escape_probabilities(graph)
    constant = escape_constant(graph)
    rows = []
    for v in sorted(probs):
        if args.vertex is not None and v != args.vertex:
            continue
        rows.append(
            {
                "vertex": v,
                "escape": probs[v],
                "weighted": graph.degree(v) * probs[v],
                "constant": constant,
            }
        )
    return rows


def _run_rw_census(args) -> list[dict]:
    graph = resolve_graph(args.graph, args.horizon)
    seed = _require_seed(args)
    sd = subdivide(graph, 2)
    census = qn_census_rw(sd, args.origin, args.trials, seed, max_steps=args.max_steps)
    rows: list[dict] = []
    for label in sorted(census.outcome_counts):
        count = census.outcome_counts[label]
        rows.append(
            {
                "kind": "outcome",
                "label": label,
                "edge_ids": None,
                "n": None,
                "count": count,
                "frequency": count / census.trials,
            }
        )
    for cs in sorted(census.hits, key=lambda c: (c.size, c.edge_ids)):
        count = census.hits[cs]
        rows.append(
            {
                "kind": "cutset",
                "label": None,
                "edge_ids": list(cs.edge_ids),
                "n": cs.size,
                "count": count,
                "frequency": count / census.trials,
            }
        )
    return rows


def _run_rw_crossing(args) -> list[dict]:
    graph = resolve_graph(args.graph, args.horizon)
    cs = verified_cutset(graph, _int_list(args.cutset), args.origin)
    sd = subdivide(graph, 2)
    cm = crossing_matrix(sd, cs)
    return [
        {
            "vertices": list(cm.vertices),
            "eps_base": cm.eps_base,
            "eps1": cm.eps1,
            "eps2": cm.eps2,
            "min_cut": cm.min_cut_value,
            "matrix": cm.p,
        }
    ]


def _run_gff_green(args) -> list[dict]:
    graph = resolve_graph(args.graph, args.horizon)
    gm = green(graph)
    return [{"interior": list(gm.interior), "matrix": gm.g}]


def _run_gff_pipeline(args) -> list[dict]:
    graph = resolve_graph(args.graph, args.horizon)
    seed = _require_seed(args)
    cs = verified_cutset(graph, _int_list(args.cutset), args.origin)
    report = section8_pipeline(graph, cs, args.trials, seed)
    rows = []
    for label, prob in (
        ("clamp", report.f_prob),
        ("connect", report.e_prob),
        ("clamp_and_connect", report.fe_prob),
        ("boundary_match", report.boundary_prob),
    ):
        rows.append(
            {
                "event": label,
                "trials": report.trials,
                "count": round(prob.value * report.trials),
                "frequency": prob.value,
                "ci_low": prob.ci_low,
                "ci_high": prob.ci_high,
            }
        )
    return rows


# ---- parser wiring ----


def _add_common(ap: argparse.ArgumentParser, fmt_default: str) -> None:
    ap.add_argument("--out", "--format", dest="fmt", choices=("csv", "json"), default=fmt_default)
    ap.add_argument("--output-file", default=None)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--config", default=None, help="JSON file mirroring the flags")


def _add_graph(ap: argparse.ArgumentParser) -> None:
    ap.add_argument("--graph", required=True)
    ap.add_argument("--horizon", default=None, help="'boundary' or comma ids")


def build_parser() -> _Parser:
    top = _Parser(prog="percut", description=__doc__)
    groups = top.add_subparsers(dest="group", required=True, parser_class=_Parser)

    cut = groups.add_parser("cutsets").add_subparsers(dest="action", required=True, parser_class=_Parser)
    ap = cut.add_parser("enum")
    _add_graph(ap)
    ap.add_argument("--vertex", type=int, required=True)
    ap.add_argument("--nmax", type=int, required=True)
    ap.add_argument("--algo", choices=("brute", "components"), default="components")
    _add_common(ap, "csv")
    ap.set_defaults(func=_run_cutsets_enum)
    ap = cut.add_parser("karger")
    _add_graph(ap)
    ap.add_argument("--trials", type=int, default=None)
    ap.add_argument("--seed", type=int, default=None)
    _add_common(ap, "json")
    ap.set_defaults(func=_run_cutsets_karger)

    perc = groups.add_parser("perc").add_subparsers(dest="action", required=True, parser_class=_Parser)
    ap = perc.add_parser("theta")
    _add_graph(ap)
    ap.add_argument("--p", type=float, required=True)
    ap.add_argument("--vertex", type=int, required=True)
    ap.add_argument("--exact", action="store_true")
    ap.add_argument("--trials", type=int, default=None)
    ap.add_argument("--seed", type=int, default=None)
    _add_common(ap, "csv")
    ap.set_defaults(func=_run_perc_theta)
    ap = perc.add_parser("peierls")
    _add_graph(ap)
    ap.add_argument("--p", type=float, required=True)
    ap.add_argument("--vertex", type=int, required=True)
    ap.add_argument("--nmax", type=int, required=True)
    ap.add_argument("--algo", choices=("brute", "components"), default="components")
    _add_common(ap, "csv")
    ap.set_defaults(func=_run_perc_peierls)
    ap = perc.add_parser("census")
    _add_graph(ap)
    ap.add_argument("--p", type=float, required=True)
    ap.add_argument("--vertex", type=int, required=True)
    ap.add_argument("--exact", action="store_true")
    ap.add_argument("--trials", type=int, default=None)
    ap.add_argument("--seed", type=int, default=None)
    _add_common(ap, "csv")
    ap.set_defaults(func=_run_perc_census)

    chain = groups.add_parser("chain").add_subparsers(dest="action", required=True, parser_class=_Parser)
    ap = chain.add_parser("build")
    _add_graph(ap)
    ap.add_argument("--setA", dest="set_a", required=True, help="region vertex ids")
    ap.add_argument("--setB", dest="set_b", required=True, help="target vertex ids")
    ap.add_argument("--origin", type=int, required=True)
    ap.add_argument("--p", type=float, default=0.5)
    ap.add_argument("--theta", type=float, default=None)
    ap.add_argument("--exact", action="store_true")
    ap.add_argument("--trials", type=int, default=None)
    ap.add_argument("--seed", type=int, default=None)
    _add_common(ap, "json")
    ap.set_defaults(func=_run_chain_build)

    cover = groups.add_parser("cover").add_subparsers(dest="action", required=True, parser_class=_Parser)
    for action, func, needs_trials in (
        ("exact", _run_cover_exact, False),
        ("mc", _run_cover_mc, True),
        ("verify", _run_cover_verify, False),
    ):
        ap = cover.add_parser(action)
        ap.add_argument("--matrix", required=True)
        if needs_trials:
            ap.add_argument("--trials", type=int, default=None)
            ap.add_argument("--seed", type=int, default=None)
        _add_common(ap, "json")
        ap.set_defaults(func=func)

    rw = groups.add_parser("rw").add_subparsers(dest="action", required=True, parser_class=_Parser)
    ap = rw.add_parser("escape")
    _add_graph(ap)
    ap.add_argument("--vertex", type=int, default=None)
    ap.add_argument("--exact", action="store_true")
    ap.add_argument("--trials", type=int, default=None)
    ap.add_argument("--seed", type=int, default=None)
    _add_common(ap, "csv")
    ap.set_defaults(func=_run_rw_escape)
    ap = rw.add_parser("census")
    _add_graph(ap)
    ap.add_argument("--origin", type=int, required=True)
    ap.add_argument("--trials", type=int, required=True)
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--max-steps", type=int, default=10_000_000)
    _add_common(ap, "csv")
    ap.set_defaults(func=_run_rw_census)
    ap = rw.add_parser("crossing")
    _add_graph(ap)
    ap.add_argument("--cutset", required=True, help="base edge ids")
    ap.add_argument("--origin", type=int, required=True)
    _add_common(ap, "json")
    ap.set_defaults(func=_run_rw_crossing)

    gff = groups.add_parser("gff").add_subparsers(dest="action", required=True, parser_class=_Parser)
    ap = gff.add_parser("green")
    _add_graph(ap)
    _add_common(ap, "json")
    ap.set_defaults(func=_run_gff_green)
    ap = gff.add_parser("pipeline")
    _add_graph(ap)
    ap.add_argument("--origin", type=int, required=True)
    ap.add_argument("--cutset", required=True, help="base edge ids")
    ap.add_argument("--trials", type=int, required=True)
    ap.add_argument("--seed", type=int, default=None)
    _add_common(ap, "csv")
    ap.set_defaults(func=_run_gff_pipeline)

    return top


def _inject_config(argv: list[str]) -> list[str]:
    """Splice config-file entries in as flags at the --config position.

    Flags written after --config therefore override the file; unknown
    keys turn into unrecognized flags and fail as usage errors.
    """
    for i, tok in enumerate(argv):
        if tok == "--config" or tok.startswith("--config="):
            if tok == "--config":
                if i + 1 >= len(argv):
                    raise PreconditionError("--config needs a file path")
                path, skip = argv[i + 1], 2
            else:
                path, skip = tok.split("=", 1)[1], 1
            try:
                data = json.loads(Path(path).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise PreconditionError(f"unreadable config {path!r}: {exc}") from exc
            if not isinstance(data, dict):
                raise PreconditionError("config file must hold a JSON object")
            injected: list[str] = []
            for key, value in data.items():
                flag = "--" + str(key).replace("_", "-")
                if isinstance(value, bool):
                    if value:
                        injected.append(flag)
                elif value is None:
                    continue
                elif isinstance(value, float) and value.is_integer():
                    injected.extend([flag, str(int(value))])
                elif isinstance(value, (list, tuple)):
                    injected.extend([flag, ",".join(str(x) for x in value)])
                else:
                    injected.extend([flag, str(value)])
            return argv[:i] + injected + argv[i + skip :]
    return argv


def main(argv: list[str] | None = None) -> int:
    raw = list(sys.argv[1:] if argv is None else argv)
    try:
        expanded = _inject_config(raw)
        parser = build_parser()
        args = parser.parse_args(expanded)
        if args.threads < 1:
            raise PreconditionError("--threads must be positive")
        _check_seed(args)
        echo = " ".join(["percut"] + raw)
        cfg_hash = _config_hash(args)
        start = time.perf_counter()
        rows = args.func(args)
        wall = time.perf_counter() - start
        _emit(args, echo, cfg_hash, wall, rows)
        return 0
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 0
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (TheoremViolationError, NumericalError) as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
