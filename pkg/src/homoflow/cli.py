"""Command-line interface: every subcommand prints (or writes) JSON."""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

from .errors import BoundExceeded, ConfigError, HomoflowError, MalformedStructure, NotFound
from .structures import ClassSpec, FiniteStructure, max_vertices


def _dump(data) -> str:
    return json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _load_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise MalformedStructure(f"{path} is not valid JSON: {exc}") from exc


def _csv_text(rows) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _emit(args, data, rows=None) -> None:
    if getattr(args, "csv", False):
        if rows is None:
            raise ConfigError("this command has no tabular output")
        text = _csv_text(rows)
    else:
        text = _dump(data)
    out = getattr(args, "out", None)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _check_bound(bound: int) -> None:
    cap = max_vertices()
    if bound > cap:
        raise BoundExceeded(f"bound {bound} exceeds HOMOFLOW_MAX_VERTICES={cap}")


# subcommands -------------------------------------------------------------------

def cmd_expand(args) -> None:
    from .expansion_classes import closed_form_count, count_relative_expansions, enumerate_expansions
    from .structures import iter_embeddings

    spec = ClassSpec.parse(args.cls)
    a = FiniteStructure.from_json(_load_json(args.input))
    exps = enumerate_expansions(spec, a)
    data = {"class": spec.name, "count": len(exps), "expansions": [e.to_json() for e in exps]}
    rows = [["index", "expansion"]] + [[i, json.dumps(e.to_json(), sort_keys=True)] for i, e in enumerate(exps)]
    if args.relative:
        b = FiniteStructure.from_json(_load_json(args.relative))
        emb = tuple(int(v) for v in args.emb.split(",")) if args.emb else next(iter_embeddings(a, b), None)
        if emb is None:
            raise ConfigError("the first structure does not embed into the second")
        rel = [count_relative_expansions(spec, e, b, emb) for e in exps]
        try:
            closed = str(closed_form_count(spec, a, b, emb))
        except HomoflowError:
            closed = None
        data["relative"] = {"embedding": list(emb), "counts": rel, "closed_form": closed}
        rows = [["index", "relative_count"]] + [[i, c] for i, c in enumerate(rel)]
    _emit(args, data, rows)


def _fragment(spec_text: str | None, source: str):
    from .fragments import builtin
    from .random_expansion_solver import Fragment

    if source.startswith("builtin:") or not Path(source).exists():
        name = source.split(":", 1)[1] if source.startswith("builtin:") else source
        spec, frag = builtin(name)
        if spec_text is not None and ClassSpec.parse(spec_text) != spec:
            raise ConfigError(f"built-in fragment {name} belongs to {spec.name}")
        return spec, frag
    if spec_text is None:
        raise ConfigError("--class is required for fragment files")
    return ClassSpec.parse(spec_text), Fragment.from_json(_load_json(source))


def cmd_amenable(args) -> None:
    from .random_expansion_solver import build_constraints, solve_feasibility, uniqueness_probe, verify_certificate

    spec, frag = _fragment(args.cls, args.fragment)
    system = build_constraints(spec, frag)
    result = solve_feasibility(system)
    data = {"class": spec.name, "variables": len(system.variables), "rows": len(system.rows)}
    if result.feasible:
        data["result"] = "Feasible"
        data["measure"] = result.measure_json(system)
        if args.probe:
            data["uniqueness"] = uniqueness_probe(system)
    else:
        cert = result.certificate
        data["result"] = "Infeasible"
        data["conclusion"] = cert.conclusion
        data["verified"] = verify_certificate(cert, spec)
        if args.emit_cert:
            Path(args.emit_cert).write_text(cert.dumps())
            data["certificate_path"] = args.emit_cert
    _emit(args, data)


def cmd_density(args) -> None:
    from .random_expansion_solver import check_density_criterion

    _check_bound(args.bound)
    spec = ClassSpec.parse(args.cls)
    report = check_density_criterion(spec, args.bound)
    _emit(args, {"class": spec.name, "bound": args.bound, **report.to_json()})


def _plot_deviations(path: str, deviations: list, title: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.hist([d for d in deviations if d is not None], bins=30)
    ax.set_xlabel("max |N_exp / N_emb - rho|")
    ax.set_ylabel("trials")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)


def cmd_qop(args) -> None:
    from .qop_lab import QopParams, run_qop_experiment

    a = tuple(int(v) for v in args.a.split(",")) if args.a else None
    p = QopParams(args.sampler, args.epsilon, args.D, args.n, args.k, args.m, args.M, a, args.trials,
                  args.seed, args.g_expansions)
    report = run_qop_experiment(p)
    data = report.to_json()
    data["passing_fraction"] = report.passing_fraction(args.threshold)
    data["threshold"] = args.threshold
    if args.plot:
        _plot_deviations(args.plot, report.deviations, f"{p.sampler}, n={p.n}")
    _emit(args, data, report.csv_rows())


def _parse_mode(text: str):
    from .qop_lab import FTMode, GnMode
    from .structures import NAMED_TOURNAMENTS

    low = text.lower()
    if low.startswith("gn:"):
        return GnMode(int(low[3:]))
    if low.startswith("ft:"):
        names = [x for x in low[3:].split(",") if x]
        try:
            return FTMode(tuple(NAMED_TOURNAMENTS[x] for x in names))
        except KeyError as exc:
            raise ConfigError(f"unknown forbidden tournament {exc.args[0]!r}") from exc
    raise ConfigError("mode must be gn:<m> or ft:<names>")


def hypergraph_battery(n: int, k: int, mode_text: str, h_name: str, seeds: int, seed: int, g_expansions: int,
                       threshold: float) -> dict:
    from .qop_lab import (
        build_girth4_hypergraph,
        girth_at_least_four,
        mode_valid,
        plant_hypergraph_digraph,
        qop_hypergraph_check,
    )
    from .structures import NAMED_TOURNAMENTS

    mode = _parse_mode(mode_text)
    if h_name not in NAMED_TOURNAMENTS:
        raise ConfigError(f"unknown H {h_name!r}")
    h = NAMED_TOURNAMENTS[h_name]
    runs = []
    for s in range(seed, seed + seeds):
        hg = build_girth4_hypergraph(n, k, s)
        g, _ = plant_hypergraph_digraph(hg, h, mode, s)
        rep = qop_hypergraph_check(h, g, hg, g_expansions, s)
        runs.append({
            "seed": s,
            "hyperedges": len(hg.edges),
            "girth_ok": girth_at_least_four(hg),
            "mode_ok": mode_valid(g, mode),
            "n_emb": rep.n_emb,
            "max_deviation": rep.max_deviation,
        })
    good = sum(1 for r in runs if r["max_deviation"] < threshold)
    return {
        "n": n, "k": k, "mode": mode_text, "H": h_name, "g_expansions": g_expansions, "threshold": threshold,
        "rho": str(Fraction(1, math.factorial(h.n))),
        "all_girth_ok": all(r["girth_ok"] for r in runs),
        "all_mode_ok": all(r["mode_ok"] for r in runs),
        "passing_fraction": good / len(runs) if runs else 0.0,
        "runs": runs,
    }


def cmd_hypergraph(args) -> None:
    data = hypergraph_battery(args.n, args.k, args.mode, args.h, args.seeds, args.seed, args.g_expansions,
                              args.threshold)
    cols = ["seed", "hyperedges", "girth_ok", "mode_ok", "n_emb", "max_deviation"]
    rows = [cols] + [[r[c] for c in cols] for r in data["runs"]]
    _emit(args, data, rows)


def cmd_hrushovski(args) -> None:
    from .hrushovski import PartialIsoSystem, extend_partial_isos, hrushovski_implies_uniform_ok, verify_extension

    spec = ClassSpec.parse(args.cls)
    _check_bound(args.bound)
    if args.system:
        system = PartialIsoSystem.from_json(_load_json(args.system))
        try:
            w = extend_partial_isos(system, spec, args.bound)
            data = {"class": spec.name, "bound": args.bound, "result": "Found", "witness": w.to_json(),
                    "verified": verify_extension(system, w)}
        except NotFound as exc:
            data = {"class": spec.name, "bound": args.bound, "result": "NotFound", "message": str(exc)}
    else:
        data = hrushovski_implies_uniform_ok(spec, args.bound)
    _emit(args, data)


def cmd_trees(args) -> None:
    from . import trees as T

    if args.op == "nice":
        t = T.build_nice_tree_family(args.n)
        _emit(args, {"tree": t.to_json(), "leaves": len(t.leaves()), "nice": T.is_nice(t, args.n)})
        return
    if args.op == "cofinal":
        _emit(args, T.nice_trees_cofinal_report(args.n))
        return
    if not args.input:
        raise ConfigError("--in is required for this operation")
    t = T.RootedBinaryTree.from_json(_load_json(args.input))
    ls = T.tree_to_leaf_structure(t)
    if args.op == "leaf-structure":
        data = ls.to_json()
    elif args.op == "count-convex":
        mt, _ = T.minimal_tree(ls)
        data = {"leaves": ls.n, "branching_nodes": len(mt.internal_nodes()),
                "count": len(T.enumerate_convex_orders(ls)), "formula": T.count_convex_orders(ls)}
    elif args.op == "convex-orders":
        orders = T.enumerate_convex_orders(ls)
        data = {"count": len(orders), "orders": [list(o) for o in orders]}
        _emit(args, data, [["index", "order"]] + [[i, " ".join(map(str, o))] for i, o in enumerate(orders)])
        return
    elif args.op == "minimal-tree":
        mt, node_of = T.minimal_tree(ls)
        data = {"tree": mt.to_json(), "leaf_nodes": node_of}
    elif args.op == "oh-witness":
        order = tuple(int(v) for v in args.order.split(",")) if args.order else tuple(range(ls.n))
        convex = tuple(int(v) for v in args.convex.split(",")) if args.convex else T.enumerate_convex_orders(ls)[0]
        a_star = T.TwoOrderExpansion(ls, order, convex)
        w = T.build_oh_qop_witness(a_star)
        data = {"witness": w.to_json(), "check": T.oh_witness_check(w, a_star)}
    else:
        is_nice = T.is_nice(t, t.height())
        data = {"nice": is_nice, "height": t.height()}
    _emit(args, data)


def cmd_verify_cert(args) -> None:
    from .errors import StepError
    from .random_expansion_solver import Certificate, replay_certificate

    cert = Certificate.from_json(_load_json(args.input))
    spec = ClassSpec.parse(args.cls or cert.spec)
    try:
        replay = replay_certificate(cert, spec)
        data = {"valid": True, "conclusion": cert.conclusion, "rhs": str(replay["rhs"]),
                "terms": {k: str(v) for k, v in sorted(replay["terms"].items(), key=lambda kv: int(kv[0]))}}
    except StepError as exc:
        data = {"valid": False, **exc.to_json()}
    _emit(args, data)
    if not data["valid"]:
        raise SystemExit(1)


def cmd_table(args) -> None:
    from .report import build_table

    _check_bound(args.bound)
    table = build_table(args.bound, args.trials, args.seed, args.n)
    rows = [["row", "notation", "amenable", "hrushovski", "uniquely_ergodic", "matches_reference"]]
    rows += [[r["row"], r["notation"], r["amenable"], r["hrushovski"], r["uniquely_ergodic"], r["matches_reference"]]
             for r in table["rows"]]
    _emit(args, table, rows)


# parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="homoflow", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, csv_ok=True):
        p.add_argument("--out", help="write output here instead of stdout")
        if csv_ok:
            p.add_argument("--csv", action="store_true", help="tabular CSV instead of JSON")

    p = sub.add_parser("expand", help="enumerate expansions of a structure")
    p.add_argument("--class", dest="cls", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--relative", help="larger structure for relative counts")
    p.add_argument("--emb", help="comma-separated embedding into the larger structure")
    common(p)
    p.set_defaults(func=cmd_expand)

    p = sub.add_parser("amenable", help="random-expansion feasibility on a fragment")
    p.add_argument("--class", dest="cls")
    p.add_argument("--fragment", required=True, help="fragment JSON or builtin:<name>")
    p.add_argument("--emit-cert", help="write the certificate JSON here")
    p.add_argument("--probe", action="store_true", help="report which weights are pinned")
    common(p, csv_ok=False)
    p.set_defaults(func=cmd_amenable)

    p = sub.add_parser("density", help="exhaustive density test up to a vertex bound")
    p.add_argument("--class", dest="cls", required=True)
    p.add_argument("--bound", type=int, default=4)
    common(p, csv_ok=False)
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("qop", help="Monte-Carlo concentration experiment")
    p.add_argument("--sampler", default="domega")
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--M", type=int, default=2)
    p.add_argument("--a", help="comma-separated class sizes of H")
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--D", type=float)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--g-expansions", type=int, default=50)
    p.add_argument("--threshold", type=float, default=0.05)
    p.add_argument("--plot", help="optional PNG histogram of deviations")
    common(p)
    p.set_defaults(func=cmd_qop)

    p = sub.add_parser("hypergraph", help="girth-4 hypergraph construction and concentration check")
    p.add_argument("--n", type=int, default=60)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--mode", default="ft:c3")
    p.add_argument("--h", default="l3")
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--g-expansions", type=int, default=1)
    p.add_argument("--threshold", type=float, default=0.1)
    common(p)
    p.set_defaults(func=cmd_hypergraph)

    p = sub.add_parser("hrushovski", help="bounded search for automorphism extensions")
    p.add_argument("--class", dest="cls", required=True)
    p.add_argument("--system", help="partial isomorphism system JSON; omit to run sampled systems")
    p.add_argument("--bound", type=int, default=7)
    common(p, csv_ok=False)
    p.set_defaults(func=cmd_hrushovski)

    p = sub.add_parser("trees", help="binary-tree leaf structures")
    p.add_argument("--op", required=True, choices=["leaf-structure", "count-convex", "convex-orders", "minimal-tree",
                                                   "is-nice", "nice", "cofinal", "oh-witness"])
    p.add_argument("--in", dest="input")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--order", help="arbitrary order for oh-witness, smallest first")
    p.add_argument("--convex", help="convex order for oh-witness, smallest first")
    common(p)
    p.set_defaults(func=cmd_trees)

    p = sub.add_parser("table", help="desk-scale status table")
    p.add_argument("--bound", type=int, default=4)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=30, help="size of sampled structures in experiments")
    common(p)
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("verify-cert", help="replay a certificate")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--class", dest="cls")
    common(p, csv_ok=False)
    p.set_defaults(func=cmd_verify_cert)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except HomoflowError as exc:
        sys.stdout.write(_dump(exc.to_json()))
        return 2
    except SystemExit as exc:
        return int(exc.code or 0)
    return 0


if __name__ == "__main__":
    sys.exit(main())
