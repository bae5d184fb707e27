"""Command line entry point: ``treepca <subcommand> ...``.

Exit codes: 0 success, 1 invalid input or usage, 2 internal invariant
violation (for instance a failed ``verify``).
"""
from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path

from . import analysis, oracle, pca
from .correspondence import descendant_relabel, parse_parens
from .io import GeneratorConfig, dumps_dataset, generate, read_dataset, read_node_list, write_dataset
from .tree_core import ROOT, DataSet, LabeledTree, Record, TreeError, intersection, support

EXIT_OK, EXIT_INVALID, EXIT_INTERNAL = 0, 1, 2


class InvariantViolation(RuntimeError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _start_tree(value: str, ds: DataSet) -> LabeledTree:
    if value == "root":
        return LabeledTree([ROOT])
    if value == "intersection":
        return intersection(ds)
    if value.startswith("file:"):
        return read_node_list(value[len("file:"):])
    raise TreeError(f"--start must be root, intersection or file:PATH, got {value!r}")


def _write_rows(out: str | None, header: list[str], rows) -> None:
    fh = open(out, "w", newline="") if out else sys.stdout
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    finally:
        if out:
            fh.close()


def _fmt(x: float) -> str:
    return repr(float(x))


def _emit_tree(tree: LabeledTree, name: str, out: str | None) -> None:
    ds = DataSet([Record(name, tree)])
    if out:
        write_dataset(ds, out)
    else:
        sys.stdout.write(dumps_dataset(ds))


def cmd_support(args) -> int:
    _emit_tree(support(read_dataset(args.input)), "support", args.out)
    return EXIT_OK


def cmd_intersect(args) -> int:
    _emit_tree(intersection(read_dataset(args.input)), "intersection", args.out)
    return EXIT_OK


def cmd_pca(args) -> int:
    ds = read_dataset(args.input)
    dec = pca.decompose(ds, _start_tree(args.start, ds), args.direction, args.tiebreak)
    pca.write_decomposition(dec, args.out)
    return EXIT_OK


def cmd_curve(args) -> int:
    ds = read_dataset(args.input)
    dec = pca.decompose(ds, _start_tree(args.start, ds), "backward", args.tiebreak)
    points = analysis.variation_curve(ds, dec)
    if args.scaled:
        rows = [(_fmt(p.removed), _fmt(p.explained)) for p in analysis.scale_curve(points)]
    else:
        rows = [(p.removed, p.explained) for p in points]
    _write_rows(args.out, ["removed", "explained"], rows)
    return EXIT_OK


def cmd_regress(args) -> int:
    ds = read_dataset(args.input)
    dec = pca.decompose(ds, _start_tree(args.start, ds), "backward", args.tiebreak)
    curve = analysis.pvalue_curve(ds, dec, args.covariate)
    rows = [(p.removed, "" if p.p_value is None else _fmt(p.p_value)) for p in curve]
    _write_rows(args.out, ["removed", "p_value"], rows)
    return EXIT_OK


def cmd_split(args) -> int:
    ds = read_dataset(args.input)
    dec = pca.decompose(ds, _start_tree(args.start, ds), "backward", args.tiebreak)
    result = analysis.set_split(ds, dec, args.fraction)
    _write_rows(args.out, ["tree_id", "x", "y"], [(p.tree_id, _fmt(p.x), _fmt(p.y)) for p in result.points])
    return EXIT_OK


def cmd_layout(args) -> int:
    ds = read_dataset(args.input)
    if args.tree_id == "@support":
        tree = support(ds)
    else:
        matches = [r.tree for r in ds.records if r.id == args.tree_id]
        if not matches:
            raise TreeError(f"no tree with id {args.tree_id!r}")
        tree = matches[0]
    points = analysis.radial_layout(tree)
    if args.out.lower().endswith(".svg"):
        ranks = None
        if args.start:
            dec = pca.decompose(ds, _start_tree(args.start, ds), "backward", args.tiebreak)
            ranks = analysis.node_component_rank(dec)
        Path(args.out).write_text(analysis.layout_svg(points, ranks))
    else:
        rows = [(str(p.node), _fmt(p.radius), _fmt(p.angle)) for p in points]
        _write_rows(args.out, ["node", "radius", "angle_deg"], rows)
    return EXIT_OK


def run_verification(ds: DataSet, l0: LabeledTree, bound: int, report=print) -> bool:
    """Check equivalence, fast-vs-stepwise runs, and the exhaustive oracles."""
    ok = True

    def line(name, passed, detail=""):
        nonlocal ok
        ok &= passed
        report(f"{'PASS' if passed else 'FAIL'} {name}{': ' + detail if detail else ''}")

    for tb in pca.TIEBREAKS:
        eq = pca.verify_equivalence(ds, l0, tb)
        detail = f"n={eq.forward.n}" if eq.ok else f"first mismatch at k={eq.mismatches[0][0]}"
        line(f"equivalence (tiebreak={tb})", eq.ok, detail)
    fwd = pca.decompose(ds, l0, "forward")
    bwd = pca.decompose(ds, l0, "backward")
    line("forward fast == stepwise", fwd == pca.iterate_steps(ds, l0, "forward"))
    line("backward fast == stepwise", bwd == pca.iterate_steps(ds, l0, "backward"))

    lines = fwd.lines()
    lemma1 = all(
        pca.project(t, ln) == oracle.brute_force_projection(t, ln, max_length=10**9)
        for t in ds for ln in lines
    )
    line("projection vs exhaustive (single line)", lemma1)

    # the last forward step enumerates the union of every line, so it is the
    # most expensive one; skip up front rather than grinding towards the bound
    combos = math.prod(len(ln) for ln in lines)
    if combos > bound:
        shown = str(combos) if combos < 10**12 else f"~1e{len(str(combos)) - 1}"
        report(f"SKIP exhaustive checks: oracle bound: {shown} index combinations > {bound} "
               "(raise --oracle-bound to run them)")
        return ok
    try:
        prev = []
        fwd_ok = True
        for c in fwd.components:
            cand, _ = oracle.brute_force_pc(ds, l0, prev, max_combinations=bound)
            fwd_ok &= cand.path == c.path
            prev.append(cand)
        line("forward steps vs exhaustive objective", fwd_ok)
        remaining = list(bwd.paths)
        bwd_ok = True
        for c in bwd.removal_order():
            cand, _ = oracle.brute_force_bpc(ds, l0, remaining, max_combinations=bound)
            bwd_ok &= cand.path == c.path
            remaining.remove(c.path)
        line("backward steps vs exhaustive objective", bwd_ok)
        union_ok = all(
            pca.project_union(t, lines) == oracle.brute_force_projection_union(t, lines, bound)
            for t in ds
        ) if lines else True
        line("union projection vs exhaustive", union_ok)
    except oracle.OracleBoundError as exc:
        report(f"SKIP exhaustive checks: {exc} (raise --oracle-bound to run them)")
    return ok


def cmd_verify(args) -> int:
    ds = read_dataset(args.input)
    if not run_verification(ds, _start_tree(args.start, ds), args.oracle_bound):
        raise InvariantViolation("verification failed")
    return EXIT_OK


def cmd_gen(args) -> int:
    cfg = GeneratorConfig(
        seed=args.seed,
        tree_count=args.trees,
        max_depth=args.depth,
        max_arity=args.arity,
        base_keep=args.base_keep,
        covariate_effect=args.effect,
        covariate_range=(args.cov_lo, args.cov_hi),
    )
    write_dataset(generate(cfg), args.out)
    return EXIT_OK


def cmd_relabel(args) -> int:
    if args.scheme != "descendant":
        raise TreeError(f"unknown scheme {args.scheme!r}")
    records = []
    text = Path(args.input).read_text(encoding="utf-8")
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        body = raw_line.strip()
        if not body:
            continue
        if body.startswith("("):
            tree_id, parens = f"t{lineno:06d}", body
        else:
            tree_id, _, parens = body.partition(" ")
        try:
            raw = parse_parens(parens)
        except TreeError as exc:
            raise TreeError(f"line {lineno}: {exc}") from None
        records.append(Record(tree_id, descendant_relabel(raw)))
    write_dataset(DataSet(records), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="treepca", description="Tree-line PCA for rooted labeled trees")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def with_input(sp):
        sp.add_argument("--in", dest="input", required=True, metavar="FILE")

    def with_start(sp):
        sp.add_argument("--start", default="root", help="root | intersection | file:PATH")
        sp.add_argument("--tiebreak", choices=pca.TIEBREAKS, default="left",
                        help="forward rule; backward always uses the mirror")

    for name, fn in (("support", cmd_support), ("intersect", cmd_intersect)):
        sp = sub.add_parser(name)
        with_input(sp)
        sp.add_argument("--out")
        sp.set_defaults(func=fn)

    sp = sub.add_parser("pca", help="full forward or backward decomposition")
    with_input(sp)
    sp.add_argument("--direction", choices=pca.DIRECTIONS, required=True)
    with_start(sp)
    sp.add_argument("--out", required=True, metavar="CSV")
    sp.set_defaults(func=cmd_pca)

    sp = sub.add_parser("curve", help="variation explained vs components removed")
    with_input(sp)
    with_start(sp)
    sp.add_argument("--out", metavar="CSV")
    sp.add_argument("--scaled", action="store_true")
    sp.set_defaults(func=cmd_curve)

    sp = sub.add_parser("regress", help="p-value of size ~ covariate vs components removed")
    with_input(sp)
    sp.add_argument("--covariate", required=True)
    with_start(sp)
    sp.add_argument("--out", metavar="CSV")
    sp.set_defaults(func=cmd_regress)

    sp = sub.add_parser("split", help="SET1/SET2 projection scatter")
    with_input(sp)
    sp.add_argument("--fraction", type=float, default=0.9)
    with_start(sp)
    sp.add_argument("--out", metavar="CSV")
    sp.set_defaults(func=cmd_split)

    sp = sub.add_parser("layout", help="radial layout of one tree (or @support)")
    with_input(sp)
    sp.add_argument("--tree-id", required=True)
    sp.add_argument("--out", required=True, metavar="CSV|SVG")
    sp.add_argument("--start", default=None, help="colour SVG nodes by backward components")
    sp.add_argument("--tiebreak", choices=pca.TIEBREAKS, default="left")
    sp.set_defaults(func=cmd_layout)

    sp = sub.add_parser("verify", help="run equivalence and exhaustive-oracle checks")
    with_input(sp)
    with_start(sp)
    sp.add_argument("--oracle-bound", type=int, default=oracle.DEFAULT_UNION_BOUND, metavar="N")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("gen", help="seeded synthetic data set")
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--trees", type=int, required=True)
    sp.add_argument("--depth", type=int, required=True)
    sp.add_argument("--arity", type=int, required=True)
    sp.add_argument("--base-keep", type=float, required=True)
    sp.add_argument("--effect", type=float, required=True)
    sp.add_argument("--cov-lo", type=float, default=18.0)
    sp.add_argument("--cov-hi", type=float, default=72.0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("relabel", help="parenthesised raw trees to a data set file")
    sp.add_argument("--in", dest="input", required=True, metavar="PARENS_FILE")
    sp.add_argument("--scheme", choices=["descendant"], default="descendant")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_relabel)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InvariantViolation as exc:
        print(f"treepca: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except (TreeError, ValueError, OSError) as exc:
        print(f"treepca: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
