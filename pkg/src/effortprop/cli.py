"""Command-line entry point.

Exit codes: 0 success, 1 validation or evaluation failure, 2 parse/IO failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import heap, peap, report
from .ingestion import (
    ProjectFormatError,
    ProjectValidationError,
    load_project,
    normalize_dim,
    read_matrix_csv,
)
from .model import DirectInfluenceMatrix, EffortPropError, classify_factors
from .relations import SCALE_METHODS, mine_relations
from .verification import run_checks

EXIT_OK, EXIT_INVALID, EXIT_PARSE = 0, 1, 2


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _on_off(text: str) -> bool:
    if text.lower() in ("on", "true", "yes", "1"):
        return True
    if text.lower() in ("off", "false", "no", "0"):
        return False
    raise argparse.ArgumentTypeError("expected on|off")


def _scale(text: str):
    if text in SCALE_METHODS:
        return text
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or one of {', '.join(SCALE_METHODS)}")


def _project(args):
    if not args.project:
        raise CliError("--project is required", EXIT_PARSE)
    project = load_project(args.project)
    changes = {}
    if getattr(args, "gating", None) is not None:
        changes["peap_gating"] = args.gating
    if getattr(args, "within_block", None) is not None:
        changes["within_block_propagation"] = args.within_block
    if getattr(args, "scale", None) is not None:
        changes["trm_scale"] = args.scale
    return project.with_options(**changes) if changes else project


def _meta(project):
    return report.metadata(project.name, project.options.to_json())


def _significance(project):
    if not project.options.peap_gating:
        return None
    opts = project.options
    return mine_relations(project.closure_input, scale=opts.trm_scale, rule=opts.threshold_rule)


def _emit(args, payload, md, csv_):
    fmt = args.format
    text = report.to_json(payload) if fmt == "json" else (csv_(payload) if fmt == "csv" else md(payload))
    if args.out:
        try:
            Path(args.out).write_text(text, encoding="utf-8")
        except OSError as exc:
            raise CliError(f"cannot write {args.out}: {exc}", EXIT_PARSE)
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------


def cmd_normalize(args):
    if args.matrix:
        try:
            ids, arr = read_matrix_csv(args.matrix)
        except OSError as exc:
            raise CliError(f"cannot read {args.matrix}: {exc}", EXIT_PARSE)
        except ValueError as exc:
            raise CliError(str(exc), EXIT_PARSE)
        if (arr < 0).any():
            raise CliError("negative influence", EXIT_INVALID)
        nd = normalize_dim(DirectInfluenceMatrix(ids, arr))
        meta = report.metadata(Path(args.matrix).stem, {})
    else:
        project = _project(args)
        nd = project.ndim
        meta = _meta(project)
    rows = [[None if x != x else float(x) for x in row] for row in nd.entries]
    payload = {"metadata": meta, "ids": list(nd.ids), "ndim": rows}
    _emit(args, payload,
          lambda p: report.matrix_md(p["ids"], p["ndim"], "Normalized direct influence matrix"),
          lambda p: report.matrix_csv(p["ids"], p["ndim"]))


def cmd_trm(args):
    project = _project(args)
    opts = project.options
    trm = mine_relations(project.closure_input, scale=opts.trm_scale, rule=opts.threshold_rule)
    payload = {
        "metadata": _meta(project),
        "ids": list(trm.ids),
        "rule": trm.rule,
        "threshold": trm.threshold,
        "trm": trm.entries.tolist(),
        "edges": [{"from": a, "to": b, "t": t} for a, b, t in trm.edges()],
    }
    _emit(args, payload, report.render_trm_md, report.render_trm_csv)


def cmd_classify(args):
    project = _project(args)
    daf, ndaf = classify_factors(project.system)
    payload = report.classify_payload(project.system, daf, ndaf, _meta(project))
    _emit(args, payload, report.render_classify_md, report.render_classify_csv)


def cmd_paths(args):
    project = _project(args)
    paths = heap.enumerate_paths(project.system)
    payload = report.paths_payload(paths, project.system, _meta(project))
    _emit(args, payload, report.render_paths_md, report.render_paths_csv)


def _heuristics(args) -> list[heap.HeapHeuristic]:
    blocks = args.block or [b.value for b in heap.BlockRule]
    units = args.unit or [u.value for u in heap.UnitRule]
    return [heap.HeapHeuristic(b, u) for b in blocks for u in units]


def _paths(project, args):
    paths = heap.enumerate_paths(project.system)
    if args.path is None:
        return paths
    bad = [k for k in args.path if not 1 <= k <= len(paths)]
    if bad:
        raise CliError(f"path {bad[0]} out of range 1..{len(paths)}", EXIT_INVALID)
    return [paths[k - 1] for k in args.path]


def cmd_evaluate(args):
    project = _project(args)
    opts = project.options
    if args.strategy in ("u-peap", "w-peap"):
        cfg = peap.PeapConfig(gating=opts.peap_gating)
        result = peap.evaluate_peap(project.system, project.nsig, project.ndim,
                                    args.strategy == "w-peap", cfg, _significance(project))
    else:
        if (args.block and len(args.block) > 1) or (args.unit and len(args.unit) > 1) or \
                (args.path and len(args.path) > 1):
            raise CliError("evaluate takes a single --block, --unit and --path", EXIT_PARSE)
        h = heap.HeapHeuristic(args.block[0] if args.block else "Uni", args.unit[0] if args.unit else "Uni")
        path = _paths(project, args)[0] if args.path else 1
        result = heap.evaluate_heap(project.system, project.nsig, project.ndim, h, path,
                                    opts.within_block_propagation)
    payload = report.result_payload(result, project.system, _meta(project))
    _emit(args, payload, report.render_result_md, report.render_result_csv)


def cmd_compare(args):
    project = _project(args)
    opts = project.options
    wanted = args.strategy
    results = []
    if wanted in ("all", "peap", "u-peap", "w-peap"):
        cfg = peap.PeapConfig(gating=opts.peap_gating)
        sig = _significance(project)
        for weighted in (False, True):
            if wanted == ("w-peap" if not weighted else "u-peap"):
                continue
            results.append(peap.evaluate_peap(project.system, project.nsig, project.ndim, weighted, cfg, sig))
    if wanted in ("all", "heap"):
        for path in _paths(project, args):
            for h in _heuristics(args):
                results.append(heap.evaluate_heap(project.system, project.nsig, project.ndim, h, path,
                                                  opts.within_block_propagation))
    rep = report.ComparisonReport.from_results(results, _meta(project))
    _emit(args, rep.to_payload(), report.render_compare_md, report.render_compare_csv)


def cmd_verify(args):
    checks = run_checks(args.cases, args.seed)
    payload = {
        "seed": args.seed,
        "checks": [{"name": c.name, "cases": c.cases, "max_error": c.max_error, "tolerance": c.tolerance,
                    "passed": c.passed} for c in checks],
    }

    def md(p):
        lines = ["| Check | Cases | Max error | Tolerance | Result |", "|---|---:|---:|---:|---|"]
        for c in p["checks"]:
            lines.append(f"| {c['name']} | {c['cases']} | {c['max_error']:.3e} | {c['tolerance']:.0e} | "
                         f"{'PASS' if c['passed'] else 'FAIL'} |")
        return "\n".join(lines) + "\n"

    def csv_(p):
        rows = ["name,cases,max_error,tolerance,passed"]
        rows += [f"{c['name']},{c['cases']},{c['max_error']:.3e},{c['tolerance']:.0e},{int(c['passed'])}"
                 for c in p["checks"]]
        return "\n".join(rows) + "\n"

    _emit(args, payload, md, csv_)
    if not all(c.passed for c in checks):
        raise CliError("oracle agreement check failed", EXIT_INVALID)


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--project", help="project JSON file")
    common.add_argument("--format", choices=("md", "json", "csv"), default="md")
    common.add_argument("--out", help="write output to this file instead of stdout")

    options = argparse.ArgumentParser(add_help=False)
    options.add_argument("--gating", type=_on_off, metavar="on|off",
                         help="restrict parallel propagation to significant edges")
    options.add_argument("--within-block", dest="within_block", type=_on_off, metavar="on|off",
                         help="let effort propagate to higher sublevels of the same block")

    selection = argparse.ArgumentParser(add_help=False)
    selection.add_argument("--block", action="append", choices=[b.value for b in heap.BlockRule],
                           type=lambda s: heap._parse_rule(heap.BlockRule, s).value)
    selection.add_argument("--unit", action="append", choices=[u.value for u in heap.UnitRule],
                           type=lambda s: heap._parse_rule(heap.UnitRule, s).value)
    selection.add_argument("--path", action="append", type=int, help="1-based strategic path index")

    parser = argparse.ArgumentParser(prog="effortprop", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("normalize", parents=[common], help="row-normalize a direct influence matrix")
    p.add_argument("matrix", nargs="?", help="matrix CSV (factor,<id>,... header); default: --project")
    p.set_defaults(func=cmd_normalize)

    p = sub.add_parser("trm", parents=[common], help="total relation matrix, threshold and significant edges")
    p.add_argument("--scale", type=_scale, help="rescaling before closure (number or method)")
    p.set_defaults(func=cmd_trm)

    p = sub.add_parser("classify", parents=[common], help="directly accessible vs latent factors")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("paths", parents=[common], help="list strategic paths")
    p.set_defaults(func=cmd_paths)

    p = sub.add_parser("evaluate", parents=[common, options, selection], help="evaluate one strategy")
    p.add_argument("--strategy", choices=("u-peap", "w-peap", "heap"), required=True)
    p.add_argument("--scale", type=_scale, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", parents=[common, options, selection], help="compare strategies")
    p.add_argument("--strategy", choices=("all", "peap", "heap", "u-peap", "w-peap"), default="all")
    p.add_argument("--scale", type=_scale, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("verify", parents=[common], help="run the oracle agreement checks")
    p.add_argument("--cases", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except CliError as exc:
        print(f"effortprop: {exc}", file=sys.stderr)
        return exc.code
    except ProjectFormatError as exc:
        print(f"effortprop: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ProjectValidationError as exc:
        print("effortprop: validation failed:", file=sys.stderr)
        for v in exc.violations:
            print(f"  - {v}", file=sys.stderr)
        return EXIT_INVALID
    except (EffortPropError, ValueError) as exc:
        print(f"effortprop: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
