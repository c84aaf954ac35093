"""Payload builders and text renderings for the command-line tool.

Every command builds one JSON-ready payload; the csv and markdown renderings
are produced from that same payload so they show the same numbers (rounded
to six decimals for display).
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

from . import __version__
from .heap import HeapHeuristic, StrategicPath
from .model import FactorSystem, StrategyResult

FAMILY_ORDER = {"PEAP": 0, "HEAP": 1}
_GRID = [h.label for h in HeapHeuristic.grid()]
PEAP_ORDER = {"Uni": 0, "nSig": 1}


def fmt(x: float) -> str:
    return f"{x:.6f}"


def to_json(payload: Any) -> str:
    return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"


def metadata(project_name: str, options: dict[str, Any]) -> dict[str, Any]:
    return {"project": project_name, "options": options, "tool": "effortprop", "version": __version__}


# --------------------------------------------------------------------------
# Comparison report
# --------------------------------------------------------------------------


@dataclass
class ReportRow:
    family: str
    strategy: str
    heuristic: str
    path: int | None
    total_epi: float

    def sort_key(self):
        if self.family == "PEAP":
            h = PEAP_ORDER["Uni" if self.strategy == "U-PEAP" else "nSig"]
        else:
            h = _GRID.index(self.heuristic)
        return (FAMILY_ORDER[self.family], h, self.path or 0)


@dataclass
class ComparisonReport:
    rows: list[ReportRow]
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.rows = sorted(self.rows, key=ReportRow.sort_key)

    @classmethod
    def from_results(cls, results: Iterable[StrategyResult], meta: dict[str, Any]) -> "ComparisonReport":
        rows = []
        for r in results:
            tag = r.strategy_tag
            rows.append(ReportRow(tag.family, tag.name if tag.family == "PEAP" else STRATEGY_NAMES[tag.heuristic_label],
                                  tag.heuristic_label, tag.path, r.total_epi))
        return cls(rows, meta)

    @property
    def best_index(self) -> int | None:
        if not self.rows:
            return None
        best = max(r.total_epi for r in self.rows)
        return next(k for k, r in enumerate(self.rows) if r.total_epi == best)

    def to_payload(self) -> dict[str, Any]:
        b = self.best_index
        rows = [
            {"family": r.family, "strategy": r.strategy, "heuristic": r.heuristic, "path": r.path,
             "total_epi": r.total_epi, "best": k == b}
            for k, r in enumerate(self.rows)
        ]
        return {"metadata": self.metadata, "rows": rows, "best": rows[b] if b is not None else None}


_BLOCK_WORD = {"Uni": "Uniform block", "BSR": "Weighted block", "BEPR": "Weighted block"}
_UNIT_WORD = {"Uni": "Uniform unit", "nSig": "Weighted unit", "UEPF": "Weighted unit"}
STRATEGY_NAMES = {
    h.label: f"{_BLOCK_WORD[h.block.value]} {_UNIT_WORD[h.unit.value]} - HEAP" for h in HeapHeuristic.grid()
}


def _ordinal(k: int) -> str:
    suffix = "th" if 10 <= k % 100 <= 20 else {1: "st", 2: "nd", 3: "rd"}.get(k % 10, "th")
    return f"{k}{suffix} Strategic Path"


def render_compare_md(payload: dict[str, Any]) -> str:
    lines = ["| Strategies | Heuristics | TotalEPI |", "|---|---|---:|"]
    family = group = None
    for row in payload["rows"]:
        if row["family"] != family:
            family = row["family"]
            title = ("Parallel Effort Assignment & Propagation (PEAP)" if family == "PEAP"
                     else "Hierarchical Effort Assignment & Propagation (HEAP)")
            lines.append(f"| **{title}** | | |")
        mark = " *" if row["best"] else ""
        if family == "PEAP":
            lines.append(f"| {row['strategy']} | | {fmt(row['total_epi'])}{mark} |")
            continue
        if row["heuristic"] != group:
            group = row["heuristic"]
            lines.append(f"| {row['strategy']} | {group} | |")
        lines.append(f"| {_ordinal(row['path'])} | | {fmt(row['total_epi'])}{mark} |")
    best = payload["best"]
    if best is not None:
        where = f" path {best['path']}" if best["path"] else ""
        lines.append("")
        lines.append(f"\\* best: {best['strategy']} {best['heuristic']}{where} = {fmt(best['total_epi'])}".replace("  ", " "))
    return "\n".join(lines) + "\n"


def render_compare_csv(payload: dict[str, Any]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["family", "strategy", "heuristic", "path", "total_epi", "best"])
    for r in payload["rows"]:
        w.writerow([r["family"], r["strategy"], r["heuristic"], r["path"] or "", fmt(r["total_epi"]),
                    int(r["best"])])
    return buf.getvalue()


# --------------------------------------------------------------------------
# Single-strategy results
# --------------------------------------------------------------------------


def result_payload(result: StrategyResult, system: FactorSystem, meta: dict[str, Any]) -> dict[str, Any]:
    tag = result.strategy_tag
    rows = []
    for fid in result.members:
        f = system.factor(fid)
        rows.append({
            "id": fid,
            "level": system.level_label(fid),
            "accessible": f.accessible,
            "effort": result.assignment.get(fid),
            "latent_inflow": result.latent_inflows.get(fid),
            "uepf": result.uepf.get(fid) if result.uepf is not None else None,
        })
    return {
        "metadata": meta,
        "strategy": {"family": tag.family, "name": tag.name, "block": tag.block, "unit": tag.unit,
                     "path": tag.path},
        "total_effort": result.assignment.total,
        "total_epi": result.total_epi,
        "factors": rows,
    }


def _cell(x) -> str:
    return "" if x is None else fmt(x)


def render_result_md(payload: dict[str, Any]) -> str:
    s = payload["strategy"]
    title = s["name"] + (f" path {s['path']}" if s["path"] else "")
    lines = [f"## {title}", "", "| Factor | Level | DAF | Effort | Latent inflow | UEPF |",
             "|---|---|:-:|---:|---:|---:|"]
    for r in payload["factors"]:
        lines.append(f"| {r['id']} | {r['level']} | {'yes' if r['accessible'] else 'no'} | "
                     f"{_cell(r['effort'] if r['accessible'] else None)} | {_cell(r['latent_inflow'])} | "
                     f"{_cell(r['uepf'])} |")
    lines += ["", f"TotalEPI = {fmt(payload['total_epi'])}"]
    return "\n".join(lines) + "\n"


def render_result_csv(payload: dict[str, Any]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["factor", "level", "accessible", "effort", "latent_inflow", "uepf"])
    for r in payload["factors"]:
        w.writerow([r["id"], r["level"], int(r["accessible"]),
                    _cell(r["effort"] if r["accessible"] else None), _cell(r["latent_inflow"]), _cell(r["uepf"])])
    w.writerow(["TotalEPI", "", "", fmt(payload["total_epi"]), "", ""])
    return buf.getvalue()


# --------------------------------------------------------------------------
# Paths, classification, matrices
# --------------------------------------------------------------------------


def paths_payload(paths: Sequence[StrategicPath], system: FactorSystem, meta) -> dict[str, Any]:
    out = []
    for p in paths:
        blocks = []
        for b, ids in p.blocks:
            blocks.append({"block": b, "label": system.level_label(ids[0]).split("-")[0], "members": list(ids),
                           "effective": b in p.effective_blocks})
        out.append({"path": p.index, "members": list(p.ids), "blocks": blocks,
                    "effective_blocks": len(p.effective_blocks)})
    return {"metadata": meta, "paths": out}


def render_paths_md(payload) -> str:
    lines = ["| Path | Block | Members | Effective |", "|---:|---|---|:-:|"]
    for p in payload["paths"]:
        for b in p["blocks"]:
            lines.append(f"| {p['path']} | {b['label']} | {', '.join(b['members'])} | "
                         f"{'yes' if b['effective'] else 'no'} |")
    lines.append("")
    lines.append(f"{len(payload['paths'])} strategic path(s)")
    return "\n".join(lines) + "\n"


def render_paths_csv(payload) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["path", "block", "members", "effective"])
    for p in payload["paths"]:
        for b in p["blocks"]:
            w.writerow([p["path"], b["label"], " ".join(b["members"]), int(b["effective"])])
    return buf.getvalue()


def classify_payload(system: FactorSystem, daf, ndaf, meta) -> dict[str, Any]:
    return {"metadata": meta, "daf": list(daf), "ndaf": list(ndaf),
            "excluded": [f.id for f in system.factors if f.excluded]}


def render_classify_md(payload) -> str:
    lines = ["| Group | Count | Factors |", "|---|---:|---|"]
    for key, title in (("daf", "Directly accessible"), ("ndaf", "Latent"), ("excluded", "Excluded")):
        lines.append(f"| {title} | {len(payload[key])} | {', '.join(payload[key])} |")
    return "\n".join(lines) + "\n"


def render_classify_csv(payload) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["factor", "group"])
    for key in ("daf", "ndaf", "excluded"):
        for fid in payload[key]:
            w.writerow([fid, key])
    return buf.getvalue()


def matrix_md(ids, matrix, title: str = "") -> str:
    lines = [f"## {title}", ""] if title else []
    lines.append("| Factors | " + " | ".join(ids) + " |")
    lines.append("|---|" + "---:|" * len(ids))
    for fid, row in zip(ids, matrix):
        lines.append(f"| {fid} | " + " | ".join("" if v is None else fmt(v) for v in row) + " |")
    return "\n".join(lines) + "\n"


def matrix_csv(ids, matrix) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["factor", *ids])
    for fid, row in zip(ids, matrix):
        w.writerow([fid, *("" if v is None else fmt(v) for v in row)])
    return buf.getvalue()


def render_trm_md(payload) -> str:
    out = matrix_md(payload["ids"], payload["trm"], "Total relation matrix")
    out += f"\nThreshold ({payload['rule']}) = {fmt(payload['threshold'])}\n\n"
    out += "| From | To | t |\n|---|---|---:|\n"
    out += "".join(f"| {e['from']} | {e['to']} | {fmt(e['t'])} |\n" for e in payload["edges"])
    return out


def render_trm_csv(payload) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["from", "to", "t", "threshold"])
    for e in payload["edges"]:
        w.writerow([e["from"], e["to"], fmt(e["t"]), fmt(payload["threshold"])])
    return matrix_csv(payload["ids"], payload["trm"]) + "\n" + buf.getvalue()
