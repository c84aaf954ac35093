"""Expert opinions, influence normalization and project files.

Project files are JSON::

    {
      "name": "...",
      "goal": "...",
      "factors": [{"id", "name", "accessible", "level": {"block", "sublevel"} | "II-A", "excluded"}],
      "nsig": {id: value}, "sig": {id: value},
      "opinions": [...] | "dim": [[...]] | "ndim": [[...]],
      "options": {"expert_weights", "threshold_rule", "peap_gating",
                  "within_block_propagation", "trm_scale"}
    }

Matrices are dense lists of rows in factor order.  ``null`` entries are
allowed in ``ndim`` only and mark influences the source does not publish.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from .model import (
    DirectInfluenceMatrix,
    EffortPropError,
    Factor,
    FactorSystem,
    Level,
    NormalizedInfluenceMatrix,
    SignificanceVector,
    validate_system,
)
from .relations import SCALE_METHODS, THRESHOLD_RULES

SCALE_MIN, SCALE_MAX = 0, 6


class ProjectFormatError(EffortPropError):
    """File cannot be read or does not follow the project schema."""


class ProjectValidationError(EffortPropError):
    """File parses but the data is inconsistent."""

    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


# --------------------------------------------------------------------------
# Opinions
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class OpinionMatrix:
    """One expert's n x n judgements on the 0-6 linguistic scale."""

    entries: np.ndarray
    expert_id: str = ""
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        arr = np.asarray(self.entries)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"opinion matrix {self.expert_id!r} is not square: {arr.shape}")
        if arr.size and not np.all(np.equal(np.mod(arr, 1), 0)):
            raise ValueError(f"opinion matrix {self.expert_id!r} has non-integer entries")
        arr = arr.astype(int)
        if arr.size and (arr.min() < SCALE_MIN or arr.max() > SCALE_MAX):
            raise ValueError(f"opinion matrix {self.expert_id!r} has entries outside {SCALE_MIN}-{SCALE_MAX}")
        if self.labels is not None:
            if len(self.labels) != arr.shape[0]:
                raise ValueError(f"opinion matrix {self.expert_id!r}: {len(self.labels)} labels for {arr.shape[0]} rows")
            object.__setattr__(self, "labels", tuple(self.labels))
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    def reordered(self, ids: Sequence[str]) -> "OpinionMatrix":
        if self.labels is None or tuple(ids) == self.labels:
            return self
        if set(ids) != set(self.labels):
            raise ValueError(f"opinion matrix {self.expert_id!r} labels do not match the factor ids")
        k = [self.labels.index(i) for i in ids]
        return OpinionMatrix(self.entries[np.ix_(k, k)], self.expert_id, tuple(ids))


def crisp(matrix: OpinionMatrix) -> np.ndarray:
    """Default pre-aggregation step: the crisp scale values as floats."""
    return matrix.entries.astype(float)


def aggregate_opinions(
    matrices: Sequence[OpinionMatrix],
    weights: Sequence[float] | None = None,
    ids: Sequence[str] | None = None,
    pre_aggregate: Callable[[OpinionMatrix], np.ndarray] = crisp,
) -> DirectInfluenceMatrix:
    """Entrywise (weighted) arithmetic mean of the experts' matrices.

    ``pre_aggregate`` maps each opinion matrix to real values before
    averaging; swap it to plug in another conversion of the linguistic terms.
    Summation is exactly rounded, so the result does not depend on expert order.
    """
    if not matrices:
        raise ValueError("no opinion matrices to aggregate")
    n = matrices[0].size
    if any(m.size != n for m in matrices):
        raise ValueError("opinion matrices differ in dimension")
    if ids is None:
        ids = matrices[0].labels or tuple(f"F{k + 1}" for k in range(n))
    ids = tuple(ids)
    if len(ids) != n:
        raise ValueError(f"{len(ids)} ids for {n}x{n} opinion matrices")
    matrices = [m.reordered(ids) for m in matrices]
    if weights is None:
        weights = [1.0] * len(matrices)
    if len(weights) != len(matrices):
        raise ValueError(f"{len(weights)} expert weights for {len(matrices)} matrices")
    w = [float(x) for x in weights]
    if any(x < 0 for x in w) or not math.fsum(w) > 0:
        raise ValueError("expert weights must be nonnegative with a positive sum")
    values = [np.asarray(pre_aggregate(m), dtype=float) for m in matrices]
    wsum = math.fsum(w)
    out = np.empty((n, n))
    for r in range(n):
        for c in range(n):
            out[r, c] = math.fsum(wk * v[r, c] for wk, v in zip(w, values)) / wsum
    if (out < 0).any():
        raise ValueError("aggregated influences must be nonnegative")
    return DirectInfluenceMatrix(ids, out)


def normalize_dim(dim) -> NormalizedInfluenceMatrix:
    """Divide every row by its sum; all-zero rows stay zero."""
    if isinstance(dim, DirectInfluenceMatrix) or hasattr(dim, "ids"):
        ids, arr = dim.ids, np.asarray(dim.entries, dtype=float)
    else:
        arr = np.asarray(dim, dtype=float)
        ids = tuple(f"F{k + 1}" for k in range(arr.shape[0]))
    if np.isnan(arr).any():
        raise ValueError("cannot normalize a matrix with unknown entries")
    if (arr < 0).any():
        raise ValueError("direct influences must be nonnegative")
    out = np.zeros_like(arr)
    for r in range(arr.shape[0]):
        s = math.fsum(arr[r])
        if s > 0:
            out[r] = arr[r] / s
    return NormalizedInfluenceMatrix(ids, out)


def read_matrix_csv(path: str | Path) -> tuple[tuple[str, ...], np.ndarray]:
    """Read ``factor,<id1>,...`` / ``<id>,<v>,...`` into (ids, matrix)."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise ValueError(f"{path}: empty matrix file")
    header = [c.strip() for c in rows[0]]
    ids = tuple(header[1:])
    body = rows[1:]
    if len(body) != len(ids):
        raise ValueError(f"{path}: {len(ids)} columns but {len(body)} rows")
    values = []
    for k, row in enumerate(body):
        if row[0].strip() != ids[k]:
            raise ValueError(f"{path}: row {k + 1} label {row[0]!r} does not match column {ids[k]!r}")
        if len(row) != len(ids) + 1:
            raise ValueError(f"{path}: row {row[0]!r} has {len(row) - 1} values, expected {len(ids)}")
        values.append([float(x) for x in row[1:]])
    return ids, np.array(values, dtype=float).reshape(len(ids), len(ids))


def read_opinion_csv(path: str | Path, expert_id: str | None = None) -> OpinionMatrix:
    ids, arr = read_matrix_csv(path)
    return OpinionMatrix(arr, expert_id or Path(path).stem, ids)


def write_matrix_csv(path_or_file, ids: Sequence[str], matrix, fmt: Callable[[float], str] = repr) -> None:
    def _write(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["factor", *ids])
        for fid, row in zip(ids, np.asarray(matrix)):
            w.writerow([fid, *(fmt(x.item() if hasattr(x, "item") else x) for x in row)])

    if hasattr(path_or_file, "write"):
        _write(path_or_file)
    else:
        with open(path_or_file, "w", newline="", encoding="utf-8") as fh:
            _write(fh)


def write_opinion_csv(path, matrix: OpinionMatrix) -> None:
    ids = matrix.labels or tuple(f"F{k + 1}" for k in range(matrix.size))
    write_matrix_csv(path, ids, matrix.entries, fmt=lambda x: str(int(x)))


# --------------------------------------------------------------------------
# Project files
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ProjectOptions:
    expert_weights: tuple[float, ...] | None = None
    threshold_rule: str = "mean_half_std"
    peap_gating: bool = False
    within_block_propagation: bool = False
    trm_scale: str | float = "max_row_col_sum"

    def __post_init__(self):
        if self.threshold_rule not in THRESHOLD_RULES:
            raise ValueError(f"threshold_rule must be one of {THRESHOLD_RULES}")
        if isinstance(self.trm_scale, str) and self.trm_scale not in SCALE_METHODS:
            raise ValueError(f"trm_scale must be a number or one of {SCALE_METHODS}")
        if self.expert_weights is not None:
            object.__setattr__(self, "expert_weights", tuple(float(x) for x in self.expert_weights))

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "threshold_rule": self.threshold_rule,
            "peap_gating": self.peap_gating,
            "within_block_propagation": self.within_block_propagation,
            "trm_scale": self.trm_scale,
        }
        if self.expert_weights is not None:
            out["expert_weights"] = list(self.expert_weights)
        return out


@dataclass(frozen=True)
class Project:
    system: FactorSystem
    nsig: SignificanceVector
    ndim: NormalizedInfluenceMatrix
    options: ProjectOptions = field(default_factory=ProjectOptions)
    dim: DirectInfluenceMatrix | None = None
    opinions: tuple[OpinionMatrix, ...] | None = None
    source: str = "ndim"  # which influence source the file carried
    name: str = ""
    reference: Mapping[str, Any] | None = None

    def __iter__(self):
        # (system, nsig, ndim, options) unpacking
        return iter((self.system, self.nsig, self.ndim, self.options))

    def with_options(self, **changes) -> "Project":
        return replace(self, options=replace(self.options, **changes))

    @property
    def closure_input(self):
        """Matrix used for the total relation matrix: the DIM when known, else the N-DIM."""
        return self.dim if self.dim is not None else self.ndim


def _fail(msg: str):
    raise ProjectFormatError(msg)


def _parse_level(raw, fid) -> Level:
    try:
        if isinstance(raw, str):
            return Level.parse(raw)
        if isinstance(raw, Mapping):
            return Level(int(raw["block"]), int(raw.get("sublevel", 1)))
    except (KeyError, ValueError, TypeError) as exc:
        _fail(f"factor {fid!r}: bad level {raw!r} ({exc})")
    _fail(f"factor {fid!r}: level must be an object or a label like 'II-A'")


def _parse_factors(raw) -> list[Factor]:
    if not isinstance(raw, list) or not raw:
        _fail("'factors' must be a nonempty array")
    out = []
    for k, item in enumerate(raw):
        if not isinstance(item, Mapping) or "id" not in item:
            _fail(f"factor #{k + 1} needs an 'id'")
        fid = str(item["id"])
        if "accessible" not in item or not isinstance(item["accessible"], bool):
            _fail(f"factor {fid!r}: 'accessible' must be true or false")
        if "level" not in item:
            _fail(f"factor {fid!r}: missing 'level'")
        excluded = item.get("excluded", False)
        if not isinstance(excluded, bool):
            _fail(f"factor {fid!r}: 'excluded' must be true or false")
        out.append(Factor(fid, str(item.get("name", fid)), item["accessible"],
                          _parse_level(item["level"], fid), excluded))
    return out


def _parse_number_map(raw, key) -> dict[str, float]:
    if not isinstance(raw, Mapping):
        _fail(f"'{key}' must be an object mapping factor ids to numbers")
    out = {}
    for k, v in raw.items():
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            _fail(f"'{key}': value for {k!r} is not a number")
        out[str(k)] = float(v)
    return out


def _parse_matrix(raw, n, key, allow_null=False) -> np.ndarray:
    if not isinstance(raw, list) or len(raw) != n or any(not isinstance(r, list) or len(r) != n for r in raw):
        _fail(f"'{key}' must be a {n}x{n} array of rows in factor order")
    out = np.empty((n, n))
    for r, row in enumerate(raw):
        for c, v in enumerate(row):
            if v is None and allow_null:
                out[r, c] = math.nan
            elif isinstance(v, bool) or not isinstance(v, (int, float)):
                _fail(f"'{key}': entry ({r + 1},{c + 1}) is not a number")
            else:
                out[r, c] = float(v)
    return out


def _parse_opinions(raw, ids, base: Path) -> list[OpinionMatrix]:
    if not isinstance(raw, list) or not raw:
        _fail("'opinions' must be a nonempty array")
    out = []
    for k, item in enumerate(raw):
        expert = f"expert{k + 1}"
        try:
            if isinstance(item, str) or (isinstance(item, Mapping) and "file" in item):
                ref = item if isinstance(item, str) else item["file"]
                if isinstance(item, Mapping):
                    expert = str(item.get("expert", Path(ref).stem))
                else:
                    expert = Path(ref).stem
                path = Path(ref) if Path(ref).is_absolute() else base / ref
                try:
                    m = read_opinion_csv(path, expert)
                except OSError as exc:
                    _fail(f"opinion file {ref!r}: {exc}")
                out.append(m.reordered(ids))
                continue
            if isinstance(item, Mapping):
                expert = str(item.get("expert", expert))
                item = item.get("matrix")
            matrix = _parse_matrix(item, len(ids), f"opinions[{k}]")
            out.append(OpinionMatrix(matrix, expert, tuple(ids)))
        except ValueError as exc:
            raise ProjectValidationError([f"opinion matrix {expert!r}: {exc}"]) from exc
    return out


def project_from_dict(data: Mapping[str, Any], base: str | Path = ".", name: str = "") -> Project:
    if not isinstance(data, Mapping):
        _fail("project must be a JSON object")
    try:
        factors = _parse_factors(data.get("factors"))
        system = FactorSystem(tuple(factors), str(data.get("goal", "Goal")))
    except ValueError as exc:
        _fail(str(exc))
    ids = system.ids
    if "nsig" not in data:
        _fail("missing required 'nsig' significance vector")
    nsig = SignificanceVector(_parse_number_map(data["nsig"], "nsig"),
                              _parse_number_map(data["sig"], "sig") if "sig" in data else None)

    sources = [k for k in ("opinions", "dim", "ndim") if k in data]
    if len(sources) != 1:
        _fail("exactly one of 'opinions', 'dim', 'ndim' is required as influence source"
              + (f" (found {', '.join(sources)})" if sources else ""))
    source = sources[0]

    raw_opts = data.get("options", {})
    if not isinstance(raw_opts, Mapping):
        _fail("'options' must be an object")
    known = {"expert_weights", "threshold_rule", "peap_gating", "within_block_propagation", "trm_scale"}
    extra = set(raw_opts) - known
    if extra:
        _fail(f"unknown options: {', '.join(sorted(extra))}")
    try:
        options = ProjectOptions(**raw_opts)
    except (TypeError, ValueError) as exc:
        _fail(f"bad options: {exc}")

    opinions = dim = None
    if source == "opinions":
        opinions = _parse_opinions(data["opinions"], ids, Path(base))
        try:
            dim = aggregate_opinions(opinions, options.expert_weights, ids)
        except ValueError as exc:
            raise ProjectValidationError([str(exc)]) from exc
        ndim = normalize_dim(dim)
    elif source == "dim":
        dim = DirectInfluenceMatrix(ids, _parse_matrix(data["dim"], len(ids), "dim"))
        problems = validate_system(system, None, dim)
        if problems:
            raise ProjectValidationError(problems)
        ndim = normalize_dim(dim)
    else:
        ndim = NormalizedInfluenceMatrix(ids, _parse_matrix(data["ndim"], len(ids), "ndim", allow_null=True))

    problems = validate_system(system, nsig, ndim)
    if problems:
        raise ProjectValidationError(problems)
    reference = data.get("reference")
    return Project(system, nsig, ndim, options, dim,
                   tuple(opinions) if opinions is not None else None, source,
                   str(data.get("name", name)), reference)


def load_project(path: str | Path) -> Project:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ProjectFormatError(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProjectFormatError(f"{path}: invalid JSON: {exc}") from exc
    return project_from_dict(data, path.parent, path.stem)


def _matrix_json(arr: np.ndarray) -> list[list[float | None]]:
    return [[None if math.isnan(x) else float(x) for x in row] for row in arr]


def project_to_dict(project: Project) -> dict[str, Any]:
    system = project.system
    out: dict[str, Any] = {}
    if project.name:
        out["name"] = project.name
    out["goal"] = system.goal_name
    out["factors"] = [
        {"id": f.id, "name": f.name, "accessible": f.accessible,
         "level": {"block": f.block, "sublevel": f.sublevel}, "excluded": f.excluded}
        for f in system.factors
    ]
    out["nsig"] = dict(project.nsig.values)
    if project.nsig.raw is not None:
        out["sig"] = dict(project.nsig.raw)
    if project.source == "opinions" and project.opinions is not None:
        out["opinions"] = [{"expert": m.expert_id, "matrix": m.entries.tolist()} for m in project.opinions]
    elif project.source == "dim" and project.dim is not None:
        out["dim"] = _matrix_json(project.dim.entries)
    else:
        out["ndim"] = _matrix_json(project.ndim.entries)
    out["options"] = project.options.to_json()
    if project.reference is not None:
        out["reference"] = project.reference
    return out


def save_project(project: Project, path: str | Path) -> None:
    Path(path).write_text(json.dumps(project_to_dict(project), indent=2) + "\n", encoding="utf-8")
