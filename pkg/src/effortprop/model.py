"""Domain types shared by the propagation engines.

A decision system is a list of factors arranged in a layered hierarchy
(blocks subdivided into sublevels) plus an implicit goal attribute.  Each
factor couples to the goal through its normalized significance and to the
other factors through the normalized direct influence matrix.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

SUM_TOL = 1e-6
ROW_TOL = 1e-9
EFFORT_TOL = 1e-9


class EffortPropError(Exception):
    """Base class for all library errors."""


class NoActionableFactorsError(EffortPropError):
    """Raised when no factor can receive effort directly."""


class UnknownInfluenceError(EffortPropError):
    """Raised when a computation needs an influence entry the data does not provide."""


# --------------------------------------------------------------------------
# Hierarchy levels
# --------------------------------------------------------------------------

_ROMAN = {"I": 1, "V": 5, "X": 10, "L": 50, "C": 100, "D": 500, "M": 1000}
_ROMAN_PAIRS = [
    (1000, "M"), (900, "CM"), (500, "D"), (400, "CD"), (100, "C"), (90, "XC"),
    (50, "L"), (40, "XL"), (10, "X"), (9, "IX"), (5, "V"), (4, "IV"), (1, "I"),
]
_LABEL_RE = re.compile(r"^\s*([IVXLCDM]+)\s*(?:-\s*([A-Z]+))?\s*$", re.IGNORECASE)


def roman_to_int(text: str) -> int:
    text = text.upper()
    total = 0
    for a, b in zip(text, text[1:] + " "):
        value = _ROMAN[a]
        total += -value if b != " " and _ROMAN[b] > value else value
    if int_to_roman(total) != text:
        raise ValueError(f"not a canonical roman numeral: {text!r}")
    return total


def int_to_roman(value: int) -> str:
    if value < 1:
        raise ValueError("roman numerals start at 1")
    out = []
    for n, sym in _ROMAN_PAIRS:
        while value >= n:
            out.append(sym)
            value -= n
    return "".join(out)


def _letters_to_int(letters: str) -> int:
    n = 0
    for ch in letters.upper():
        n = n * 26 + (ord(ch) - ord("A") + 1)
    return n


def _int_to_letters(n: int) -> str:
    out = ""
    while n > 0:
        n, rem = divmod(n - 1, 26)
        out = chr(ord("A") + rem) + out
    return out


@dataclass(frozen=True, order=True)
class Level:
    """Hierarchy position; ordering is lexicographic (block first)."""

    block: int
    sublevel: int = 1

    def __post_init__(self):
        if int(self.block) != self.block or int(self.sublevel) != self.sublevel:
            raise ValueError("block and sublevel must be integers")
        if self.block < 1 or self.sublevel < 1:
            raise ValueError(f"block and sublevel must be >= 1, got {self.block}, {self.sublevel}")

    @classmethod
    def parse(cls, label: str) -> "Level":
        """Parse labels like ``"II-A"`` or ``"VII"`` (sublevel defaults to 1)."""
        m = _LABEL_RE.match(label)
        if not m:
            raise ValueError(f"unrecognised level label: {label!r}")
        block = roman_to_int(m.group(1))
        sub = _letters_to_int(m.group(2)) if m.group(2) else 1
        return cls(block, sub)

    def label(self, with_sublevel: bool = True) -> str:
        head = int_to_roman(self.block)
        return f"{head}-{_int_to_letters(self.sublevel)}" if with_sublevel else head


# --------------------------------------------------------------------------
# Factors and systems
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Factor:
    id: str
    name: str
    accessible: bool
    level: Level
    excluded: bool = False

    @property
    def block(self) -> int:
        return self.level.block

    @property
    def sublevel(self) -> int:
        return self.level.sublevel


@dataclass(frozen=True)
class FactorSystem:
    """Ordered factor list plus the name of the goal attribute.

    The goal is a sink outside the factor list; it never appears in the
    influence matrices.
    """

    factors: tuple[Factor, ...]
    goal_name: str = "Goal"

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        seen = set()
        for f in self.factors:
            if f.id in seen:
                raise ValueError(f"duplicate factor id {f.id!r}")
            seen.add(f.id)

    def __len__(self) -> int:
        return len(self.factors)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(f.id for f in self.factors)

    @property
    def eligible(self) -> tuple[Factor, ...]:
        return tuple(f for f in self.factors if not f.excluded)

    def factor(self, fid: str) -> Factor:
        for f in self.factors:
            if f.id == fid:
                return f
        raise KeyError(fid)

    def index(self, fid: str) -> int:
        return self.ids.index(fid)

    def multi_sublevel_blocks(self) -> set[int]:
        """Blocks that declare more than one sublevel (labels then carry a letter)."""
        subs: dict[int, set[int]] = {}
        for f in self.factors:
            subs.setdefault(f.block, set()).add(f.sublevel)
        return {b for b, s in subs.items() if len(s) > 1 or s != {1}}

    def level_label(self, fid: str) -> str:
        f = self.factor(fid)
        return f.level.label(f.block in self.multi_sublevel_blocks())


@dataclass(frozen=True)
class SignificanceVector:
    """Normalized significance per factor, optionally with raw significances."""

    values: Mapping[str, float]
    raw: Mapping[str, float] | None = None

    def __post_init__(self):
        object.__setattr__(self, "values", MappingProxyType({k: float(v) for k, v in self.values.items()}))
        if self.raw is not None:
            object.__setattr__(self, "raw", MappingProxyType({k: float(v) for k, v in self.raw.items()}))

    def __getitem__(self, fid: str) -> float:
        return self.values[fid]

    def __contains__(self, fid: object) -> bool:
        return fid in self.values

    def get(self, fid: str, default: float | None = None) -> float | None:
        return self.values.get(fid, default)


def _frozen_array(entries, dtype=float) -> np.ndarray:
    arr = np.array(entries, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class InfluenceMatrix:
    """Square influence matrix indexed by factor id.

    ``NaN`` marks an entry the data does not provide (partial matrices).
    Reading such an entry through :meth:`d` raises :class:`UnknownInfluenceError`.
    """

    ids: tuple[str, ...]
    entries: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "ids", tuple(self.ids))
        arr = _frozen_array(self.entries)
        n = len(self.ids)
        if arr.shape != (n, n):
            raise ValueError(f"influence matrix shape {arr.shape} does not match {n} factor ids")
        object.__setattr__(self, "entries", arr)
        object.__setattr__(self, "_pos", {fid: k for k, fid in enumerate(self.ids)})

    @property
    def is_partial(self) -> bool:
        return bool(np.isnan(self.entries).any())

    def pos(self, fid: str) -> int:
        return self._pos[fid]

    def d(self, src: str, dst: str) -> float:
        value = self.entries[self._pos[src], self._pos[dst]]
        if math.isnan(value):
            raise UnknownInfluenceError(f"influence {src} -> {dst} is not known")
        return float(value)

    def block(self, rows: Sequence[str], cols: Sequence[str]) -> np.ndarray:
        """Sub-matrix for the given row/column ids; raises on unknown entries."""
        r = [self._pos[i] for i in rows]
        c = [self._pos[j] for j in cols]
        sub = self.entries[np.ix_(r, c)] if r and c else np.zeros((len(r), len(c)))
        if np.isnan(sub).any():
            a, b = np.argwhere(np.isnan(sub))[0]
            raise UnknownInfluenceError(f"influence {rows[a]} -> {cols[b]} is not known")
        return sub

    def restricted(self, ids: Iterable[str]) -> "InfluenceMatrix":
        ids = tuple(ids)
        k = [self._pos[i] for i in ids]
        return type(self)(ids, self.entries[np.ix_(k, k)])


class DirectInfluenceMatrix(InfluenceMatrix):
    """Aggregated direct influences D(i->j)."""


class NormalizedInfluenceMatrix(InfluenceMatrix):
    """Row-normalized direct influences d(i->j)."""


@dataclass(frozen=True)
class EffortAssignment:
    efforts: Mapping[str, float]
    total: float = 1.0

    def __post_init__(self):
        efforts = {k: float(v) for k, v in self.efforts.items()}
        for k, v in efforts.items():
            if not v >= 0:
                raise ValueError(f"negative effort for {k}: {v}")
        s = math.fsum(efforts.values())
        if abs(s - self.total) > EFFORT_TOL * max(1.0, abs(self.total)):
            raise ValueError(f"efforts sum to {s}, expected {self.total}")
        object.__setattr__(self, "efforts", MappingProxyType(efforts))

    def __getitem__(self, fid: str) -> float:
        return self.efforts[fid]

    def get(self, fid: str, default: float = 0.0) -> float:
        return self.efforts.get(fid, default)

    def ids(self) -> tuple[str, ...]:
        return tuple(self.efforts)

    def scaled(self, c: float) -> "EffortAssignment":
        return EffortAssignment({k: c * v for k, v in self.efforts.items()}, c * self.total)


@dataclass(frozen=True)
class StrategyTag:
    family: str  # "PEAP" or "HEAP"
    block: str | None = None
    unit: str | None = None
    path: int | None = None

    @property
    def heuristic_label(self) -> str:
        if self.block is None:
            return ""
        return f"({self.block}, {self.unit})"

    @property
    def name(self) -> str:
        if self.family == "PEAP":
            return "U-PEAP" if self.unit == "Uni" else "W-PEAP"
        return f"HEAP {self.heuristic_label}"


@dataclass(frozen=True)
class StrategyResult:
    strategy_tag: StrategyTag
    assignment: EffortAssignment
    latent_inflows: Mapping[str, float]
    total_epi: float
    uepf: Mapping[str, float] | None = None
    members: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "latent_inflows", MappingProxyType(dict(self.latent_inflows)))
        if self.uepf is not None:
            object.__setattr__(self, "uepf", MappingProxyType(dict(self.uepf)))
        if not self.total_epi >= 0:
            raise ValueError(f"total_epi must be nonnegative, got {self.total_epi}")


# --------------------------------------------------------------------------
# Operations
# --------------------------------------------------------------------------


def classify_factors(system: FactorSystem) -> tuple[list[str], list[str]]:
    """Split non-excluded factors into (directly accessible, latent), keeping order."""
    daf = [f.id for f in system.factors if not f.excluded and f.accessible]
    ndaf = [f.id for f in system.factors if not f.excluded and not f.accessible]
    if not daf:
        raise NoActionableFactorsError("no actionable factors: every eligible factor is latent")
    return daf, ndaf


def validate_system(
    system: FactorSystem,
    nsig: SignificanceVector | None,
    ndim: InfluenceMatrix | None,
) -> list[str]:
    """Return a list of consistency violations; an empty list means valid.

    Rows of ``ndim`` containing unknown (NaN) entries are skipped by the
    row-normalization check.
    """
    problems: list[str] = []
    ids = system.ids

    if not any(f.accessible and not f.excluded for f in system.factors):
        problems.append("no actionable factors")

    blocks = {f.block for f in system.factors}
    if blocks:
        missing = sorted(set(range(1, max(blocks) + 1)) - blocks)
        if missing:
            problems.append("missing levels: blocks " + ", ".join(int_to_roman(b) for b in missing))

    if nsig is not None:
        unknown = sorted(set(nsig.values) - set(ids))
        if unknown:
            problems.append("significance for unknown factors: " + ", ".join(unknown))
        absent = [f.id for f in system.factors if not f.excluded and f.id not in nsig]
        if absent:
            problems.append("significance missing for factors: " + ", ".join(absent))
        negative = [k for k, v in nsig.values.items() if not v >= 0]
        if negative:
            problems.append("negative significance: " + ", ".join(negative))
        if all(fid in nsig for fid in ids):
            total = math.fsum(nsig.values[fid] for fid in ids)
            if abs(total - 1.0) > SUM_TOL:
                problems.append(f"significance not normalized: sums to {total:.6f}")

    if ndim is not None:
        m = ndim.entries
        if tuple(ndim.ids) != ids:
            problems.append(
                f"dimension mismatch: matrix has {len(ndim.ids)} factors in order "
                f"{list(ndim.ids)[:3]}..., system has {len(ids)}"
            )
        known = m[~np.isnan(m)]
        if (known < 0).any():
            problems.append("negative influence")
        if isinstance(ndim, NormalizedInfluenceMatrix):
            for r, fid in enumerate(ndim.ids):
                row = m[r]
                if np.isnan(row).any():
                    continue
                s = math.fsum(row)
                if s != 0.0 and abs(s - 1.0) > ROW_TOL:
                    problems.append(f"row {fid} not normalized: sums to {s:.12f}")
    return problems
