"""Hierarchical effort assignment and propagation.

Effort is deployed block by block, bottom-up.  A strategic path picks a
nonempty subset of factors from every sublevel; effort given to a factor
reaches the goal directly and, through ascending influences, via the path
factors above it.

Propagability bookkeeping per path factor F:

* ``d'(F->j)``  ascending influence of F on a higher path factor j, summed
  over every chain through path factors in blocks strictly between them;
* ``UEPF(F) = nSig(F) + sum_{j above F} d'(F->j) * UEPF(j)``, the share of a
  unit of effort on F that ends at the goal;
* ``IDEPF(F) = UEPF(F) - nSig(F)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Mapping

from .model import (
    EffortAssignment,
    EffortPropError,
    Factor,
    FactorSystem,
    InfluenceMatrix,
    Level,
    SignificanceVector,
    StrategyResult,
    StrategyTag,
)


class BlockRule(str, Enum):
    UNI = "Uni"
    BSR = "BSR"
    BEPR = "BEPR"


class UnitRule(str, Enum):
    UNI = "Uni"
    NSIG = "nSig"
    UEPF = "UEPF"


def _parse_rule(enum_cls, text):
    if isinstance(text, enum_cls):
        return text
    for member in enum_cls:
        if member.value.lower() == str(text).lower():
            return member
    raise ValueError(f"unknown {enum_cls.__name__} {text!r}; expected one of {[m.value for m in enum_cls]}")


@dataclass(frozen=True)
class HeapHeuristic:
    block: BlockRule = BlockRule.UNI
    unit: UnitRule = UnitRule.UNI

    def __post_init__(self):
        object.__setattr__(self, "block", _parse_rule(BlockRule, self.block))
        object.__setattr__(self, "unit", _parse_rule(UnitRule, self.unit))

    @property
    def label(self) -> str:
        return f"({self.block.value}, {self.unit.value})"

    @property
    def needs_uepf(self) -> bool:
        return self.block is BlockRule.BEPR or self.unit is UnitRule.UEPF

    @classmethod
    def grid(cls) -> list["HeapHeuristic"]:
        """All nine (block, unit) pairs, block rule varying slowest."""
        return [cls(b, u) for b in BlockRule for u in UnitRule]


NAMED_HEURISTICS = (
    HeapHeuristic("Uni", "Uni"),
    HeapHeuristic("Uni", "nSig"),
    HeapHeuristic("BSR", "Uni"),
    HeapHeuristic("BSR", "nSig"),
)


@dataclass(frozen=True)
class StrategicPath:
    """One choice of factor subsets, one per sublevel, bottom-up."""

    index: int
    selection: tuple[tuple[Level, tuple[str, ...]], ...]
    factors: tuple[Factor, ...]

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(f.id for f in self.factors)

    def factor(self, fid: str) -> Factor:
        for f in self.factors:
            if f.id == fid:
                return f
        raise KeyError(fid)

    @property
    def blocks(self) -> list[tuple[int, tuple[str, ...]]]:
        out: dict[int, list[str]] = {}
        for f in self.factors:
            out.setdefault(f.block, []).append(f.id)
        return [(b, tuple(ids)) for b, ids in sorted(out.items())]

    @property
    def accessible(self) -> tuple[str, ...]:
        return tuple(f.id for f in self.factors if f.accessible)

    @property
    def effective_blocks(self) -> list[int]:
        return sorted({f.block for f in self.factors if f.accessible})

    def block_members(self, block: int, accessible_only: bool = False) -> list[str]:
        return [f.id for f in self.factors
                if f.block == block and (f.accessible or not accessible_only)]


class HeapError(EffortPropError):
    pass


def _subsets(items: tuple[str, ...]) -> Iterator[tuple[str, ...]]:
    for mask in range(1, 1 << len(items)):
        yield tuple(x for k, x in enumerate(items) if mask >> k & 1)


def enumerate_paths(system: FactorSystem) -> list[StrategicPath]:
    """Every strategic path, numbered from 1.

    Subsets within a sublevel are ordered by ascending bitmask over the
    factors' input order; the product runs over sublevels bottom-up, the top
    sublevel varying fastest.  Sublevels left empty by exclusions are skipped.
    """
    by_level: dict[Level, list[str]] = {}
    for f in system.factors:
        if not f.excluded:
            by_level.setdefault(f.level, []).append(f.id)
    levels = sorted(by_level)
    choices = [list(_subsets(tuple(by_level[lv]))) for lv in levels]
    paths = []
    for k, combo in enumerate(itertools.product(*choices), start=1):
        selection = tuple(zip(levels, combo))
        chosen = {fid for _, ids in selection for fid in ids}
        members = sorted((f for f in system.factors if f.id in chosen),
                         key=lambda f: (f.level, system.index(f.id)))
        paths.append(StrategicPath(k, selection, tuple(members)))
    return paths


def effective_blocks(path: StrategicPath) -> list[int]:
    blocks = path.effective_blocks
    if not blocks:
        raise HeapError(f"path {path.index} has no block with an accessible factor")
    return blocks


def upper_factors(path: StrategicPath, fid: str, within_block: bool = False) -> list[str]:
    """Path factors that receive propagation from ``fid`` at a later timestep."""
    me = path.factor(fid)
    return [f.id for f in path.factors
            if f.block > me.block or (within_block and f.block == me.block and f.sublevel > me.sublevel)]


@dataclass(frozen=True)
class AscendingInfluence:
    dprime: Mapping[tuple[str, str], float]

    def __getitem__(self, pair: tuple[str, str]) -> float:
        return self.dprime[pair]


def ascending_influence(path: StrategicPath, ndim: InfluenceMatrix,
                        within_block: bool = False) -> AscendingInfluence:
    """d' for every (F, j) with j in the upper set of F."""
    dprime: dict[tuple[str, str], float] = {}
    for f in sorted(path.factors, key=lambda x: -x.block):
        for j in upper_factors(path, f.id, within_block):
            hi = path.factor(j).block
            between = [k.id for k in path.factors if f.block < k.block < hi]
            terms = [ndim.d(f.id, k) * dprime[(k, j)] for k in between]
            dprime[(f.id, j)] = ndim.d(f.id, j) + math.fsum(terms)
    return AscendingInfluence(dprime)


def uepf(path: StrategicPath, dprime, nsig: SignificanceVector | Mapping[str, float],
         within_block: bool = False) -> dict[str, float]:
    """Unit effort propagation factor of every path factor, computed top-down."""
    dp = dprime.dprime if isinstance(dprime, AscendingInfluence) else dprime
    out: dict[str, float] = {}
    for f in sorted(path.factors, key=lambda x: x.level, reverse=True):
        ups = upper_factors(path, f.id, within_block)
        out[f.id] = nsig[f.id] + math.fsum(dp[(f.id, j)] * out[j] for j in ups)
    return {fid: out[fid] for fid in path.ids}


def idepf(uepf_values: Mapping[str, float], nsig) -> dict[str, float]:
    return {fid: u - nsig[fid] for fid, u in uepf_values.items()}


def block_shares(path: StrategicPath, rule: BlockRule | str, nsig,
                 uepf_values: Mapping[str, float] | None = None) -> dict[int, float]:
    """Fraction of the total effort given to each effective block."""
    rule = _parse_rule(BlockRule, rule)
    blocks = effective_blocks(path)
    if rule is BlockRule.UNI:
        return {b: 1.0 / len(blocks) for b in blocks}
    if rule is BlockRule.BSR:
        weights = {b: math.fsum(nsig[f] for f in path.block_members(b, True)) for b in blocks}
    else:
        if uepf_values is None:
            raise HeapError("BEPR block shares need UEPF values")
        weights = {}
        for b in blocks:
            members = path.block_members(b, True)
            weights[b] = math.fsum(uepf_values[f] for f in members) / len(members)
    denom = math.fsum(weights.values())
    if not denom > 0:
        raise HeapError(f"{rule.value} weights over the effective blocks sum to zero")
    return {b: w / denom for b, w in weights.items()}


def block_significance_ratio(path: StrategicPath, nsig) -> dict[int, float]:
    return block_shares(path, BlockRule.BSR, nsig)


def unit_shares(path: StrategicPath, block: int, rule: UnitRule | str, nsig,
                uepf_values: Mapping[str, float] | None = None) -> dict[str, float]:
    rule = _parse_rule(UnitRule, rule)
    members = path.block_members(block, True)
    if rule is UnitRule.UNI:
        return {f: 1.0 / len(members) for f in members}
    if rule is UnitRule.NSIG:
        weights = {f: float(nsig[f]) for f in members}
    else:
        if uepf_values is None:
            raise HeapError("UEPF unit shares need UEPF values")
        weights = {f: uepf_values[f] for f in members}
    denom = math.fsum(weights.values())
    if not denom > 0:
        raise HeapError(f"{rule.value} weights in block {block} sum to zero")
    return {f: w / denom for f, w in weights.items()}


def heap_assignment(path: StrategicPath, heuristic: HeapHeuristic, nsig,
                    uepf_values: Mapping[str, float] | None = None,
                    total: float = 1.0) -> EffortAssignment:
    if heuristic.needs_uepf and uepf_values is None:
        raise HeapError(f"heuristic {heuristic.label} needs UEPF values")
    efforts: dict[str, float] = {}
    for b, share in block_shares(path, heuristic.block, nsig, uepf_values).items():
        for f, unit in unit_shares(path, b, heuristic.unit, nsig, uepf_values).items():
            efforts[f] = total * share * unit
    return EffortAssignment(efforts, total)


def block_effort_propagation(path: StrategicPath, assignment: EffortAssignment,
                             uepf_values: Mapping[str, float]) -> dict[int, float]:
    out = {}
    for b, members in path.blocks:
        out[b] = math.fsum(assignment.get(f) * uepf_values[f] for f in members)
    return out


def heap_total_epi(path: StrategicPath, assignment: EffortAssignment,
                   uepf_values: Mapping[str, float]) -> float:
    bep = block_effort_propagation(path, assignment, uepf_values)
    return math.fsum(bep[b] for b in effective_blocks(path))


def arriving_effort(path: StrategicPath, assignment: EffortAssignment, dprime,
                    within_block: bool = False) -> dict[str, float]:
    """Assigned plus propagated effort reaching each path factor."""
    dp = dprime.dprime if isinstance(dprime, AscendingInfluence) else dprime
    arrive = {f.id: assignment.get(f.id) for f in path.factors}
    for f in sorted(path.factors, key=lambda x: x.level):
        for j in upper_factors(path, f.id, within_block):
            arrive[j] += arrive[f.id] * dp[(f.id, j)]
    return arrive


def evaluate_heap(
    system: FactorSystem,
    nsig: SignificanceVector,
    ndim: InfluenceMatrix,
    heuristic: HeapHeuristic,
    path: StrategicPath | int = 1,
    within_block: bool = False,
    total: float = 1.0,
) -> StrategyResult:
    if isinstance(path, int):
        paths = enumerate_paths(system)
        if not 1 <= path <= len(paths):
            raise HeapError(f"path {path} out of range 1..{len(paths)}")
        path = paths[path - 1]
    dp = ascending_influence(path, ndim, within_block)
    u = uepf(path, dp, nsig, within_block)
    assignment = heap_assignment(path, heuristic, nsig, u, total)
    arrive = arriving_effort(path, assignment, dp, within_block)
    latent = {f.id: arrive[f.id] for f in path.factors if not f.accessible}
    tag = StrategyTag("HEAP", heuristic.block.value, heuristic.unit.value, path.index)
    return StrategyResult(tag, assignment, latent, heap_total_epi(path, assignment, u),
                          uepf=u, members=path.ids)
