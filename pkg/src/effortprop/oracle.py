"""Brute-force checks for the propagation engines.

Nothing here calls into :mod:`effortprop.heap` or :mod:`effortprop.peap`;
hop eligibility, chain enumeration and the goal accumulation are written out
again from the definitions so the test suite compares two independent routes.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping


from .model import EffortAssignment, EffortPropError, FactorSystem, InfluenceMatrix

MAX_CHAIN_FACTORS = 12
MAX_GRID_DAF = 4
MAX_GRID_POINTS = 200_000


class OracleBoundsError(EffortPropError):
    """Input too large for exhaustive enumeration."""


@dataclass
class SimulationTrace:
    steps: list[dict[str, float]] = field(default_factory=list)
    goal: list[float] = field(default_factory=list)

    @property
    def goal_accumulator(self) -> float:
        return self.goal[-1] if self.goal else 0.0


def _members(path):
    return list(path.factors)


def chain_sum_dprime(i: str, j: str, path, ndim: InfluenceMatrix) -> float:
    """Sum over every chain i -> k1 -> ... -> j of the product of direct influences.

    Intermediates are path factors whose blocks lie strictly between those of
    i and j, visited in strictly increasing block order.  Enumerates every
    subset of candidates, so the cost is exponential in the path size.
    """
    members = _members(path)
    if len(members) > MAX_CHAIN_FACTORS:
        raise OracleBoundsError(f"chain enumeration limited to {MAX_CHAIN_FACTORS} factors")
    block = {f.id: f.block for f in members}
    lo, hi = block[i], block[j]
    cands = [f.id for f in members if lo < f.block < hi]
    total = []
    for mask in range(1 << len(cands)):
        chain = [c for k, c in enumerate(cands) if mask >> k & 1]
        blocks = [block[c] for c in chain]
        if len(set(blocks)) != len(blocks):
            continue
        chain.sort(key=lambda c: block[c])
        nodes = [i] + chain + [j]
        prod = 1.0
        for a, b in zip(nodes, nodes[1:]):
            prod *= ndim.d(a, b)
        total.append(prod)
    return math.fsum(total)


def _heap_runner(path, ndim, nsig, within_block):
    members = _members(path)
    stage = {f.id: (f.block, f.sublevel if within_block else 0) for f in members}
    hops = {}
    for a in members:
        for b in members:
            if stage[b.id] > stage[a.id]:
                hops[(a.id, b.id)] = chain_sum_dprime(a.id, b.id, path, ndim)
    order = sorted(set(stage.values()))

    def run(efforts: Mapping[str, float]) -> SimulationTrace:
        trace = SimulationTrace()
        buffer = {f.id: 0.0 for f in members}
        goal = 0.0
        for t in order:
            here = [f.id for f in members if stage[f.id] == t]
            arrived = {}
            for fid in here:
                a = efforts.get(fid, 0.0) + buffer[fid]
                arrived[fid] = a
                goal += a * nsig[fid]
                for (src, dst), w in hops.items():
                    if src == fid:
                        buffer[dst] += a * w
            trace.steps.append(arrived)
            trace.goal.append(goal)
        return trace

    return run


def _peap_runner(system: FactorSystem, ndim, nsig, significant):
    daf = [f.id for f in system.factors if f.accessible and not f.excluded]
    ndaf = [f.id for f in system.factors if not f.accessible and not f.excluded]
    coef = {}
    for a in daf:
        for b in ndaf:
            ok = True
            if significant is not None:
                mask = getattr(significant, "significant", significant)
                ok = bool(mask[ndim.pos(a), ndim.pos(b)])
            coef[(a, b)] = ndim.d(a, b) if ok else 0.0

    def run(efforts: Mapping[str, float]) -> SimulationTrace:
        trace = SimulationTrace()
        goal = 0.0
        inbox = {b: 0.0 for b in ndaf}
        step0 = {}
        for a in daf:
            e = efforts.get(a, 0.0)
            step0[a] = e
            goal += e * nsig[a]
            for b in ndaf:
                inbox[b] += e * coef[(a, b)]
        trace.steps.append(step0)
        trace.goal.append(goal)
        for b in ndaf:
            goal += inbox[b] * nsig[b]
        trace.steps.append(dict(inbox))
        trace.goal.append(goal)
        return trace

    return run


def _runner(structure, ndim, nsig, within_block=False, significant=None) -> Callable:
    if isinstance(structure, FactorSystem):
        return _peap_runner(structure, ndim, nsig, significant)
    return _heap_runner(structure, ndim, nsig, within_block)


def trace_forward(structure, assignment: EffortAssignment | Mapping[str, float], ndim, nsig,
                  within_block: bool = False, significant=None) -> SimulationTrace:
    """Step through the timesteps and record arriving effort and the goal total.

    ``structure`` is a FactorSystem (parallel strategy: accessible factors at
    step 0, latent factors at step 1) or a strategic path (one step per
    block, or per sublevel when ``within_block``).
    """
    efforts = assignment.efforts if isinstance(assignment, EffortAssignment) else assignment
    return _runner(structure, ndim, nsig, within_block, significant)(efforts)


def simulate_forward(structure, assignment, ndim, nsig, within_block: bool = False,
                     significant=None) -> float:
    return trace_forward(structure, assignment, ndim, nsig, within_block, significant).goal_accumulator


def _structure_daf(structure) -> list[str]:
    if isinstance(structure, FactorSystem):
        return [f.id for f in structure.factors if f.accessible and not f.excluded]
    return [f.id for f in _members(structure) if f.accessible]


def _compositions(steps: int, parts: int):
    # stars and bars over the simplex grid
    for bars in itertools.combinations(range(steps + parts - 1), parts - 1):
        prev = -1
        out = []
        for b in bars:
            out.append(b - prev - 1)
            prev = b
        out.append(steps + parts - 1 - prev - 1)
        yield out


def grid_search_epi(structure, ndim, nsig, resolution: float = 0.05, within_block: bool = False,
                    significant=None, total: float = 1.0) -> tuple[EffortAssignment, float]:
    """Exhaustive search over effort vectors on a simplex grid.

    Returns the first best grid point in enumeration order.
    """
    daf = _structure_daf(structure)
    if not daf:
        raise OracleBoundsError("structure has no accessible factor")
    if len(daf) > MAX_GRID_DAF:
        raise OracleBoundsError(f"grid search limited to {MAX_GRID_DAF} accessible factors")
    if not 0 < resolution <= 0.05:
        raise OracleBoundsError("resolution must lie in (0, 0.05]")
    steps = round(1.0 / resolution)
    if abs(steps * resolution - 1.0) > 1e-9:
        raise OracleBoundsError("1/resolution must be an integer")
    if math.comb(steps + len(daf) - 1, len(daf) - 1) > MAX_GRID_POINTS:
        raise OracleBoundsError("grid too large")
    run = _runner(structure, ndim, nsig, within_block, significant)
    best, best_val = None, -math.inf
    for comp in _compositions(steps, len(daf)):
        efforts = {f: total * c / steps for f, c in zip(daf, comp)}
        val = run(efforts).goal_accumulator
        if val > best_val:
            best, best_val = efforts, val
    # exact total for the returned assignment
    fixed = dict(best)
    fixed[daf[-1]] = max(0.0, total - math.fsum(v for k, v in best.items() if k != daf[-1]))
    return EffortAssignment(fixed, total), best_val


def vertex_values(structure, ndim, nsig, within_block: bool = False, significant=None) -> dict[str, float]:
    """Goal total when the whole unit of effort goes to a single accessible factor."""
    run = _runner(structure, ndim, nsig, within_block, significant)
    return {f: run({f: 1.0}).goal_accumulator for f in _structure_daf(structure)}
