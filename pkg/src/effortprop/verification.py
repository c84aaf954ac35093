"""Randomized agreement checks between the engines and the oracles.

Used by ``effortprop verify`` and by the test suite.  Every check draws its
systems from a seeded generator so failures can be replayed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import heap, oracle, peap, relations
from .model import (
    EffortAssignment,
    Factor,
    FactorSystem,
    Level,
    NormalizedInfluenceMatrix,
    SignificanceVector,
    classify_factors,
)


def random_system(rng: np.random.Generator, n: int | None = None, max_n: int = 8,
                  n_daf: int | None = None, exclude: bool = True, max_sublevels: int = 2):
    """Random layered system with a random row-normalized influence matrix.

    Returns (system, nsig, ndim).  Roughly one row in ten of the influence
    matrix is left all-zero.
    """
    if n is None:
        n = int(rng.integers(2, max_n + 1))
    n_blocks = int(rng.integers(1, n + 1))
    # every block gets at least one factor
    blocks = list(range(1, n_blocks + 1)) + list(rng.integers(1, n_blocks + 1, size=n - n_blocks))
    rng.shuffle(blocks)
    if n_daf is None:
        acc = rng.random(n) < 0.7
        if not acc.any():
            acc[int(rng.integers(n))] = True
    else:
        acc = np.zeros(n, dtype=bool)
        acc[rng.choice(n, size=n_daf, replace=False)] = True
    excluded = np.zeros(n, dtype=bool)
    if exclude and n > 2 and rng.random() < 0.3:
        k = int(rng.integers(n))
        if not acc[k] or acc.sum() > 1:
            excluded[k] = True
    factors = []
    for k in range(n):
        sub = int(rng.integers(1, max_sublevels + 1))
        factors.append(Factor(f"F{k + 1}", f"factor {k + 1}", bool(acc[k]), Level(int(blocks[k]), sub),
                              bool(excluded[k])))
    system = FactorSystem(tuple(factors))
    w = rng.dirichlet(np.ones(n))
    nsig = SignificanceVector({f.id: float(x) for f, x in zip(factors, w)})
    raw = rng.random((n, n)) * (rng.random((n, n)) < 0.8)
    raw[rng.random(n) < 0.1] = 0.0
    sums = raw.sum(axis=1, keepdims=True)
    nd = np.divide(raw, sums, out=np.zeros_like(raw), where=sums > 0)
    return system, nsig, NormalizedInfluenceMatrix(system.ids, nd)


def random_path(rng: np.random.Generator, system: FactorSystem) -> heap.StrategicPath:
    paths = heap.enumerate_paths(system)
    return paths[int(rng.integers(len(paths)))]


def random_heap_case(rng: np.random.Generator, max_n: int = 8):
    """Random (system, nsig, ndim, path) whose path has an accessible factor."""
    while True:
        system, nsig, ndim = random_system(rng, max_n=max_n)
        path = random_path(rng, system)
        if path.accessible:
            return system, nsig, ndim, path


def random_effort(rng: np.random.Generator, ids, total: float = 1.0):
    w = rng.dirichlet(np.ones(len(ids)))
    e = {fid: total * float(x) for fid, x in zip(ids, w)}
    e[ids[-1]] = max(0.0, total - math.fsum(v for k, v in e.items() if k != ids[-1]))
    return EffortAssignment(e, total)


@dataclass
class CheckResult:
    name: str
    cases: int
    max_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_error <= self.tolerance


def check_dprime(rng, cases: int) -> CheckResult:
    worst = 0.0
    for _ in range(cases):
        _, _, ndim, path = random_heap_case(rng)
        within = bool(rng.random() < 0.5)
        dp = heap.ascending_influence(path, ndim, within)
        for (i, j), v in dp.dprime.items():
            worst = max(worst, abs(v - oracle.chain_sum_dprime(i, j, path, ndim)))
    return CheckResult("ascending influence vs chain enumeration", cases, worst, 1e-12)


def check_heap_simulation(rng, cases: int) -> CheckResult:
    worst = 0.0
    grid = heap.HeapHeuristic.grid()
    for k in range(cases):
        system, nsig, ndim, path = random_heap_case(rng)
        within = bool(rng.random() < 0.5)
        h = grid[k % len(grid)]
        res = heap.evaluate_heap(system, nsig, ndim, h, path, within)
        sim = oracle.simulate_forward(path, res.assignment, ndim, nsig, within)
        worst = max(worst, abs(res.total_epi - sim))
    return CheckResult("hierarchical TotalEPI vs forward simulation", cases, worst, 1e-12)


def check_peap(rng, cases: int) -> CheckResult:
    worst = 0.0
    for _ in range(cases):
        system, nsig, ndim = random_system(rng, max_n=20)
        daf, ndaf = classify_factors(system)
        a = random_effort(rng, daf)
        gating = bool(rng.random() < 0.3)
        sig = (rng.random((len(system), len(system))) < 0.5) if gating else None
        cfg = peap.PeapConfig(gating=gating)
        inflow = peap.propagate_to_latent(a, ndim, ndaf, cfg, sig)
        scalar = peap.peap_total_epi(a, inflow, nsig)
        matrix = peap.peap_total_epi_matrix(a, ndim, ndaf, nsig, cfg, sig)
        sim = oracle.simulate_forward(system, a, ndim, nsig, significant=sig)
        worst = max(worst, abs(scalar - matrix), abs(scalar - sim))
    return CheckResult("parallel TotalEPI scalar vs matrix form vs simulation", cases, worst, 1e-12)


def check_trm(rng, cases: int) -> CheckResult:
    worst = 0.0
    for _ in range(cases):
        n = int(rng.integers(1, 11))
        m = rng.random((n, n))
        m *= rng.uniform(0.05, 0.9) / m.sum(axis=1).max()
        t = relations.total_relation_matrix(m)
        series = np.zeros_like(m)
        power = np.eye(n)
        for _k in range(400):
            power = power @ m
            series += power
        worst = max(worst, float(np.abs(t - series).max()))
    return CheckResult("total relation matrix vs truncated power series", cases, worst, 1e-10)


def run_checks(cases: int = 200, seed: int = 0) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    return [
        check_dprime(rng, cases),
        check_heap_simulation(rng, cases),
        check_peap(rng, cases),
        check_trm(rng, cases),
    ]
