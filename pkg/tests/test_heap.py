import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from effortprop.heap import (
    BlockRule,
    HeapError,
    HeapHeuristic,
    arriving_effort,
    ascending_influence,
    block_effort_propagation,
    block_shares,
    block_significance_ratio,
    effective_blocks,
    enumerate_paths,
    evaluate_heap,
    heap_assignment,
    heap_total_epi,
    idepf,
    uepf,
)
from effortprop.model import (
    EffortAssignment,
    Factor,
    FactorSystem,
    Level,
    NormalizedInfluenceMatrix,
    SignificanceVector,
)
from effortprop.oracle import chain_sum_dprime, simulate_forward
from effortprop.verification import random_heap_case, random_effort


def system_of(*specs):
    """specs: (id, accessible, "II-A"[, excluded])"""
    return FactorSystem(tuple(
        Factor(s[0], s[0], s[1], Level.parse(s[2]), s[3] if len(s) > 3 else False) for s in specs
    ))


def chain_subpath(case_study):
    """NStud -> TeachSat -> StudSat, the top of every case-study path."""
    keep = ("NStud", "TeachSat", "StudSat")
    system = FactorSystem(tuple(f for f in case_study.system.factors if f.id in keep))
    (path,) = enumerate_paths(system)
    return path


PUBLISHED_DPRIME = {
    ("TeachSat", "StudSat"): 0.065971,
    ("NStud", "TeachSat"): 0.062691,
    ("NStud", "StudSat"): 0.068104,
}


class TestPaths:
    def test_case_study_three_paths(self, case_paths):
        assert len(case_paths) == 3
        first_block = [p.blocks[0][1] for p in case_paths]
        assert first_block == [
            ("Schol", "Funds", "Cocurr", "Doubt"),
            ("Int", "Funds", "Cocurr", "Doubt"),
            ("Schol", "Int", "Funds", "Cocurr", "Doubt"),
        ]
        for p in case_paths:
            assert not {"NStaff", "CIn", "HighLow"} & set(p.ids)

    def test_singletons(self):
        s = system_of(("A", True, "I"), ("B", True, "II"), ("C", False, "III"))
        assert len(enumerate_paths(s)) == 1

    def test_two_by_two(self):
        s = system_of(("A", True, "I"), ("B", True, "I"), ("C", True, "II"), ("D", False, "II"))
        paths = enumerate_paths(s)
        assert len(paths) == 9
        assert [p.index for p in paths] == list(range(1, 10))
        assert len({p.ids for p in paths}) == 9

    def test_excluded_sublevel_skipped(self):
        s = system_of(("X", True, "I-A", True), ("A", True, "I-B"), ("B", False, "II"))
        (p,) = enumerate_paths(s)
        assert p.ids == ("A", "B")

    def test_deterministic(self, case_study):
        assert enumerate_paths(case_study.system) == enumerate_paths(case_study.system)


class TestEffectiveBlocks:
    def test_case_study(self, case_paths):
        for p in case_paths:
            assert effective_blocks(p) == [1, 2, 3, 4, 6, 7]
            assert len(p.blocks) - len(effective_blocks(p)) == 3

    def test_all_accessible(self):
        s = system_of(("A", True, "I"), ("B", True, "II"))
        assert effective_blocks(enumerate_paths(s)[0]) == [1, 2]

    def test_one_accessible_block(self):
        s = system_of(("A", True, "I"), ("B", False, "II"))
        assert effective_blocks(enumerate_paths(s)[0]) == [1]

    def test_none(self):
        s = system_of(("A", False, "I"), ("B", False, "II"))
        with pytest.raises(HeapError):
            effective_blocks(enumerate_paths(s)[0])


class TestAscendingInfluence:
    def test_successive_blocks(self, case_study):
        dp = ascending_influence(chain_subpath(case_study), case_study.ndim)
        assert dp[("TeachSat", "StudSat")] == pytest.approx(0.065971, abs=1e-12)
        assert dp[("NStud", "TeachSat")] == pytest.approx(0.062691, abs=1e-12)

    def test_one_intermediate(self):
        s = system_of(("I", True, "I"), ("K", True, "II"), ("J", False, "III"))
        nd = NormalizedInfluenceMatrix(s.ids, [[0, 0.5, 0.1], [0, 0, 0.4], [0, 0, 0]])
        dp = ascending_influence(enumerate_paths(s)[0], nd)
        assert dp[("I", "J")] == pytest.approx(0.3, abs=1e-15)

    def test_published_chain(self, case_study):
        dp = ascending_influence(chain_subpath(case_study), case_study.ndim)
        assert dp[("NStud", "StudSat")] == pytest.approx(0.068104, abs=1e-4)

    def test_same_block_is_direct(self):
        s = system_of(("A", True, "I-A"), ("B", True, "I-B"), ("C", False, "II"))
        nd = NormalizedInfluenceMatrix(s.ids, [[0, 0.3, 0.7], [0.5, 0, 0.5], [0, 0, 0]])
        dp = ascending_influence(enumerate_paths(s)[0], nd, within_block=True)
        assert dp[("A", "B")] == 0.3
        assert dp[("A", "C")] == 0.7  # successive block: no intermediates

    @settings(max_examples=300, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.booleans())
    def test_matches_chain_enumeration(self, seed, within):
        rng = np.random.default_rng(seed)
        _, _, ndim, path = random_heap_case(rng)
        dp = ascending_influence(path, ndim, within)
        for (i, j), v in dp.dprime.items():
            assert v >= ndim.d(i, j) >= 0
            assert v == pytest.approx(chain_sum_dprime(i, j, path, ndim), abs=1e-12)


class TestUepf:
    def test_published_chain(self, case_study):
        u = uepf(chain_subpath(case_study), PUBLISHED_DPRIME, case_study.nsig)
        assert u["StudSat"] == 0.221834
        assert u["TeachSat"] == pytest.approx(0.180271, abs=1e-4)
        assert u["NStud"] == pytest.approx(0.154580, abs=1e-4)
        assert idepf(u, case_study.nsig)["StudSat"] == 0.0

    def test_within_block_flag(self):
        s = system_of(("X", True, "I-A"), ("Y", True, "I-B"), ("Z", False, "II"))
        nd = NormalizedInfluenceMatrix(s.ids, [[0, 0.4, 0.6], [0.2, 0, 0.8], [0, 0, 0]])
        nsig = SignificanceVector({"X": 0.1, "Y": 0.2, "Z": 0.7})
        p = enumerate_paths(s)[0]
        off = uepf(p, ascending_influence(p, nd), nsig)
        on = uepf(p, ascending_influence(p, nd, True), nsig, within_block=True)
        assert off["X"] == pytest.approx(0.1 + 0.6 * 0.7)
        assert on["Y"] == pytest.approx(0.2 + 0.8 * 0.7)
        assert on["X"] == pytest.approx(0.1 + 0.4 * on["Y"] + 0.6 * 0.7)

    @settings(max_examples=200, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.booleans())
    def test_bounds(self, seed, within):
        rng = np.random.default_rng(seed)
        _, nsig, ndim, path = random_heap_case(rng)
        u = uepf(path, ascending_influence(path, ndim, within), nsig, within)
        for fid, v in u.items():
            assert v >= nsig[fid]
        top = max(f.level if within else Level(f.block) for f in path.factors)
        for f in path.factors:
            if (f.level if within else Level(f.block)) == top:
                assert u[f.id] == nsig[f.id]


class TestAssignment:
    def test_uni_uni_path1(self, case_study, case_paths):
        a = heap_assignment(case_paths[0], HeapHeuristic("Uni", "Uni"), case_study.nsig)
        for f in ("Schol", "Funds", "Cocurr", "Doubt"):
            assert a[f] == pytest.approx(1 / 24, abs=1e-15)
        for f in ("NTeach", "Assgn", "IntTeach"):
            assert a[f] == pytest.approx(1 / 18, abs=1e-15)
        for f in ("NSec", "Prjct", "Infs", "NStud"):
            assert a[f] == pytest.approx(1 / 6, abs=1e-15)
        assert set(a.efforts) == set(case_paths[0].accessible)

    def test_uni_uni_path3(self, case_study, case_paths):
        a = heap_assignment(case_paths[2], HeapHeuristic("Uni", "Uni"), case_study.nsig)
        assert a["Int"] == pytest.approx(1 / 30, abs=1e-15)

    def test_uni_nsig_block1(self, case_study, case_paths):
        a = heap_assignment(case_paths[0], HeapHeuristic("Uni", "nSig"), case_study.nsig)
        expected = {"Schol": 0.024659, "Funds": 0.032820, "Cocurr": 0.046676, "Doubt": 0.062512}
        for f, v in expected.items():
            assert a[f] == pytest.approx(v, abs=1e-5)

    def test_bsr(self, case_study, case_paths):
        bsr = block_significance_ratio(case_paths[0], case_study.nsig)
        expected = [0.110510, 0.205672, 0.104451, 0.128953, 0.198956, 0.251458]
        assert list(bsr) == [1, 2, 3, 4, 6, 7]
        np.testing.assert_allclose(list(bsr.values()), expected, atol=1e-5)

    def test_bsr_nsig_schol(self, case_study, case_paths):
        # 0.110510 * 0.008334 / 0.056328, worked by hand
        a = heap_assignment(case_paths[0], HeapHeuristic("BSR", "nSig"), case_study.nsig)
        assert a["Schol"] == pytest.approx(0.016350, abs=1e-5)

    def test_bepr_needs_uepf(self, case_study, case_paths):
        with pytest.raises(HeapError):
            heap_assignment(case_paths[0], HeapHeuristic("BEPR", "Uni"), case_study.nsig)
        with pytest.raises(HeapError):
            heap_assignment(case_paths[0], HeapHeuristic("Uni", "UEPF"), case_study.nsig)

    def test_bepr_shares(self):
        s = system_of(("A", True, "I"), ("B", True, "I"), ("C", True, "II"), ("D", False, "III"))
        p = enumerate_paths(s)[-1]
        u = {"A": 0.2, "B": 0.4, "C": 0.9, "D": 0.5}
        shares = block_shares(p, BlockRule.BEPR, None, u)
        assert shares == {1: pytest.approx(0.3 / 1.2), 2: pytest.approx(0.9 / 1.2)}
        a = heap_assignment(p, HeapHeuristic("BEPR", "UEPF"), {"A": 1, "B": 1, "C": 1, "D": 1}, u)
        assert a["A"] == pytest.approx(0.25 * 0.2 / 0.6)

    def test_heuristic_labels(self):
        assert HeapHeuristic("bsr", "NSIG").label == "(BSR, nSig)"
        assert len(HeapHeuristic.grid()) == 9
        with pytest.raises(ValueError):
            HeapHeuristic("foo", "Uni")

    @settings(max_examples=200, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_conservation(self, seed):
        rng = np.random.default_rng(seed)
        _, nsig, ndim, path = random_heap_case(rng)
        u = uepf(path, ascending_influence(path, ndim), nsig)
        for rule in BlockRule:
            try:
                shares = block_shares(path, rule, nsig, u)
            except HeapError:
                continue  # zero weights
            assert math.fsum(shares.values()) == pytest.approx(1.0, abs=1e-9)
        for h in HeapHeuristic.grid():
            try:
                a = heap_assignment(path, h, nsig, u)
            except HeapError:
                continue
            assert math.fsum(a.efforts.values()) == pytest.approx(1.0, abs=1e-9)
            assert set(a.efforts) == set(path.accessible)


class TestBlockPropagation:
    def _single(self):
        s = system_of(("A", True, "I"), ("L", False, "II"))
        return enumerate_paths(s)[0]

    def test_single_factor_block(self):
        p = self._single()
        a = EffortAssignment({"A": 1 / 6}, total=1 / 6)
        bep = block_effort_propagation(p, a, {"A": 0.154580, "L": 0.3})
        assert bep[1] == pytest.approx(0.025763, abs=1e-6)
        assert bep[2] == 0.0

    def test_zero_effort_block(self):
        p = self._single()
        a = EffortAssignment({"A": 0.0}, total=0.0)
        assert block_effort_propagation(p, a, {"A": 0.5, "L": 0.3})[1] == 0.0

    def test_two_factors(self):
        s = system_of(("A", True, "I"), ("B", True, "I"))
        p = enumerate_paths(s)[-1]
        a = EffortAssignment({"A": 0.1, "B": 0.2}, total=0.3)
        assert block_effort_propagation(p, a, {"A": 0.2, "B": 0.1})[1] == pytest.approx(0.04)


class TestTotalEpi:
    @settings(max_examples=300, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.booleans())
    def test_matches_simulation(self, seed, within):
        rng = np.random.default_rng(seed)
        system, nsig, ndim, path = random_heap_case(rng)
        h = HeapHeuristic.grid()[int(rng.integers(9))]
        try:
            r = evaluate_heap(system, nsig, ndim, h, path, within)
        except HeapError:
            return
        assert r.total_epi == pytest.approx(simulate_forward(path, r.assignment, ndim, nsig, within), abs=1e-12)
        arrive = arriving_effort(path, r.assignment, ascending_influence(path, ndim, within), within)
        assert r.total_epi == pytest.approx(math.fsum(arrive[f] * nsig[f] for f in path.ids), abs=1e-12)

    @settings(max_examples=200, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(0.01, 100))
    def test_homogeneous(self, seed, c):
        rng = np.random.default_rng(seed)
        _, nsig, ndim, path = random_heap_case(rng)
        u = uepf(path, ascending_influence(path, ndim), nsig)
        a = random_effort(rng, list(path.accessible))
        assert heap_total_epi(path, a.scaled(c), u) == pytest.approx(c * heap_total_epi(path, a, u), rel=1e-12)

    @settings(max_examples=200, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_monotone(self, seed):
        rng = np.random.default_rng(seed)
        _, nsig, ndim, path = random_heap_case(rng)
        u = uepf(path, ascending_influence(path, ndim), nsig)
        a = random_effort(rng, list(path.accessible))
        base = heap_total_epi(path, a, u)
        for f in path.accessible:
            bumped = dict(a.efforts)
            bumped[f] += 0.1
            more = EffortAssignment(bumped, a.total + 0.1)
            assert heap_total_epi(path, more, u) >= base

    def test_path_out_of_range(self, synthetic):
        with pytest.raises(HeapError):
            evaluate_heap(synthetic.system, synthetic.nsig, synthetic.ndim, HeapHeuristic(), 4)

    def test_deterministic(self, synthetic):
        runs = [evaluate_heap(synthetic.system, synthetic.nsig, synthetic.ndim, h, k)
                for _ in range(2) for h in HeapHeuristic.grid() for k in (1, 2, 3)]
        half = len(runs) // 2
        assert [r.total_epi for r in runs[:half]] == [r.total_epi for r in runs[half:]]
