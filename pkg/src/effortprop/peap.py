"""Parallel effort assignment and propagation.

All directly accessible factors are worked on at the same timestep.  Each
passes effort straight to the goal (weighted by its significance) and one
hop into every latent factor, which in turn passes it to the goal.  There is
no propagation between accessible factors and none between latent factors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .model import (
    EffortAssignment,
    FactorSystem,
    InfluenceMatrix,
    NoActionableFactorsError,
    SignificanceVector,
    StrategyResult,
    StrategyTag,
    classify_factors,
)


@dataclass(frozen=True)
class PeapConfig:
    gating: bool = False
    total_effort: float = 1.0

    def __post_init__(self):
        if not self.total_effort > 0:
            raise ValueError("total_effort must be positive")


def uniform_assignment(daf: Sequence[str], total: float = 1.0) -> EffortAssignment:
    if not daf:
        raise NoActionableFactorsError("uniform assignment needs at least one accessible factor")
    share = total / len(daf)
    return EffortAssignment({fid: share for fid in daf}, total)


def weighted_assignment(daf: Sequence[str], nsig: SignificanceVector | Mapping[str, float],
                        total: float = 1.0) -> EffortAssignment:
    """Efforts proportional to normalized significance over the accessible factors."""
    if not daf:
        raise NoActionableFactorsError("weighted assignment needs at least one accessible factor")
    weights = [float(nsig[fid]) for fid in daf]
    denom = math.fsum(weights)
    if not denom > 0:
        raise ValueError("significance over the accessible factors sums to zero")
    return EffortAssignment({fid: total * w / denom for fid, w in zip(daf, weights)}, total)


def _mask(significant, ndim: InfluenceMatrix, rows, cols) -> np.ndarray:
    if isinstance(significant, np.ndarray):
        arr = significant
    else:  # TotalRelationMatrix or anything carrying .significant
        arr = significant.significant
    r = [ndim.pos(i) for i in rows]
    c = [ndim.pos(j) for j in cols]
    return np.asarray(arr, dtype=bool)[np.ix_(r, c)]


def propagate_to_latent(
    assignment: EffortAssignment,
    ndim: InfluenceMatrix,
    ndaf: Sequence[str],
    config: PeapConfig | None = None,
    significant=None,
) -> dict[str, float]:
    """Effort arriving at each latent factor after one propagation hop.

    With ``config.gating`` only significant (source, latent) pairs carry
    effort; ``significant`` is then a boolean matrix aligned with ``ndim``
    (or a TotalRelationMatrix).
    """
    config = config or PeapConfig()
    daf = [fid for fid, e in assignment.efforts.items()]
    ndaf = list(ndaf)
    if not ndaf:
        return {}
    if not daf:
        return {j: 0.0 for j in ndaf}
    eff = np.array([assignment[fid] for fid in daf])
    coef = ndim.block(daf, ndaf)
    if config.gating:
        if significant is None:
            raise ValueError("gating requires a significant-edge matrix")
        coef = np.where(_mask(significant, ndim, daf, ndaf), coef, 0.0)
    return {j: math.fsum(eff * coef[:, k]) for k, j in enumerate(ndaf)}


def peap_total_epi(
    assignment: EffortAssignment,
    latent_inflows: Mapping[str, float],
    nsig: SignificanceVector | Mapping[str, float],
) -> float:
    direct = [e * nsig[fid] for fid, e in assignment.efforts.items()]
    indirect = [a * nsig[fid] for fid, a in latent_inflows.items()]
    return math.fsum(direct + indirect)


def peap_total_epi_matrix(
    assignment: EffortAssignment,
    ndim: InfluenceMatrix,
    ndaf: Sequence[str],
    nsig: SignificanceVector | Mapping[str, float],
    config: PeapConfig | None = None,
    significant=None,
) -> float:
    """Matrix form: E_daf^T (nSig_daf + P nSig_ndaf) with P_ij = d(i->j)."""
    config = config or PeapConfig()
    daf = list(assignment.efforts)
    ndaf = list(ndaf)
    e = np.array([assignment[f] for f in daf])
    s_daf = np.array([nsig[f] for f in daf])
    s_ndaf = np.array([nsig[f] for f in ndaf])
    p = ndim.block(daf, ndaf)
    if config.gating:
        if significant is None:
            raise ValueError("gating requires a significant-edge matrix")
        p = np.where(_mask(significant, ndim, daf, ndaf), p, 0.0)
    return float(e @ (s_daf + p @ s_ndaf)) if daf else 0.0


def evaluate_peap(
    system: FactorSystem,
    nsig: SignificanceVector,
    ndim: InfluenceMatrix,
    weighted: bool = False,
    config: PeapConfig | None = None,
    significant=None,
) -> StrategyResult:
    config = config or PeapConfig()
    daf, ndaf = classify_factors(system)
    if weighted:
        assignment = weighted_assignment(daf, nsig, config.total_effort)
    else:
        assignment = uniform_assignment(daf, config.total_effort)
    inflows = propagate_to_latent(assignment, ndim, ndaf, config, significant)
    tag = StrategyTag("PEAP", None, "nSig" if weighted else "Uni", None)
    return StrategyResult(tag, assignment, inflows, peap_total_epi(assignment, inflows, nsig),
                          members=tuple(daf + ndaf))
