"""Total relation matrix, significance threshold and significant edges.

The closure used here is the standard DEMATEL one, T = N + N^2 + ... =
N (I - N)^-1, which only exists when the spectral radius of N is below one.
Row-normalized matrices have spectral radius exactly one, so callers usually
rescale first (see :func:`scale_for_closure`).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import EffortPropError, InfluenceMatrix, UnknownInfluenceError

THRESHOLD_RULES = ("mean_half_std", "mean_std", "mean")
SCALE_METHODS = ("none", "max_row_sum", "max_row_col_sum")
_RHO_MARGIN = 1e-12


class ClosureDivergesError(EffortPropError):
    """The power series for the total relation matrix does not converge."""


@dataclass(frozen=True, eq=False)
class TotalRelationMatrix:
    ids: tuple[str, ...]
    entries: np.ndarray
    threshold: float
    significant: np.ndarray
    rule: str = "mean_half_std"

    def edges(self) -> list[tuple[str, str, float]]:
        """Significant (source, target, t) triples in row-major order."""
        rows, cols = np.nonzero(self.significant)
        return [(self.ids[i], self.ids[j], float(self.entries[i, j])) for i, j in zip(rows, cols)]


def _as_array(matrix) -> np.ndarray:
    arr = matrix.entries if isinstance(matrix, InfluenceMatrix) else matrix
    arr = np.asarray(arr, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {arr.shape}")
    if np.isnan(arr).any():
        raise UnknownInfluenceError("closure needs a complete matrix; input has unknown entries")
    return arr


def scale_for_closure(matrix, method: str | float = "max_row_sum") -> np.ndarray:
    """Divide by the maximum row sum (or max of row and column sums, or a given number)."""
    arr = _as_array(matrix)
    if isinstance(method, (int, float)) and not isinstance(method, bool):
        s = float(method)
    elif method == "none":
        return arr.copy()
    elif method == "max_row_sum":
        s = arr.sum(axis=1).max()
    elif method == "max_row_col_sum":
        s = max(arr.sum(axis=1).max(), arr.sum(axis=0).max())
    else:
        raise ValueError(f"unknown scale method {method!r}; expected one of {SCALE_METHODS} or a number")
    if not s > 0:
        return arr.copy()
    return arr / s


def spectral_radius(arr: np.ndarray) -> float:
    if arr.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(arr))))


def total_relation_matrix(matrix, scale: str | float = "none") -> np.ndarray:
    """Return T = sum_{k>=1} N^k for the (optionally rescaled) input.

    Raises ClosureDivergesError when the spectral radius is not below one.
    """
    n_mat = scale_for_closure(matrix, scale)
    n = n_mat.shape[0]
    if n == 0:
        return n_mat
    if (n_mat < 0).any():
        raise ValueError("total relation matrix needs nonnegative entries")
    # max row sum < 1 is sufficient; fall back to the eigenvalues otherwise
    if n_mat.sum(axis=1).max() >= 1.0:
        rho = spectral_radius(n_mat)
        if rho >= 1.0 - _RHO_MARGIN:
            raise ClosureDivergesError(
                f"closure diverges: spectral radius {rho:.12g} >= 1 (rescale the input)"
            )
    # T (I - N) = N  <=>  (I - N)^T T^T = N^T
    eye = np.eye(n)
    t = np.linalg.solve((eye - n_mat).T, n_mat.T).T
    # tiny negative round-off on structurally zero entries
    t[(t < 0) & (t > -1e-15)] = 0.0
    return t


def significance_threshold(t, rule: str = "mean_half_std") -> float:
    """Mean plus half the population standard deviation of all entries (default rule)."""
    arr = np.asarray(t, dtype=float)
    if arr.size == 0:
        raise ValueError("threshold of an empty matrix")
    mean = float(arr.mean())
    std = float(arr.std(ddof=0))
    if rule == "mean_half_std":
        return mean + 0.5 * std
    if rule == "mean_std":
        return mean + std
    if rule == "mean":
        return mean
    raise ValueError(f"unknown threshold rule {rule!r}; expected one of {THRESHOLD_RULES}")


def significant_edges(t, tau: float) -> np.ndarray:
    if not np.isfinite(tau):
        raise ValueError("threshold must be finite")
    return np.asarray(t, dtype=float) > tau


def mine_relations(
    matrix,
    ids: Sequence[str] | None = None,
    scale: str | float = "none",
    rule: str = "mean_half_std",
) -> TotalRelationMatrix:
    if ids is None:
        if not isinstance(matrix, InfluenceMatrix):
            raise ValueError("ids are required for a bare array")
        ids = matrix.ids
    t = total_relation_matrix(matrix, scale)
    tau = significance_threshold(t, rule)
    sig = significant_edges(t, tau)
    t.setflags(write=False)
    sig.setflags(write=False)
    return TotalRelationMatrix(tuple(ids), t, tau, sig, rule)
