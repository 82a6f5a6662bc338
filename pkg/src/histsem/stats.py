"""Numerical core: cosine similarity, Spearman rank correlation, the Mantel
permutation test over (possibly sparse) similarity matrices, embedding-shift
summaries, PCA projection, and cluster distance statistics.

Similarity matrices are duck-typed here: anything with ``usage_ids`` (ordered
id list) and ``values`` (square float array, NaN for missing cells) works, so
this module stays dependency-free within the package.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

__all__ = [
    "MantelResult",
    "ShiftReport",
    "Projection",
    "cosine_similarity",
    "average_ranks",
    "spearman",
    "mantel_test",
    "embedding_shift",
    "pca_project",
    "cluster_distances",
]

_RHO_EPS = 1e-12


def cosine_similarity(u, v) -> float:
    """dot(u, v) / (|u| |v|), clamped to [-1, 1] against rounding."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise ValueError(f"vectors must share one dimension: {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine similarity undefined for zero-norm vectors")
    return float(np.clip(float(u @ v) / (nu * nv), -1.0, 1.0))


def average_ranks(x: Sequence[float]) -> np.ndarray:
    """1-based ranks with ties assigned the average of their positions."""
    x = np.asarray(x, dtype=np.float64)
    order = np.argsort(x, kind="stable")
    ranks = np.empty(len(x), dtype=np.float64)
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and x[order[j + 1]] == x[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson correlation of average-tie ranks."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("inputs must be equal-length 1-D sequences")
    if len(x) < 3:
        raise ValueError("need at least 3 observations")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise ValueError("spearman undefined for constant input")
    rx = average_ranks(x)
    ry = average_ranks(y)
    rx -= rx.mean()
    ry -= ry.mean()
    return float(np.clip((rx @ ry) / math.sqrt((rx @ rx) * (ry @ ry)), -1.0, 1.0))


@dataclass(frozen=True)
class MantelResult:
    rho: float
    p_value: float
    permutations: int
    observed_cells: int
    tail: str = "greater"


def _aligned_cells(a: np.ndarray, b: np.ndarray, perm: np.ndarray, iu) -> tuple[np.ndarray, np.ndarray]:
    b_perm = b[np.ix_(perm, perm)]
    av = a[iu]
    bv = b_perm[iu]
    defined = np.isfinite(av) & np.isfinite(bv)
    return av[defined], bv[defined]


def _perm_rho(a: np.ndarray, b: np.ndarray, perm: np.ndarray, iu) -> float:
    av, bv = _aligned_cells(a, b, perm, iu)
    if len(av) < 3 or np.all(av == av[0]) or np.all(bv == bv[0]):
        return math.nan
    return spearman(av, bv)


def mantel_test(
    A,
    B,
    permutations: int = 999,
    seed: int = 0,
    tail: str = "greater",
    method: str = "auto",
) -> MantelResult:
    """Spearman-based Mantel test between two aligned similarity matrices.

    The statistic is the rank correlation over the jointly defined
    off-diagonal upper-triangle cells. Each permutation applies one random
    simultaneous row-and-column relabeling to B (its missing-cell mask
    travels with it). For dimension <= 6 (method="auto") or
    method="exhaustive", all n! relabelings are enumerated and the p-value
    is the exact fraction with rho at least the observed value (identity
    included); otherwise p = (1 + #{rho_perm >= rho_obs}) / (1 + permutations).
    """
    if tail not in ("greater", "two-sided"):
        raise ValueError(f"unknown tail: {tail}")
    if method not in ("auto", "sampled", "exhaustive"):
        raise ValueError(f"unknown method: {method}")
    ids_a = list(A.usage_ids)
    ids_b = list(B.usage_ids)
    if ids_a != ids_b:
        raise ValueError("matrices are misaligned: usage_id orderings differ")
    a = np.asarray(A.values, dtype=np.float64)
    b = np.asarray(B.values, dtype=np.float64)
    n = len(ids_a)
    if a.shape != (n, n) or b.shape != (n, n):
        raise ValueError("matrix shape does not match usage_ids length")
    if n < 3:
        raise ValueError("need at least 3 usages")
    iu = np.triu_indices(n, 1)

    identity = np.arange(n)
    av, bv = _aligned_cells(a, b, identity, iu)
    if len(av) < 3:
        raise ValueError("need at least 3 jointly defined off-diagonal cells")
    if np.all(av == av[0]) or np.all(bv == bv[0]):
        raise ValueError("degenerate (constant) similarity cells")
    rho_obs = spearman(av, bv)

    def exceeds(rho_p: float) -> bool:
        if math.isnan(rho_p):
            return False
        if tail == "greater":
            return rho_p >= rho_obs - _RHO_EPS
        return abs(rho_p) >= abs(rho_obs) - _RHO_EPS

    exhaustive = method == "exhaustive" or (method == "auto" and n <= 6)
    if exhaustive:
        count = 0
        total = 0
        for perm in itertools.permutations(range(n)):
            total += 1
            if exceeds(_perm_rho(a, b, np.array(perm), iu)):
                count += 1
        return MantelResult(rho_obs, count / total, total, len(av), tail)

    rng = np.random.default_rng(seed)
    count = 0
    for _ in range(permutations):
        perm = rng.permutation(n)
        if exceeds(_perm_rho(a, b, perm, iu)):
            count += 1
    p = (1 + count) / (1 + permutations)
    return MantelResult(rho_obs, p, permutations, len(av), tail)


PairKey = tuple[str, str]


@dataclass
class ShiftReport:
    """Per-pair similarity deltas between two encoder checkpoints.

    Sign convention: positive shift = the pair became more similar after
    retraining.
    """

    word: str
    shifts: dict[PairKey, float]
    average: float
    max_increase: tuple[PairKey, float]
    max_decrease: tuple[PairKey, float]

    def to_json(self) -> dict:
        return {
            "word": self.word,
            "shifts": [{"pair": list(k), "shift": v} for k, v in sorted(self.shifts.items())],
            "average": self.average,
            "max_increase": {"pair": list(self.max_increase[0]), "shift": self.max_increase[1]},
            "max_decrease": {"pair": list(self.max_decrease[0]), "shift": self.max_decrease[1]},
        }


def embedding_shift(
    sims_old: Mapping[PairKey, float],
    sims_new: Mapping[PairKey, float],
    word: str = "",
) -> ShiftReport:
    """Pairwise similarity deltas (new - old) with summary statistics."""
    if not sims_old:
        raise ValueError("empty similarity mapping")
    if set(sims_old) != set(sims_new):
        raise ValueError("pair key sets differ between old and new similarities")
    shifts = {k: sims_new[k] - sims_old[k] for k in sims_old}
    ordered = sorted(shifts.items())  # deterministic tie-breaking
    avg = sum(shifts.values()) / len(shifts)
    max_inc = max(ordered, key=lambda kv: kv[1])
    max_dec = min(ordered, key=lambda kv: kv[1])
    return ShiftReport(word=word, shifts=shifts, average=avg, max_increase=max_inc, max_decrease=max_dec)


@dataclass
class Projection:
    coordinates: np.ndarray  # (n, d)
    explained_variance: np.ndarray  # (d,), non-increasing
    component_basis: np.ndarray  # (d, dim), orthonormal rows
    mean: np.ndarray  # (dim,)


def pca_project(vectors, d: int = 2) -> Projection:
    """Mean-center, SVD, project onto the top d principal directions.

    Component signs are fixed by making each component's largest-magnitude
    entry positive, so projections are reproducible.
    """
    X = np.asarray(vectors, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("vectors must be a 2-D array")
    n, dim = X.shape
    if n < 2:
        raise ValueError("need at least 2 points")
    if not 1 <= d <= min(n - 1, dim):
        raise ValueError(f"d must be in [1, min(n-1, dim)] = [1, {min(n - 1, dim)}]")
    mean = X.mean(axis=0)
    Xc = X - mean
    if not np.any(Xc):
        raise ValueError("all points identical: zero variance")
    _, S, Vt = np.linalg.svd(Xc, full_matrices=False)
    components = Vt[:d].copy()
    for i in range(d):
        j = int(np.argmax(np.abs(components[i])))
        if components[i, j] < 0:
            components[i] = -components[i]
    coords = Xc @ components.T
    explained = (S[:d] ** 2) / (n - 1)
    return Projection(coordinates=coords, explained_variance=explained, component_basis=components, mean=mean)


def cluster_distances(
    points,
    labels: Sequence,
) -> tuple[dict, dict]:
    """Mean pairwise Euclidean distances within and across clusters.

    Returns (intra, inter): intra maps cluster -> mean within-cluster
    distance (0.0 for singletons); inter maps sorted cluster pairs ->
    mean cross-cluster distance. A single cluster yields no inter entries.
    """
    X = np.asarray(points, dtype=np.float64)
    if X.ndim != 2 or len(labels) != X.shape[0]:
        raise ValueError("points must be 2-D with one label per row")
    groups: dict = {}
    for i, lab in enumerate(labels):
        groups.setdefault(lab, []).append(i)
    intra: dict = {}
    for lab, idx in groups.items():
        if len(idx) == 1:
            intra[lab] = 0.0
            continue
        dists = [
            float(np.linalg.norm(X[i] - X[j]))
            for i, j in itertools.combinations(idx, 2)
        ]
        intra[lab] = sum(dists) / len(dists)
    inter: dict = {}
    for la, lb in itertools.combinations(sorted(groups, key=str), 2):
        dists = [
            float(np.linalg.norm(X[i] - X[j]))
            for i in groups[la]
            for j in groups[lb]
        ]
        inter[(la, lb)] = sum(dists) / len(dists)
    return intra, inter
