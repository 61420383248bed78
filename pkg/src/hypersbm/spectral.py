"""Linear-algebra core of hypergraph spectral clustering.

Matrices are plain dense numpy arrays.  The similarity matrix of a hypergraph
sums, for each node pair, the weights of the edges containing both nodes.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb, log

import numpy as np

from .errors import EigenNoConvergence, InvalidParams
from .generators import SbmParams
from .hypergraph import Partition, WeightedHypergraph

EIGEN_MODES = ("assortative", "disassortative")


def default_c_thr(d: int) -> float:
    """Trimming constant: 6 for graphs, 3 d^2 otherwise."""
    return 6.0 if d == 2 else 3.0 * d * d


def similarity_matrix(h: WeightedHypergraph) -> np.ndarray:
    """A[i, j] = sum of W_e over stored, observed edges e containing both i and j."""
    n = h.n
    use = h.observed & (h.weights != 0)
    e, w = h.edges[use], h.weights[use]
    acc = np.zeros(n * n)
    for a, b in combinations(range(h.d), 2):
        acc += np.bincount(e[:, a] * n + e[:, b], weights=w, minlength=n * n)
    upper = acc.reshape(n, n)
    return upper + upper.T


def trim(a: np.ndarray, c_thr: float):
    """Zero every row/column whose sum exceeds ``c_thr`` times the average row sum.

    All decisions use the row sums of the input matrix.  Returns the trimmed
    copy and the sorted array of removed (0-based) indices.
    """
    if c_thr <= 0:
        raise InvalidParams("c_thr must be positive")
    a = np.asarray(a, dtype=np.float64)
    n = a.shape[0]
    rows = a.sum(axis=1)
    # the relative guard keeps rows equal to the threshold despite rounding
    removed = np.flatnonzero(rows > c_thr * rows.sum() / n * (1 + 1e-12))
    out = a.copy()
    out[removed, :] = 0.0
    out[:, removed] = 0.0
    return out, removed


@dataclass(frozen=True, eq=False)
class Embedding:
    vectors: np.ndarray   # (n, k), orthonormal columns
    values: np.ndarray    # (k,)
    residuals: np.ndarray
    matvecs: int


def _selection_order(theta, mode):
    return np.argsort(-np.abs(theta) if mode == "disassortative" else -theta, kind="stable")


def _chebyshev_filter(apply, x, lo, hi, top, max_gain=1e6, max_degree=16):
    """Damp the spectral interval [lo, hi] and amplify everything beyond it.

    The degree is capped so the largest gain, reached at ``top``, stays below
    ``max_gain``; returns the filtered block and the degree used.
    """
    e, c = (hi - lo) / 2.0, (hi + lo) / 2.0
    reach = max(abs(top - c), abs(lo - c)) / e
    degree = 1
    if reach > 1.0:
        degree = int(np.clip(np.arccosh(max_gain) / np.arccosh(reach), 1, max_degree))
    y0, y1 = x, (apply(x) - c * x) / e
    for _ in range(degree - 1):
        y0, y1 = y1, 2.0 * (apply(y1) - c * y1) / e - y0
    return y1, degree


def _lower_edge(a, rng, steps=20):
    """Lanczos estimate of the smallest eigenvalue minus its residual bound."""
    n = a.shape[0]
    steps = min(steps, n)
    v = np.zeros((n, steps))
    alpha, beta = np.zeros(steps), np.zeros(steps)
    q = rng.standard_normal(n)
    q /= np.linalg.norm(q)
    used = 0
    for j in range(steps):
        v[:, j] = q
        w = a @ q
        used += 1
        alpha[j] = q @ w
        w -= v[:, :j + 1] @ (v[:, :j + 1].T @ w)   # full reorthogonalisation
        beta[j] = np.linalg.norm(w)
        if beta[j] <= 1e-12 * max(abs(alpha[j]), 1.0):
            break
        q = w / beta[j]
    m = j + 1
    t = np.diag(alpha[:m]) + np.diag(beta[:m - 1], 1) + np.diag(beta[:m - 1], -1)
    theta, s = np.linalg.eigh(t)
    return float(theta[0] - abs(beta[m - 1] * s[-1, 0])), used


def top_k_eigenvectors(a0: np.ndarray, k: int, mode: str = "assortative", seed: int = 0,
                       tol: float = 1e-8, max_matvecs: int | None = None,
                       oversample: int | None = None) -> Embedding:
    """Leading k eigenpairs of a symmetric matrix by filtered subspace iteration.

    "assortative" selects the k algebraically largest eigenvalues,
    "disassortative" the k largest in absolute value.  An orthonormal block of
    ``k + oversample`` vectors is repeatedly multiplied by a Chebyshev
    polynomial of the matrix that damps the unwanted part of the spectrum, then
    Rayleigh-Ritz projected.  Ritz pairs whose residual drops below
    ``tol * ||A||_F`` are locked and deflated from the active block.  In the
    assortative mode the lower end of the damped interval comes from a short
    Lanczos run and is pushed down whenever a Ritz value falls below it.  The
    default budget is 10 n log n matrix-vector products.
    """
    if mode not in EIGEN_MODES:
        raise InvalidParams(f"eigen mode must be one of {EIGEN_MODES}")
    a = np.asarray(a0, dtype=np.float64)
    n = a.shape[0]
    if not 1 <= k <= n:
        raise InvalidParams(f"need 1 <= k <= n, got k={k}, n={n}")
    rng = np.random.default_rng(seed)
    b = min(n, k + (oversample if oversample is not None else max(10, k)))
    x, _ = np.linalg.qr(rng.standard_normal((n, b)))
    norm_f = float(np.linalg.norm(a))
    if norm_f == 0.0:
        return Embedding(x[:, :k].copy(), np.zeros(k), np.zeros(k), 0)
    cap = max_matvecs if max_matvecs is not None else int(10 * n * max(log(n), 1.0))
    target = tol * norm_f
    rho = float(np.abs(a).sum(axis=1).max())   # bounds every |eigenvalue|
    floor, matvecs = -rho, 0
    if mode == "assortative":
        floor, matvecs = _lower_edge(a, rng)
        floor = max(floor, -rho)
    locked = np.zeros((n, 0))
    locked_vals: list[float] = []
    locked_res: list[float] = []

    def apply(z):
        y = a @ z
        if locked.shape[1]:
            y -= locked @ (locked.T @ y)
        return y

    while True:
        y = a @ x
        matvecs += x.shape[1]
        t = x.T @ y
        theta, v = np.linalg.eigh((t + t.T) / 2)
        order = _selection_order(theta, mode)
        theta, v = theta[order], v[:, order]
        x, y = x @ v, y @ v
        res = np.linalg.norm(y - x * theta, axis=0)
        floor = min(floor, float(theta.min()))
        done = 0
        while done < x.shape[1] and len(locked_vals) + done < k and res[done] <= target:
            done += 1
        if done:
            locked = np.column_stack([locked, x[:, :done]])
            locked_vals += theta[:done].tolist()
            locked_res += res[:done].tolist()
            x, theta = x[:, done:], theta[done:]
        if len(locked_vals) >= k or x.shape[1] == 0:
            break
        if matvecs >= cap:
            worst = float(res[done:].max())
            raise EigenNoConvergence(
                f"no convergence after {matvecs} matvecs; residual {worst:.3e} "
                f"> {target:.3e}", residual=worst)
        if mode == "assortative":
            lo, hi = floor, float(theta[-1])
        else:
            hi = float(np.abs(theta).min())
            lo = -hi
        if hi - lo > 1e-12 * rho:
            x, degree = _chebyshev_filter(apply, x, lo, hi, rho)
            matvecs += degree * x.shape[1]
        else:
            # the unwanted Ritz values collapse to one point: shift it away
            x = apply(x) - 0.5 * (hi + lo) * x
            matvecs += x.shape[1]
        if locked.shape[1]:
            x -= locked @ (locked.T @ x)
        x, _ = np.linalg.qr(x)
    vals = np.asarray(locked_vals)
    order = _selection_order(vals, mode)[:k]
    return Embedding(locked[:, order], vals[order], np.asarray(locked_res)[order], matvecs)


@dataclass(frozen=True, eq=False)
class RowClustering:
    partition: Partition
    centers: np.ndarray
    cost: float


def kmeans_cost(x: np.ndarray, labels: np.ndarray, k: int) -> float:
    """Sum over groups of squared distances to the group mean."""
    x = np.asarray(x, dtype=np.float64)
    cost = 0.0
    for j in range(k):
        pts = x[labels == j]
        if len(pts):
            cost += float(((pts - pts.mean(axis=0)) ** 2).sum())
    return cost


def _sq_dists(x, centers):
    return ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)


def _kmeanspp(x, k, rng):
    n = x.shape[0]
    centers = np.empty((k, x.shape[1]))
    centers[0] = x[rng.integers(n)]
    d2 = ((x - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        tot = d2.sum()
        i = rng.choice(n, p=d2 / tot) if tot > 0 else rng.integers(n)
        centers[j] = x[i]
        d2 = np.minimum(d2, ((x - centers[j]) ** 2).sum(axis=1))
    return centers


def _lloyd(x, k, rng, max_iter):
    centers = _kmeanspp(x, k, rng)
    labels = None
    for _ in range(max_iter):
        dist = _sq_dists(x, centers)
        new = dist.argmin(axis=1)
        counts = np.bincount(new, minlength=k)
        if np.any(counts == 0):
            own = dist[np.arange(len(x)), new]
            taken = set()
            for j in np.flatnonzero(counts == 0):
                # farthest point from its own center, not already moved
                for i in np.argsort(-own, kind="stable"):
                    if i not in taken and counts[new[i]] > 1:
                        break
                taken.add(i)
                counts[new[i]] -= 1
                new[i] = j
                counts[j] = 1
        for j in range(k):
            centers[j] = x[new == j].mean(axis=0)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
    return labels, centers


def kmeans(x: np.ndarray, k: int, restarts: int = 10, seed: int = 0,
           max_iter: int = 300) -> RowClustering:
    """Lloyd's k-means with k-means++ seeding; the lowest-cost restart wins."""
    if restarts < 1:
        raise InvalidParams("restarts must be >= 1")
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    if n <= k:
        labels = np.arange(n)
        centers = np.zeros((k, x.shape[1]))
        centers[:n] = x
        return RowClustering(Partition(labels, k), centers, 0.0)
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(restarts):
        labels, centers = _lloyd(x, k, rng, max_iter)
        cost = kmeans_cost(x, labels, k)
        if best is None or cost < best[2]:
            best = (labels, centers.copy(), cost)
    return RowClustering(Partition(best[0], k), best[1], best[2])


def cluster_rows(emb, k: int, restarts: int = 10, seed: int = 0) -> RowClustering:
    """k-means on the rows of an embedding (an :class:`Embedding` or an array)."""
    x = emb.vectors if isinstance(emb, Embedding) else emb
    return kmeans(x, k, restarts=restarts, seed=seed)


@dataclass(frozen=True, eq=False)
class BlockMeanMatrix:
    b: np.ndarray
    mu: float   # C(n-2, d-2) * alpha
    nu: float   # C(n-2, d-2) * p * alpha

    @property
    def sigma_min(self) -> float:
        return float(np.linalg.svd(self.b, compute_uv=False).min())


def block_mean_matrix(params: SbmParams) -> BlockMeanMatrix:
    """Expected similarity between a node of group l and a distinct node of group m."""
    n, d, a = params.n, params.d, params.alpha
    c_all = comb(n - 2, d - 2)
    ps = params.homogeneous_p
    b = np.full((params.k, params.k), params.q * a * c_all, dtype=np.float64)
    for l, (size, p) in enumerate(zip(params.cluster_sizes, ps)):
        c_in = comb(size - 2, d - 2)
        b[l, l] = p * a * c_in + params.q * a * (c_all - c_in)
    return BlockMeanMatrix(b, c_all * a, c_all * max(ps) * a)


def expected_similarity(params: SbmParams):
    """The expectation P = Z B Z^T of the similarity matrix, diagonal zeroed."""
    bm = block_mean_matrix(params)
    lab = params.truth().labels
    p = bm.b[lab][:, lab]
    np.fill_diagonal(p, 0.0)
    return p, bm
