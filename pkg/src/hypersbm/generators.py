"""Seeded samplers for the weighted SBM family, the censored block model, the
planted clique model and sketched subspace-clustering hypergraphs.

Randomness attached to a single edge comes from a counter-based hash of
``(seed, stream, edge)``, so the result does not depend on the order in which
edges are enumerated.  Randomness that is not per edge (class counts,
rejection sampling, point clouds) comes from numpy's PCG64 seeded with
``SeedSequence([seed, stream])``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb, log
from typing import Callable, Iterator, Sequence

import numpy as np

from .errors import BudgetExceeded, InvalidParams
from .hypergraph import Partition, WeightedHypergraph

ENUMERATION_LIMIT = 10**8
DEFAULT_MAX_EDGES = 2 * 10**7

WEIGHT_KINDS = ("bernoulli", "uniform-mixture", "custom")

# stream ids for the keyed hash; each sampler owns a disjoint range
STREAM_SBM = 10
STREAM_CBM = 20
STREAM_CLIQUE = 30
STREAM_SKETCH = 40
STREAM_SPLIT = 50
STREAM_POINTS = 60

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def _mix_int(x: int) -> int:
    x = (x + _GOLDEN) & _MASK64
    x = ((x ^ (x >> 30)) * _M1) & _MASK64
    x = ((x ^ (x >> 27)) * _M2) & _MASK64
    return x ^ (x >> 31)


def _mix_arr(x: np.ndarray) -> np.ndarray:
    x = x + np.uint64(_GOLDEN)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(_M1)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(_M2)
    return x ^ (x >> np.uint64(31))


def edge_uniforms(seed: int, stream: int, edges: np.ndarray) -> np.ndarray:
    """Uniform [0, 1) value per edge row, a pure function of (seed, stream, edge)."""
    edges = np.asarray(edges)
    key = _mix_int(_mix_int(int(seed) & _MASK64) ^ (int(stream) & _MASK64))
    h = np.full(edges.shape[0], key, dtype=np.uint64)
    for c in range(edges.shape[1]):
        h = _mix_arr(h ^ edges[:, c].astype(np.uint64))
    return (h >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def seeded_rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed) & _MASK64, stream]))


def colex_combinations(m: int, r: int) -> np.ndarray:
    """All r-subsets of range(m) as increasing rows, in colexicographic order.

    In this order the subsets of range(t) form a prefix for every t <= m.
    """
    if r == 0:
        return np.zeros((1, 0), dtype=np.int32)
    if m < r:
        return np.zeros((0, r), dtype=np.int32)
    prev = colex_combinations(m - 1, r - 1)
    out = np.empty((comb(m, r), r), dtype=np.int32)
    pos = 0
    for t in range(r - 1, m):
        c = comb(t, r - 1)
        out[pos:pos + c, :r - 1] = prev[:c]
        out[pos:pos + c, r - 1] = t
        pos += c
    return out


def iter_edge_blocks(n: int, d: int) -> Iterator[np.ndarray]:
    """Enumerate all d-subsets of range(n), one block per smallest node."""
    rest = colex_combinations(n - 1, d - 1)
    for i in range(n - d + 1):
        c = comb(n - i - 1, d - 1)
        block = np.empty((c, d), dtype=np.int64)
        block[:, 0] = i
        block[:, 1:] = rest[:c] + (i + 1)
        yield block


def _random_subsets(rng, pool: int, d: int, count: int, reject=None) -> np.ndarray:
    """``count`` distinct uniformly random d-subsets of range(pool), as sorted rows."""
    if count == 0:
        return np.zeros((0, d), dtype=np.int64)
    have = np.zeros((0, d), dtype=np.int64)
    while have.shape[0] < count:
        need = count - have.shape[0]
        draw = np.sort(rng.integers(0, pool, size=(int(need * 1.3) + 16, d)), axis=1)
        ok = np.all(draw[:, 1:] != draw[:, :-1], axis=1)
        if reject is not None:
            ok &= ~reject(draw)
        have = np.unique(np.concatenate([have, draw[ok]]), axis=0)
    if have.shape[0] > count:
        have = have[np.sort(rng.choice(have.shape[0], size=count, replace=False))]
    return have


def _is_homogeneous(labels: np.ndarray, edges: np.ndarray) -> np.ndarray:
    lab = labels[edges]
    return np.all(lab == lab[:, :1], axis=1)


# --- weighted SBM ---------------------------------------------------------


@dataclass(frozen=True)
class SbmParams:
    """Configuration of the weighted SBM.

    ``group_p`` optionally replaces ``p`` with one homogeneous mean parameter
    per group (asymmetric model).  ``sampler`` is required for
    ``weight_kind="custom"``: it receives an (m, 2) array of uniforms, the
    homogeneity mask and the per-edge target means, and must return weights in
    [0, 1] whose expectation equals the target mean.
    """

    n: int
    d: int
    cluster_sizes: tuple
    p: float
    q: float
    alpha: float = 1.0
    weight_kind: str = "bernoulli"
    assortative: bool = True
    group_p: tuple | None = None
    sampler: Callable | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "cluster_sizes", tuple(int(s) for s in self.cluster_sizes))
        if self.group_p is not None:
            object.__setattr__(self, "group_p", tuple(float(v) for v in self.group_p))
        n, d, sizes = self.n, self.d, self.cluster_sizes
        if d < 2:
            raise InvalidParams("d must be >= 2")
        if sum(sizes) != n:
            raise InvalidParams(f"cluster sizes sum to {sum(sizes)}, expected n={n}")
        if any(s < d for s in sizes):
            raise InvalidParams(f"every cluster needs at least d={d} nodes")
        if not 0 < self.alpha <= 1:
            raise InvalidParams("alpha must lie in (0, 1]")
        if self.weight_kind not in WEIGHT_KINDS:
            raise InvalidParams(f"unknown weight kind {self.weight_kind!r}")
        if self.weight_kind == "custom" and self.sampler is None:
            raise InvalidParams("weight_kind='custom' needs a sampler")
        ps = self.homogeneous_p
        if len(ps) != self.k:
            raise InvalidParams("group_p needs one value per cluster")
        for v in ps + (self.q,):
            if not 0 <= v <= 1 or v * self.alpha > 1:
                raise InvalidParams("p, q must lie in [0, 1] with p*alpha, q*alpha <= 1")
        if self.weight_kind == "uniform-mixture" and max(ps + (self.q,)) > 0.5:
            raise InvalidParams("uniform-mixture weights need 2p <= 1 and 2q <= 1")
        if self.assortative and not min(ps) > self.q:
            raise InvalidParams("assortative model needs every homogeneous p > q")
        if not self.assortative and not max(ps) < self.q:
            raise InvalidParams("disassortative model needs every homogeneous p < q")

    @classmethod
    def equal(cls, n, d, k, p, q, **kw) -> "SbmParams":
        if n % k:
            raise InvalidParams(f"n={n} is not divisible by k={k}")
        return cls(n=n, d=d, cluster_sizes=(n // k,) * k, p=p, q=q, **kw)

    @property
    def k(self) -> int:
        return len(self.cluster_sizes)

    @property
    def homogeneous_p(self) -> tuple:
        return self.group_p if self.group_p is not None else (float(self.p),) * self.k

    def truth(self) -> Partition:
        return Partition.from_sizes(self.cluster_sizes)


def alpha_for_edge_count(n: int, d: int, expected_edges: float) -> float:
    """The alpha that makes C(n, d) * alpha equal ``expected_edges``."""
    return expected_edges / comb(n, d)


def _sbm_weights(params: SbmParams, u: np.ndarray, homog: np.ndarray,
                 hom_p: np.ndarray) -> np.ndarray:
    a = params.alpha
    pv = np.where(homog, hom_p, params.q)
    if params.weight_kind == "bernoulli":
        return (u[:, 0] < pv * a).astype(np.float64)
    if params.weight_kind == "uniform-mixture":
        return np.where(u[:, 0] < a, u[:, 1] * 2.0 * pv, 0.0)
    w = np.asarray(params.sampler(u, homog, pv * a), dtype=np.float64)
    if w.shape != homog.shape or np.any(w < 0) or np.any(w > 1):
        raise InvalidParams("custom sampler must return one weight in [0, 1] per edge")
    return w


def sample_weighted_sbm(params: SbmParams, seed: int,
                        max_edges: int = DEFAULT_MAX_EDGES):
    """Draw a hypergraph from the weighted SBM; returns ``(H, truth)``.

    Node groups are contiguous: the first ``cluster_sizes[0]`` nodes form group
    1 and so on.  Only nonzero weights are stored.
    """
    n, d = params.n, params.d
    truth = params.truth()
    labels = truth.labels
    group_p = np.asarray(params.homogeneous_p)
    total = comb(n, d)
    if total <= ENUMERATION_LIMIT:
        edges, weights = [], []
        for block in iter_edge_blocks(n, d):
            homog = _is_homogeneous(labels, block)
            u = np.column_stack([edge_uniforms(seed, STREAM_SBM, block),
                                 edge_uniforms(seed, STREAM_SBM + 1, block)])
            w = _sbm_weights(params, u, homog, group_p[labels[block[:, 0]]])
            keep = w > 0
            edges.append(block[keep])
            weights.append(w[keep])
        h = _from_blocks(n, d, edges, weights)
        return h, truth

    if params.weight_kind == "custom":
        raise BudgetExceeded("custom weights need full enumeration; C(n, d) too large")
    rng = seeded_rng(seed, STREAM_SBM)
    a = params.alpha
    presence = (lambda v: v * a) if params.weight_kind == "bernoulli" else (lambda v: a)
    hom_sizes = [comb(s, d) for s in params.cluster_sizes]
    het_size = total - sum(hom_sizes)
    expected = sum(h * presence(pj) for h, pj in zip(hom_sizes, group_p)) + het_size * presence(params.q)
    if expected > max_edges:
        raise BudgetExceeded(f"expected {expected:.3g} stored edges exceeds {max_edges}")
    edges, weights = [], []
    offset = 0
    for j, s in enumerate(params.cluster_sizes):
        cnt = int(rng.binomial(hom_sizes[j], presence(group_p[j])))
        e = _random_subsets(rng, s, d, cnt) + offset
        edges.append(e)
        weights.append(_class_values(params, rng, cnt, group_p[j]))
        offset += s
    cnt = int(rng.binomial(het_size, presence(params.q)))
    edges.append(_random_subsets(rng, n, d, cnt, reject=lambda x: _is_homogeneous(labels, x)))
    weights.append(_class_values(params, rng, cnt, params.q))
    e, w = np.concatenate(edges), np.concatenate(weights)
    return WeightedHypergraph.from_arrays(n, d, e[w > 0], w[w > 0]), truth


def _class_values(params, rng, count, pv):
    if params.weight_kind == "bernoulli":
        return np.ones(count)
    return rng.uniform(0.0, 2.0 * pv, size=count)


def _from_blocks(n, d, edges, weights, observed=None, censored=False):
    e = np.concatenate(edges) if edges else np.zeros((0, d), dtype=np.int64)
    w = np.concatenate(weights) if weights else np.zeros(0)
    ob = np.concatenate(observed) if observed is not None and observed else None
    return WeightedHypergraph.from_arrays(n, d, e, w, ob, censored=censored)


# --- censored block model -------------------------------------------------


@dataclass(frozen=True)
class CbmParams:
    n: int
    d: int
    theta: float
    alpha: float

    def __post_init__(self):
        if self.d < 2:
            raise InvalidParams("d must be >= 2")
        if not 0 < self.theta < 0.5:
            raise InvalidParams("theta must lie in (0, 1/2)")
        if not 0 <= self.alpha <= 1:
            raise InvalidParams("alpha must lie in [0, 1]")


def cbm_information_limit(n: int, d: int, theta: float) -> float:
    """Edge budget C(n, d) * alpha at which ML recovery becomes possible."""
    return 2 ** (d - 2) / d * n * log(n) / (np.sqrt(1 - theta) - np.sqrt(theta)) ** 2


def balanced_partition(n: int, k: int) -> Partition:
    """Contiguous groups whose sizes differ by at most one."""
    base, extra = divmod(n, k)
    return Partition.from_sizes([base + (j < extra) for j in range(k)])


def sample_censored_bm(params: CbmParams, truth: Partition, seed: int,
                       store_erasures: bool = False,
                       max_edges: int = DEFAULT_MAX_EDGES) -> WeightedHypergraph:
    """Draw binary homogeneity measurements with erasures.

    Observed edges (weight 0 or 1) are stored; erased edges are stored with
    ``observed=False`` only when ``store_erasures`` is set, otherwise they are
    left out and the result is flagged ``censored`` so absence reads as erasure.
    """
    if truth.k != 2:
        raise InvalidParams("the censored block model has exactly k = 2 groups")
    if truth.n != params.n:
        raise InvalidParams("truth partition size differs from n")
    n, d, a, th = params.n, params.d, params.alpha, params.theta
    labels = truth.labels
    total = comb(n, d)
    if total <= ENUMERATION_LIMIT:
        edges, weights, observed = [], [], []
        for block in iter_edge_blocks(n, d):
            seen = edge_uniforms(seed, STREAM_CBM, block) < a
            flip = edge_uniforms(seed, STREAM_CBM + 1, block) < th
            w = (_is_homogeneous(labels, block) ^ flip).astype(np.float64)
            keep = np.ones_like(seen) if store_erasures else seen
            edges.append(block[keep])
            weights.append(np.where(seen, w, 0.0)[keep])
            observed.append(seen[keep])
        return _from_blocks(n, d, edges, weights, observed, censored=True)

    if store_erasures:
        raise BudgetExceeded("cannot store erasures without enumerating every edge")
    if total * a > max_edges:
        raise BudgetExceeded(f"expected {total * a:.3g} observed edges exceeds {max_edges}")
    rng = seeded_rng(seed, STREAM_CBM)
    cnt = int(rng.binomial(total, a))
    e = _random_subsets(rng, n, d, cnt)
    flip = rng.random(cnt) < th
    w = (_is_homogeneous(labels, e) ^ flip).astype(np.float64)
    return WeightedHypergraph.from_arrays(n, d, e, w, censored=True)


# --- planted clique -------------------------------------------------------


def sample_planted_clique(n: int, d: int, s: int, seed: int):
    """Nodes 1..s form the clique (label 1); every clique edge is present, every
    other edge independently with probability 1/2.  Returns ``(H, truth)``."""
    if not d <= s <= n:
        raise InvalidParams(f"clique size s={s} must satisfy d={d} <= s <= n={n}")
    if comb(n, d) > ENUMERATION_LIMIT:
        raise BudgetExceeded("planted clique hypergraphs are dense; C(n, d) too large")
    edges = []
    for block in iter_edge_blocks(n, d):
        inside = block[:, -1] < s
        keep = inside | (edge_uniforms(seed, STREAM_CLIQUE, block) < 0.5)
        edges.append(block[keep])
    e = np.concatenate(edges)
    truth = Partition.from_sizes([s, n - s]) if s < n else Partition(np.zeros(n, dtype=np.int64), 2)
    return WeightedHypergraph.from_arrays(n, d, e, np.ones(e.shape[0])), truth


# --- subspace clustering --------------------------------------------------


@dataclass(frozen=True)
class SubspaceParams:
    """Union-of-subspaces point model plus the sketch sampling rate.

    ``s_n=None`` selects the default budget C(n, d) s_n = 5 k^(d-1) n log n / d.
    """

    k: int
    m: int
    ell: int
    points_per_cluster: int
    sigma: float
    d: int
    s_n: float | None = None
    affine: bool = False

    def __post_init__(self):
        if not 1 <= self.m < self.ell:
            raise InvalidParams("subspace dimension must satisfy 1 <= m < ell")
        if self.d < self.m + 2:
            raise InvalidParams("edge size must satisfy d >= m + 2")
        if self.k < 1 or self.points_per_cluster < 1:
            raise InvalidParams("need k >= 1 and points_per_cluster >= 1")
        if self.sigma < 0:
            raise InvalidParams("sigma must be >= 0")
        if self.s_n is not None and not 0 <= self.s_n <= 1:
            raise InvalidParams("s_n must lie in [0, 1]")

    @property
    def n(self) -> int:
        return self.k * self.points_per_cluster

    @property
    def sampling_rate(self) -> float:
        if self.s_n is not None:
            return float(self.s_n)
        return min(1.0, default_sketch_budget(self.n, self.d, self.k) / comb(self.n, self.d))

    @property
    def default_tau(self) -> float:
        return self.sigma * np.sqrt(self.d) if self.sigma > 0 else 1.0


def default_sketch_budget(n: int, d: int, k: int) -> float:
    return 5 * k ** (d - 1) * n * log(n) / d


@dataclass(frozen=True, eq=False)
class PointCloud:
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2:
            raise InvalidParams("points must be an (n, ell) array")
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]


def sample_subspace_points(params: SubspaceParams, seed: int):
    """Points near k random m-dimensional subspaces of R^ell; returns ``(cloud, truth)``."""
    rng = seeded_rng(seed, STREAM_POINTS)
    blocks = []
    for _ in range(params.k):
        basis, _ = np.linalg.qr(rng.standard_normal((params.ell, params.m)))
        coef = rng.uniform(-1.0, 1.0, size=(params.points_per_cluster, params.m))
        pts = coef @ basis.T
        if params.affine:
            pts = pts + rng.standard_normal(params.ell) / np.sqrt(params.ell)
        blocks.append(pts)
    pts = np.concatenate(blocks)
    pts = pts + params.sigma * rng.standard_normal(pts.shape)
    return PointCloud(pts), Partition.from_sizes([params.points_per_cluster] * params.k)


def affine_fit_errors(batch: np.ndarray, m: int) -> np.ndarray:
    """RMS distance of each group of points to its best-fit m-dimensional affine flat.

    ``batch`` has shape (B, d, ell).  The squared residual is the energy of the
    centered points outside their top-m principal directions; the result is
    sqrt(residual / d).
    """
    x = batch - batch.mean(axis=1, keepdims=True)
    d, ell = x.shape[1], x.shape[2]
    if d <= ell:
        gram = np.einsum("bik,bjk->bij", x, x)
    else:
        gram = np.einsum("bki,bkj->bij", x, x)
    ev = np.linalg.eigvalsh(gram)
    # Gram eigenvalues at rounding level are zero; sqrt would inflate them to ~1e-8
    floor = ev[:, -1:] * (10 * max(d, ell) * np.finfo(np.float64).eps)
    tail = ev[:, : max(ev.shape[1] - m, 0)]
    resid = np.where(tail > floor, tail, 0.0).sum(axis=1)
    return np.sqrt(resid / d)


def fitting_weight(pts, m: int, tau: float = 1.0) -> float:
    """exp(-fit / tau) for d points in R^ell, fit being the affine m-flat RMS residual."""
    pts = np.asarray(pts, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] < m + 2:
        raise InvalidParams(f"need at least m + 2 = {m + 2} points")
    if tau <= 0:
        raise InvalidParams("tau must be positive")
    return float(np.exp(-affine_fit_errors(pts[None], m)[0] / tau))


def sketch_hypergraph(cloud: PointCloud, params: SubspaceParams, seed: int,
                      tau: float | None = None, max_edges: int = DEFAULT_MAX_EDGES,
                      chunk: int = 50_000) -> WeightedHypergraph:
    """Keep each d-subset of points with probability s_n and weight it by its fit."""
    n, d = cloud.n, params.d
    s = params.sampling_rate
    tau = params.default_tau if tau is None else float(tau)
    total = comb(n, d)
    if total * s > max_edges:
        raise BudgetExceeded(f"expected {total * s:.3g} sketched edges exceeds {max_edges}")
    if s <= 0:
        return WeightedHypergraph.empty(n, d)
    if total <= ENUMERATION_LIMIT:
        picked = [b[edge_uniforms(seed, STREAM_SKETCH, b) < s] for b in iter_edge_blocks(n, d)]
        edges = np.concatenate(picked)
    else:
        rng = seeded_rng(seed, STREAM_SKETCH)
        edges = _random_subsets(rng, n, d, int(rng.binomial(total, s)))
    weights = np.empty(edges.shape[0])
    for start in range(0, edges.shape[0], chunk):
        sl = slice(start, start + chunk)
        fit = affine_fit_errors(cloud.points[edges[sl]], params.m)
        weights[sl] = np.exp(-fit / tau)
    return WeightedHypergraph.from_arrays(n, d, edges, weights)
