"""End-to-end clustering: HSC, HSCLR and the censored-model likelihood refinement."""

from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from math import comb, log

import numpy as np

from .errors import InvalidParams, InvalidWeights
from .generators import STREAM_SPLIT, edge_uniforms
from .hypergraph import Partition, WeightedHypergraph
from .spectral import (
    EIGEN_MODES,
    cluster_rows,
    default_c_thr,
    similarity_matrix,
    top_k_eigenvectors,
    trim,
)


@dataclass(frozen=True)
class HscConfig:
    """Settings for hypergraph spectral clustering.

    ``c_thr=None`` picks the default for the hypergraph's edge size.
    ``epsilon`` is the k-means approximation target; Lloyd restarts carry no
    guarantee, so it is recorded for reporting only.
    """

    k: int
    c_thr: float | None = None
    restarts: int = 10
    eigen_mode: str = "assortative"
    epsilon: float = 0.05

    def __post_init__(self):
        if self.k < 2:
            raise InvalidParams("k must be >= 2")
        if self.restarts < 1:
            raise InvalidParams("restarts must be >= 1")
        if self.eigen_mode not in EIGEN_MODES:
            raise InvalidParams(f"eigen mode must be one of {EIGEN_MODES}")
        if self.c_thr is not None and self.c_thr <= 0:
            raise InvalidParams("c_thr must be positive")


@dataclass(frozen=True)
class HsclrConfig:
    hsc: HscConfig
    beta: float | None = None   # None: log log n / log n, clipped to [0.05, 0.5]

    def __post_init__(self):
        if self.beta is not None and not 0 < self.beta < 1:
            raise InvalidParams("beta must lie in (0, 1)")


def default_beta(n: int) -> float:
    if n < 3:
        return 0.05
    return float(np.clip(log(log(n)) / log(n), 0.05, 0.5))


@contextmanager
def _timed(timings, key):
    t0 = time.perf_counter()
    yield
    if timings is not None:
        timings[key] = timings.get(key, 0.0) + time.perf_counter() - t0


def spectral_partition(a0: np.ndarray, cfg: HscConfig, seed: int,
                       removed=(), timings=None) -> Partition:
    """Cluster the rows of the top-k eigenvectors of an already trimmed matrix.

    Rows in ``removed`` take the label of the center nearest to the origin.
    """
    n = a0.shape[0]
    with _timed(timings, "eigen"):
        emb = top_k_eigenvectors(a0, cfg.k, mode=cfg.eigen_mode, seed=seed)
    keep = np.ones(n, dtype=bool)
    keep[np.asarray(removed, dtype=np.int64)] = False
    labels = np.zeros(n, dtype=np.int64)
    with _timed(timings, "kmeans"):
        if keep.any():
            rc = cluster_rows(emb.vectors[keep], cfg.k, restarts=cfg.restarts, seed=seed)
            labels[keep] = rc.partition.labels
            if not keep.all():
                labels[~keep] = int(np.argmin((rc.centers ** 2).sum(axis=1)))
    return Partition(labels, cfg.k)


def hsc(h: WeightedHypergraph, cfg: HscConfig, seed: int = 0, timings=None) -> Partition:
    """Similarity matrix, trimming, top-k eigenvectors, k-means on the rows."""
    with _timed(timings, "build"):
        a = similarity_matrix(h)
        c_thr = cfg.c_thr if cfg.c_thr is not None else default_c_thr(h.d)
        a0, removed = trim(a, c_thr)
    return spectral_partition(a0, cfg, seed, removed, timings)


def split_edges(h: WeightedHypergraph, beta: float, seed: int):
    """Send each stored edge to the first child with probability ``beta``."""
    if not 0 <= beta <= 1:
        raise InvalidParams("beta must lie in [0, 1]")
    first = edge_uniforms(seed, STREAM_SPLIT, h.edges) < beta
    return h.subset(first), h.subset(~first)


def _choose(scores: np.ndarray, current: np.ndarray) -> np.ndarray:
    """Row-wise argmax; the current label wins ties, then the lowest index.

    Rows where every score is -inf keep their current label.
    """
    n = scores.shape[0]
    best = scores.max(axis=1)
    out = scores.argmax(axis=1)
    cur_score = scores[np.arange(n), current]
    keep = (cur_score == best) | np.isneginf(best)
    out[keep] = current[keep]
    return out


def refine(h2: WeightedHypergraph, phi: Partition, k: int | None = None) -> Partition:
    """One simultaneous local-refinement pass over every node.

    Node i moves to the group j maximising the average weight of the edges of
    ``h2`` that join i to d-1 nodes of group j under ``phi``.  Absent edges
    count as weight 0 in that average; for a censored hypergraph they are
    erasures and are left out of it.  Groups offering no such edge are skipped.
    """
    k = phi.k if k is None else k
    if phi.n != h2.n:
        raise InvalidParams("partition size differs from the hypergraph")
    n, d = h2.n, h2.d
    lab = phi.labels
    use = h2.observed
    e, w = h2.edges[use], h2.weights[use]
    num = np.zeros((n, k))
    den = np.zeros((n, k))
    le = lab[e]
    for a in range(d):
        others = np.delete(le, a, axis=1)
        same = np.all(others == others[:, :1], axis=1)
        idx = (e[same, a], others[same, 0])
        np.add.at(num, idx, w[same])
        if h2.censored:
            np.add.at(den, idx, 1.0)
    if not h2.censored:
        sizes = np.bincount(lab, minlength=k)
        pool = sizes[None, :] - (lab[:, None] == np.arange(k)[None, :])
        den = np.vectorize(lambda s: comb(int(s), d - 1), otypes=[float])(pool)
    with np.errstate(divide="ignore", invalid="ignore"):
        scores = np.where(den > 0, num / np.where(den > 0, den, 1.0), -np.inf)
    return Partition(_choose(scores, lab), k)


def hsclr(h: WeightedHypergraph, cfg: HsclrConfig, seed: int = 0, timings=None,
          stages: dict | None = None) -> Partition:
    """Split the edges, cluster the first part with HSC, refine with the second.

    When ``stages`` is given it receives the intermediate HSC estimate under
    the key ``"hsc"``.
    """
    beta = cfg.beta if cfg.beta is not None else default_beta(h.n)
    h1, h2 = split_edges(h, beta, seed)
    phi = hsc(h1, cfg.hsc, seed, timings)
    if stages is not None:
        stages["hsc"] = phi
    with _timed(timings, "refine"):
        return refine(h2, phi, cfg.hsc.k)


# --- censored block model -------------------------------------------------


def _binary_observations(h: WeightedHypergraph):
    if h.d < 2:
        raise InvalidParams("d must be >= 2")
    e, w = h.edges[h.observed], h.weights[h.observed]
    if np.any((w != 0) & (w != 1)):
        raise InvalidWeights("observed weights must be 0 or 1")
    return e, w.astype(bool)


def _check_binary_partition(h, x: Partition):
    if x.k != 2:
        raise InvalidParams("censored-model routines need k = 2")
    if x.n != h.n:
        raise InvalidParams("partition size differs from the hypergraph")


def hamming_objective(h: WeightedHypergraph, x: Partition) -> int:
    """Number of observed edges whose weight disagrees with "all nodes share a label"."""
    _check_binary_partition(h, x)
    e, w = _binary_observations(h)
    le = x.labels[e]
    f = np.all(le == le[:, :1], axis=1)
    return int(np.count_nonzero(f != w))


def ml_refine_cbm(h: WeightedHypergraph, x: Partition) -> Partition:
    """Flip every node whose flip would not increase the Hamming objective.

    Decisions are made simultaneously against the input labelling; node i
    keeps its label only when flipping it alone would strictly increase the
    objective.
    """
    _check_binary_partition(h, x)
    e, w = _binary_observations(h)
    lab = x.labels
    le = lab[e]
    f = np.all(le == le[:, :1], axis=1)
    before = (f != w).astype(np.int64)
    delta = np.zeros(h.n, dtype=np.int64)
    for a in range(h.d):
        others = np.delete(le, a, axis=1)
        same = np.all(others == others[:, :1], axis=1)
        f_flip = same & (others[:, 0] != le[:, a])
        np.add.at(delta, e[:, a], (f_flip != w).astype(np.int64) - before)
    out = np.where(delta > 0, lab, 1 - lab)
    return Partition(out, 2)


def hsclr_ml(h: WeightedHypergraph, cfg: HscConfig, seed: int = 0, timings=None,
             stages: dict | None = None) -> Partition:
    """HSC on the hypergraph with erasures read as 0, then one likelihood pass."""
    if cfg.k != 2:
        raise InvalidParams("the censored-model pipeline needs k = 2")
    phi = hsc(h, cfg, seed, timings)
    if stages is not None:
        stages["hsc"] = phi
    with _timed(timings, "refine"):
        return ml_refine_cbm(h, phi)
