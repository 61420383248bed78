"""Uniform weighted hypergraphs, partitions and their text formats.

Everything that crosses a file or CLI boundary uses 1-based node ids and
labels.  The array attributes (``edges``, ``labels``) are 0-based so they can
be used directly as numpy indices.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from math import comb
from typing import Iterable, Iterator, Mapping, Sequence, TextIO

import numpy as np

from .errors import (
    BadEdgeSize,
    DuplicateNode,
    InvalidParams,
    InvalidPartition,
    NodeOutOfRange,
    ParseError,
    WeightOutOfRange,
)

Hyperedge = tuple  # strictly increasing tuple of 1-based node ids

CENSORED_PRAGMA = "# censored"


def canonical_edge(nodes: Iterable[int], n: int, d: int) -> Hyperedge:
    """Return the sorted form of ``nodes`` after validating it as a d-edge on [1, n]."""
    nodes = tuple(int(v) for v in nodes)
    if len(nodes) != d:
        raise BadEdgeSize(f"edge {nodes} has {len(nodes)} nodes, expected {d}")
    for v in nodes:
        if not 1 <= v <= n:
            raise NodeOutOfRange(f"node {v} outside [1, {n}]")
    out = tuple(sorted(nodes))
    for a, b in zip(out, out[1:]):
        if a == b:
            raise DuplicateNode(f"node {a} repeated in edge {nodes}")
    return out


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class WeightedHypergraph:
    """A d-uniform hypergraph on n nodes with sparse [0, 1] edge weights.

    ``edges`` is an (m, d) array of 0-based node ids, each row strictly
    increasing, rows in lexicographic order.  ``observed`` is False for an
    explicitly recorded erasure.  When ``censored`` is set, an edge that is
    not stored counts as erased rather than as an observed zero.
    """

    n: int
    d: int
    edges: np.ndarray
    weights: np.ndarray
    observed: np.ndarray
    censored: bool = False

    @classmethod
    def from_arrays(cls, n, d, edges, weights, observed=None, censored=False):
        n, d = int(n), int(d)
        if d < 2:
            raise InvalidParams(f"edge size d={d} must be >= 2")
        if n < 1:
            raise InvalidParams(f"node count n={n} must be >= 1")
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, d)
        weights = np.asarray(weights, dtype=np.float64).reshape(-1)
        m = edges.shape[0]
        if weights.shape[0] != m:
            raise InvalidParams("edges and weights differ in length")
        if observed is None:
            observed = np.ones(m, dtype=bool)
        else:
            observed = np.asarray(observed, dtype=bool).reshape(-1)
            if observed.shape[0] != m:
                raise InvalidParams("edges and observed mask differ in length")
        if m:
            edges = np.sort(edges, axis=1)
            if edges[:, 0].min() < 0 or edges[:, -1].max() >= n:
                raise NodeOutOfRange(f"edge node outside [1, {n}]")
            if d > 1 and np.any(edges[:, 1:] == edges[:, :-1]):
                raise DuplicateNode("edge with a repeated node")
            if np.any(~np.isfinite(weights)) or weights.min() < 0 or weights.max() > 1:
                raise WeightOutOfRange("edge weight outside [0, 1]")
            order = np.lexsort(edges.T[::-1])
            edges, weights, observed = edges[order], weights[order], observed[order]
            if m > 1 and np.any(np.all(edges[1:] == edges[:-1], axis=1)):
                raise InvalidParams("duplicate edge")
        weights = np.where(observed, weights, 0.0)
        return cls(n, d, _readonly(np.ascontiguousarray(edges)), _readonly(weights),
                   _readonly(observed), bool(censored))

    @classmethod
    def from_dict(cls, n, d, weights: Mapping[Sequence[int], float], censored=False):
        """Build from ``{edge (1-based): weight}``; a weight of ``None`` marks an erasure."""
        edges, ws, obs = [], [], []
        for e, w in weights.items():
            edges.append([v - 1 for v in canonical_edge(e, n, d)])
            obs.append(w is not None)
            ws.append(0.0 if w is None else float(w))
        return cls.from_arrays(n, d, np.array(edges, dtype=np.int64).reshape(-1, d),
                               ws, obs, censored=censored)

    @classmethod
    def empty(cls, n, d, censored=False):
        return cls.from_arrays(n, d, np.zeros((0, d), dtype=np.int64), [], censored=censored)

    def __len__(self):
        return int(self.edges.shape[0])

    def __eq__(self, other):
        if not isinstance(other, WeightedHypergraph):
            return NotImplemented
        return (self.n == other.n and self.d == other.d
                and self.censored == other.censored
                and np.array_equal(self.edges, other.edges)
                and np.array_equal(self.weights, other.weights)
                and np.array_equal(self.observed, other.observed))

    __hash__ = None

    def __repr__(self):
        return (f"WeightedHypergraph(n={self.n}, d={self.d}, stored={len(self)}, "
                f"observed={int(self.observed.sum())}, censored={self.censored})")

    def items(self) -> Iterator[tuple[Hyperedge, float | None]]:
        """Yield ``(edge, weight)`` pairs with 1-based edges; erasures yield ``None``."""
        for row, w, ob in zip(self.edges, self.weights, self.observed):
            yield tuple(int(v) + 1 for v in row), (float(w) if ob else None)

    def _find(self, edge) -> int:
        e = np.array(canonical_edge(edge, self.n, self.d), dtype=np.int64) - 1
        if not len(self):
            return -1
        # binary search over lexicographically sorted rows
        lo, hi = 0, len(self)
        key = tuple(e)
        while lo < hi:
            mid = (lo + hi) // 2
            if tuple(self.edges[mid]) < key:
                lo = mid + 1
            else:
                hi = mid
        if lo < len(self) and tuple(self.edges[lo]) == key:
            return lo
        return -1

    def weight(self, edge) -> float:
        """Weight of a 1-based edge; absent and erased edges read as 0."""
        i = self._find(edge)
        return float(self.weights[i]) if i >= 0 else 0.0

    def is_observed(self, edge) -> bool:
        i = self._find(edge)
        if i >= 0:
            return bool(self.observed[i])
        return not self.censored

    def subset(self, mask) -> "WeightedHypergraph":
        mask = np.asarray(mask, dtype=bool)
        return WeightedHypergraph(self.n, self.d, _readonly(self.edges[mask]),
                                  _readonly(self.weights[mask]),
                                  _readonly(self.observed[mask]), self.censored)

    @property
    def num_possible_edges(self) -> int:
        return comb(self.n, self.d)


@dataclass(frozen=True, eq=False)
class Partition:
    """Assignment of n nodes to k groups; ``labels`` holds 0-based group ids."""

    labels: np.ndarray
    k: int

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if self.k < 1:
            raise InvalidPartition(f"group count k={self.k} must be >= 1")
        if labels.size and (labels.min() < 0 or labels.max() >= self.k):
            raise InvalidPartition(f"labels must lie in [1, {self.k}]")
        object.__setattr__(self, "labels", _readonly(labels.copy()))

    @classmethod
    def from_sizes(cls, sizes: Sequence[int]) -> "Partition":
        """First ``sizes[0]`` nodes in group 1, the next ``sizes[1]`` in group 2, ..."""
        return cls(np.repeat(np.arange(len(sizes)), sizes), len(sizes))

    @classmethod
    def from_one_based(cls, labels: Sequence[int], k: int | None = None) -> "Partition":
        labels = np.asarray(labels, dtype=np.int64)
        if labels.size and labels.min() < 1:
            raise InvalidPartition("labels must be >= 1")
        if k is None:
            k = int(labels.max()) if labels.size else 1
        return cls(labels - 1, k)

    @property
    def n(self) -> int:
        return int(self.labels.shape[0])

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.k)

    def one_based(self) -> list[int]:
        return [int(v) + 1 for v in self.labels]

    def membership_matrix(self) -> np.ndarray:
        z = np.zeros((self.n, self.k))
        z[np.arange(self.n), self.labels] = 1.0
        return z

    def relabel(self, perm: Sequence[int]) -> "Partition":
        """Apply ``perm`` (0-based, old label -> new label)."""
        return Partition(np.asarray(perm, dtype=np.int64)[self.labels], self.k)

    def __eq__(self, other):
        if not isinstance(other, Partition):
            return NotImplemented
        return self.k == other.k and np.array_equal(self.labels, other.labels)

    __hash__ = None

    def __repr__(self):
        return f"Partition(n={self.n}, k={self.k}, sizes={self.sizes.tolist()})"


# --- text formats ---------------------------------------------------------


def _lines(stream) -> Iterator[tuple[int, str]]:
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    for lineno, raw in enumerate(stream, start=1):
        yield lineno, raw.strip()


def parse_hypergraph(stream: TextIO | str) -> WeightedHypergraph:
    """Read the edge-list format: header ``n d`` then ``i1 ... id w`` per edge.

    ``w`` may be ``x`` for an explicit erasure, which also marks the
    hypergraph as censored, as does a ``# censored`` comment line.
    """
    header = None
    censored = False
    edges, weights, observed = [], [], []
    seen = set()
    for lineno, line in _lines(stream):
        if not line:
            continue
        if line.startswith("#"):
            if line == CENSORED_PRAGMA:
                censored = True
            continue
        parts = line.split()
        if header is None:
            if len(parts) != 2:
                raise ParseError("header must be 'n d'", lineno)
            try:
                n, d = int(parts[0]), int(parts[1])
            except ValueError:
                raise ParseError("header must hold two integers", lineno) from None
            if n < 1 or d < 2:
                raise ParseError(f"invalid header n={n} d={d}", lineno)
            header = (n, d)
            continue
        n, d = header
        if len(parts) != d + 1:
            raise ParseError(f"expected {d} node ids and a weight", lineno)
        try:
            ids = [int(v) for v in parts[:d]]
        except ValueError:
            raise ParseError("node ids must be integers", lineno) from None
        try:
            e = canonical_edge(ids, n, d)
        except (BadEdgeSize, DuplicateNode, NodeOutOfRange) as exc:
            raise ParseError(str(exc), lineno) from None
        if e in seen:
            raise ParseError(f"duplicate edge {e}", lineno)
        seen.add(e)
        token = parts[d]
        if token == "x":
            w, ob = 0.0, False
            censored = True
        else:
            try:
                w = float(token)
            except ValueError:
                raise ParseError(f"bad weight {token!r}", lineno) from None
            if not 0.0 <= w <= 1.0:
                raise WeightOutOfRange(f"line {lineno}: weight {w} outside [0, 1]")
            ob = True
        edges.append([v - 1 for v in e])
        weights.append(w)
        observed.append(ob)
    if header is None:
        raise ParseError("missing header", None)
    n, d = header
    return WeightedHypergraph.from_arrays(
        n, d, np.array(edges, dtype=np.int64).reshape(-1, d), weights, observed,
        censored=censored)


def serialize_hypergraph(h: WeightedHypergraph) -> str:
    out = [f"{h.n} {h.d}"]
    if h.censored:
        out.append(CENSORED_PRAGMA)
    for row, w, ob in zip(h.edges.tolist(), h.weights.tolist(), h.observed.tolist()):
        ids = " ".join(str(v + 1) for v in row)
        out.append(f"{ids} {repr(float(w)) if ob else 'x'}")
    return "\n".join(out) + "\n"


def parse_partition(stream: TextIO | str, k: int | None = None) -> Partition:
    """Read ``i label`` lines (1-based); every node 1..n must appear once."""
    pairs = {}
    for lineno, line in _lines(stream):
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError("expected 'i label'", lineno)
        try:
            i, lab = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError("node id and label must be integers", lineno) from None
        if i in pairs:
            raise ParseError(f"node {i} listed twice", lineno)
        if lab < 1:
            raise ParseError(f"label {lab} must be >= 1", lineno)
        pairs[i] = lab
    n = len(pairs)
    if sorted(pairs) != list(range(1, n + 1)):
        raise ParseError("node ids must cover 1..n exactly", None)
    return Partition.from_one_based([pairs[i] for i in range(1, n + 1)], k)


def serialize_partition(part: Partition) -> str:
    return "".join(f"{i} {lab}\n" for i, lab in enumerate(part.one_based(), start=1))
