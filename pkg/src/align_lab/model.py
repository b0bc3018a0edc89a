"""Correlated Erdos-Renyi pair model.

Conventions used throughout the package:

- A model point is ``(n, q, s)``: ``n`` nodes, marginal edge probability
  ``q``, subsampling (retention) probability ``s``.  A parent graph is drawn
  as ER(n, q/s); two copies are independently subsampled edge-by-edge with
  retention probability ``s``, giving graphs A and B'.  B is B' with its
  labels pushed through a uniform random permutation.  Marginally both A and
  B are ER(n, q); matched edge indicators have covariance ``q*(s-q)``.
- The typical regime is ``0 < q < s <= 1`` (positively correlated pair).
  The closure ``0 <= q <= s <= 1`` is accepted wherever the formulas stay
  defined, so the boundary cases q=0, s=q and s=1 can be probed by the
  bound evaluators.  ``generate`` additionally requires q > 0.
- Node labels are 0-indexed everywhere, in memory and on disk.
- All randomness flows through a numpy ``Generator`` backed by the PCG64
  bit generator (stream stability guaranteed by numpy's RNG policy), created
  from an explicit 64-bit seed via :func:`make_rng`.

A draw consumes random variates in a fixed, documented order: parent edge
slots (geometric skipping), retention coins for copy A, retention coins for
copy B', then the permutation.  Identical ``(params, seed)`` therefore gives
a bit-identical instance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, ParameterError
from .perms import Permutation

# Refuse to materialize parent graphs whose expected edge count exceeds this.
DEFAULT_MAX_EDGES = 200_000_000

_GEOM_BATCH_MIN = 1024


def make_rng(seed: int) -> np.random.Generator:
    """The package-wide RNG: PCG64 seeded with an explicit integer."""
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class ModelParams:
    """A correlated Erdos-Renyi parameter point (n, q, s).

    Accepts the closed region n >= 2, 0 <= q <= s <= 1, s > 0.  The strict
    inequalities of the typical regime (q > 0, s > q) are demanded only by
    the operations that need them.
    """

    n: int
    q: float
    s: float

    def __post_init__(self) -> None:
        if not isinstance(self.n, (int, np.integer)) or isinstance(self.n, bool):
            raise ParameterError(f"n must be an integer, got {self.n!r}")
        if self.n < 2:
            raise ParameterError(f"n must be >= 2, got {self.n}")
        for name, value in (("q", self.q), ("s", self.s)):
            if not math.isfinite(value):
                raise ParameterError(f"{name} must be finite, got {value!r}")
        if not 0.0 <= self.q <= 1.0:
            raise ParameterError(f"q must be in [0, 1], got {self.q}")
        if not 0.0 < self.s <= 1.0:
            raise ParameterError(f"s must be in (0, 1], got {self.s}")
        if self.q > self.s:
            raise ParameterError(f"q must not exceed s, got q={self.q} > s={self.s}")

    @property
    def nqs(self) -> float:
        return self.n * self.q * self.s

    @property
    def parent_p(self) -> float:
        """Edge probability q/s of the parent graph."""
        return self.q / self.s


@dataclass(frozen=True)
class PairDistribution:
    """Distribution of a {0,1}x{0,1} edge-indicator pair.

    Cell (x, y) is the probability that the first graph has the edge iff
    x == 1 and the second has it iff y == 1.  Both model distributions are
    exchangeable, so p01 == p10 is enforced.
    """

    p00: float
    p01: float
    p10: float
    p11: float

    def __post_init__(self) -> None:
        cells = self.cells()
        for value in cells:
            if not (math.isfinite(value) and -1e-12 <= value <= 1.0 + 1e-12):
                raise ParameterError(f"cell probabilities must be in [0, 1], got {cells}")
        if abs(sum(cells) - 1.0) > 1e-12:
            raise ParameterError(f"cell probabilities must sum to 1, got {sum(cells)!r}")
        if abs(self.p01 - self.p10) > 1e-12:
            raise ParameterError("pair distribution must be exchangeable (p01 == p10)")

    def cells(self) -> tuple[float, float, float, float]:
        return (self.p00, self.p01, self.p10, self.p11)

    def marginal_first(self) -> float:
        return self.p10 + self.p11

    def marginal_second(self) -> float:
        return self.p01 + self.p11

    def covariance(self) -> float:
        return self.p11 - self.marginal_first() * self.marginal_second()

    def correlation(self) -> float:
        pa, pb = self.marginal_first(), self.marginal_second()
        denom = math.sqrt(pa * (1 - pa) * pb * (1 - pb))
        if denom == 0.0:
            raise ParameterError("correlation undefined for a degenerate marginal")
        return self.covariance() / denom


def dist_p(params: ModelParams) -> PairDistribution:
    """Distribution of a matched pair (A_ij, B'_ij): p11 = qs, p01 = q(1-s)."""
    q, s = params.q, params.s
    return PairDistribution(1 - 2 * q + q * s, q * (1 - s), q * (1 - s), q * s)


def dist_q(params: ModelParams) -> PairDistribution:
    """Distribution of an unmatched, independent pair: the product of the marginals."""
    q = params.q
    return PairDistribution(1 - 2 * q + q * q, q * (1 - q), q * (1 - q), q * q)


def kl_divergence(p: PairDistribution, q_dist: PairDistribution) -> float:
    """Kullback-Leibler divergence D(p || q_dist), natural log.

    Cells with p == 0 contribute 0.  A cell with p > 0 but q == 0 makes the
    divergence infinite and raises ParameterError.
    """
    terms = []
    for pc, qc in zip(p.cells(), q_dist.cells()):
        if pc <= 0.0:
            continue
        if qc <= 0.0:
            raise ParameterError(
                f"support violation: p-cell {pc} positive where q-cell is {qc}"
            )
        terms.append(pc * math.log(pc / qc))
    return max(0.0, math.fsum(terms))


class Graph:
    """Undirected simple graph on n labeled nodes, 0-indexed.

    Stored as CSR-style per-node sorted neighbor arrays (``indptr`` of length
    n+1 into ``indices``).  Immutable after construction; safe to share
    across threads and processes.
    """

    __slots__ = ("n", "indptr", "indices", "_edges", "_keys")

    def __init__(self, n: int, indptr: np.ndarray, indices: np.ndarray):
        self.n = int(n)
        self.indptr = indptr
        self.indices = indices
        self._edges: np.ndarray | None = None
        self._keys: np.ndarray | None = None
        indptr.setflags(write=False)
        indices.setflags(write=False)

    # -- construction --------------------------------------------------

    @classmethod
    def from_edges(cls, n: int, edges: np.ndarray | list | tuple) -> "Graph":
        """Build from an iterable of (u, v) pairs in either orientation.

        Rejects self-loops, out-of-range endpoints and duplicate edges.
        """
        if n < 1:
            raise ParameterError(f"graph needs at least one node, got n={n}")
        e = np.asarray(edges, dtype=np.int64)
        if e.size == 0:
            e = e.reshape(0, 2)
        if e.ndim != 2 or e.shape[1] != 2:
            raise ParameterError(f"edges must be an (m, 2) array, got shape {e.shape}")
        if e.size and (e.min() < 0 or e.max() >= n):
            raise ParameterError("edge endpoint out of range")
        u = np.minimum(e[:, 0], e[:, 1])
        v = np.maximum(e[:, 0], e[:, 1])
        if np.any(u == v):
            raise ParameterError("self-loops are not allowed")
        keys = u * n + v
        keys.sort()
        if keys.size and np.any(keys[1:] == keys[:-1]):
            raise ParameterError("duplicate edges are not allowed")

        # CSR from one value sort: src*n + dst orders by (src, dst); dst = key % n
        sym = np.concatenate([u * n + v, v * n + u])
        sym.sort()
        indices = sym % n
        counts = np.bincount(u, minlength=n) + np.bincount(v, minlength=n)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        g = cls(n, indptr, indices)
        g._keys = keys
        return g

    @classmethod
    def empty(cls, n: int) -> "Graph":
        return cls.from_edges(n, np.empty((0, 2), dtype=np.int64))

    @classmethod
    def complete(cls, n: int) -> "Graph":
        iu = np.triu_indices(n, k=1)
        return cls.from_edges(n, np.column_stack(iu))

    # -- queries ---------------------------------------------------------

    @property
    def num_edges(self) -> int:
        return self.indices.size // 2

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, i: int) -> np.ndarray:
        """Sorted neighbor array of node i (a read-only view)."""
        return self.indices[self.indptr[i] : self.indptr[i + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        row = self.neighbors(u)
        pos = np.searchsorted(row, v)
        return bool(pos < row.size and row[pos] == v)

    def edges(self) -> np.ndarray:
        """All edges as an (m, 2) array with u < v, sorted lexicographically."""
        if self._edges is None:
            src = np.repeat(np.arange(self.n, dtype=np.int64), self.degrees())
            mask = src < self.indices
            self._edges = np.column_stack([src[mask], self.indices[mask]])
            self._edges.setflags(write=False)
        return self._edges

    def edge_keys(self) -> np.ndarray:
        """Sorted int64 keys u*n+v of all edges; used for fast membership probes."""
        if self._keys is None:
            e = self.edges()
            keys = e[:, 0] * self.n + e[:, 1]
            keys.sort()
            self._keys = keys
        return self._keys

    def density(self) -> float:
        return self.num_edges / math.comb(self.n, 2) if self.n >= 2 else 0.0

    def relabeled(self, image: np.ndarray) -> "Graph":
        """New graph with every edge (u, v) mapped to (image[u], image[v])."""
        image = np.asarray(image, dtype=np.int64)
        if image.shape != (self.n,):
            raise ParameterError("relabeling must provide one image per node")
        return Graph.from_edges(self.n, image[self.edges()])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
        )

    def __hash__(self):
        return hash((self.n, self.indices.tobytes()))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.num_edges})"


def _er_edge_slots(n: int, p: float, rng: np.random.Generator) -> np.ndarray:
    """Occupied slot indices of an ER(n, p) draw over the C(n,2) slot sequence.

    Slots enumerate the upper triangle row-major: (0,1),...,(0,n-1),(1,2),...
    Sampling skips between occupied slots with geometric gaps, so the cost is
    O(m) rather than O(n^2).  Batch sizes depend only on (n, p) and the drawn
    values, keeping the consumed stream deterministic.
    """
    total = n * (n - 1) // 2
    if p >= 1.0:
        return np.arange(total, dtype=np.int64)
    if p <= 0.0 or total == 0:
        return np.empty(0, dtype=np.int64)
    batch = max(_GEOM_BATCH_MIN, int(total * p * 1.2) + 64)
    chunks = []
    last = -1
    while last < total:
        gaps = rng.geometric(p, size=batch).astype(np.int64)
        gaps[0] += last
        positions = np.cumsum(gaps)
        chunks.append(positions)
        last = int(positions[-1])
    slots = np.concatenate(chunks)
    return slots[slots < total]


def _slots_to_edges(slots: np.ndarray, n: int) -> np.ndarray:
    """Invert row-major upper-triangle slot indices to (i, j) pairs, i < j."""
    if slots.size == 0:
        return np.empty((0, 2), dtype=np.int64)
    t = slots.astype(np.float64)
    b = 2 * n - 1
    i = np.floor((b - np.sqrt(b * b - 8.0 * t)) / 2.0).astype(np.int64)
    # row_start(i) = i*n - i*(i+1)/2; fix off-by-one from float rounding
    row_start = i * n - i * (i + 1) // 2
    too_low = slots >= row_start + (n - 1 - i)
    i[too_low] += 1
    row_start = i * n - i * (i + 1) // 2
    too_high = slots < row_start
    i[too_high] -= 1
    row_start = i * n - i * (i + 1) // 2
    j = slots - row_start + i + 1
    return np.column_stack([i, j])


@dataclass(frozen=True)
class CorrelatedInstance:
    """One draw of the model: graphs A and B plus the hidden permutation."""

    g_a: Graph
    g_b: Graph
    pi_star: Permutation
    params: ModelParams
    seed: int

    def __post_init__(self) -> None:
        if not (self.g_a.n == self.g_b.n == self.params.n == len(self.pi_star)):
            raise ParameterError("instance components disagree on the node count")


def generate(
    params: ModelParams, seed: int, *, max_edges: int = DEFAULT_MAX_EDGES
) -> CorrelatedInstance:
    """Draw a correlated instance; a pure function of (params, seed).

    Requires q > 0 (an empty-graph simulation is useless; the boundary cases
    are still accepted by the distribution helpers).
    """
    if params.q <= 0.0:
        raise ParameterError("generate requires q > 0")
    n = params.n
    expected = math.comb(n, 2) * params.parent_p
    if expected > max_edges:
        raise CapacityError(
            f"expected parent edge count {expected:.3g} exceeds the budget {max_edges}"
        )
    rng = make_rng(seed)
    slots = _er_edge_slots(n, params.parent_p, rng)
    parent = _slots_to_edges(slots, n)
    m = parent.shape[0]
    keep_a = rng.random(m) < params.s
    keep_b = rng.random(m) < params.s
    pi_star = Permutation(rng.permutation(n))
    g_a = Graph.from_edges(n, parent[keep_a])
    g_b = Graph.from_edges(n, pi_star.as_array()[parent[keep_b]])
    return CorrelatedInstance(g_a=g_a, g_b=g_b, pi_star=pi_star, params=params, seed=seed)
