"""Permutation arithmetic: overlap, rencontres counting, and the ordered-pair
cycle decomposition used by the union-bound analysis.

Composition is the standard right-to-left convention:
``compose(f, g)(i) == f(g(i))``.  The relative permutation of a candidate
``pi`` against a reference ``pi_star`` is ``p = pi o pi_star^{-1}``; its
fixed-point fraction equals the overlap of the two permutations.

The decomposition splits the ordered pairs S = {(i, j) : i != j} into

- S1:   pairs whose first coordinate is fixed by p,
- S2^1: pairs that p maps to their own mirror, (p(i), p(j)) == (j, i),
- S2^2: everything else, partitioned into orbits ("cycles") of the map
        (i, j) -> (p(i), p(j)).

Each orbit is classified: G1 if it contains the mirror of its members, G3 if
all second coordinates agree (the second coordinate is a fixed point of p),
G2 otherwise (mirrored pairs then sit in a twin orbit of the same size).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import CapacityError, ParameterError

# Above this node count the exact big-integer counts are skipped and only the
# log-domain values are produced (the Fano bound needs only log ratios).
EXACT_COUNT_LIMIT = 170

# decompose materializes all n*(n-1) ordered pairs.
_DECOMPOSE_PAIR_LIMIT = 100_000_000


class Permutation:
    """A bijection on {0, ..., n-1}, stored as the image array."""

    __slots__ = ("_image",)

    def __init__(self, image: Iterable[int] | np.ndarray):
        arr = np.asarray(list(image) if not isinstance(image, np.ndarray) else image, dtype=np.int64)
        if arr.ndim != 1 or arr.size == 0:
            raise ParameterError("a permutation needs a non-empty 1-d image list")
        if not np.array_equal(np.sort(arr), np.arange(arr.size)):
            raise ParameterError("image list is not a bijection on {0,...,n-1}")
        arr = arr.copy()
        arr.setflags(write=False)
        self._image = arr

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(np.arange(n))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "Permutation":
        return cls(rng.permutation(n))

    @property
    def image(self) -> tuple[int, ...]:
        return tuple(int(x) for x in self._image)

    def as_array(self) -> np.ndarray:
        """Read-only int64 image array."""
        return self._image

    def __len__(self) -> int:
        return self._image.size

    def __call__(self, i: int) -> int:
        return int(self._image[i])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Permutation):
            return NotImplemented
        return np.array_equal(self._image, other._image)

    def __hash__(self) -> int:
        return hash(self._image.tobytes())

    def __repr__(self) -> str:
        return f"Permutation({list(self._image)})"

    def inverse(self) -> "Permutation":
        inv = np.empty_like(self._image)
        inv[self._image] = np.arange(self._image.size)
        return Permutation(inv)

    def compose(self, other: "Permutation") -> "Permutation":
        """self o other: apply ``other`` first."""
        if len(self) != len(other):
            raise ParameterError("cannot compose permutations of different sizes")
        return Permutation(self._image[other._image])

    def fixed_point_count(self) -> int:
        return int(np.count_nonzero(self._image == np.arange(self._image.size)))


def overlap(pi: Permutation, pi_star: Permutation) -> float:
    """Fraction of indices where the two permutations agree.

    Equals the fixed-point fraction of pi o pi_star^{-1}.
    """
    if len(pi) != len(pi_star):
        raise ParameterError("overlap needs permutations of equal length")
    return float(np.count_nonzero(pi.as_array() == pi_star.as_array())) / len(pi)


# -- rencontres counting ------------------------------------------------------

_derangements: list[int] = [1, 0]


def derangements(m: int) -> int:
    """Number of permutations of m elements with no fixed point (exact)."""
    if m < 0:
        raise ParameterError("derangements needs m >= 0")
    while len(_derangements) <= m:
        k = len(_derangements)
        _derangements.append((k - 1) * (_derangements[k - 1] + _derangements[k - 2]))
    return _derangements[m]


def rencontres(n: int, k: int) -> int:
    """Number of permutations of n elements with exactly k fixed points (exact)."""
    if not 0 <= k <= n:
        raise ParameterError(f"need 0 <= k <= n, got k={k}, n={n}")
    return math.comb(n, k) * derangements(n - k)


def log_rencontres(n: int, k: int) -> float:
    """log of the rencontres number, valid far beyond the exact-count range.

    Fixed-point-free counts are taken exactly up to 20 misplaced elements;
    beyond that D_m = m!/e holds to within 1/(m+1)!, far below float
    precision.
    """
    if not 0 <= k <= n:
        raise ParameterError(f"need 0 <= k <= n, got k={k}, n={n}")
    m = n - k
    log_comb = math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(m + 1)
    if m <= 20:
        d = derangements(m)
        return log_comb + math.log(d) if d else -math.inf
    return log_comb + math.lgamma(m + 1) - 1.0


def ceil_snap(x: float, tol: float = 1e-9) -> int:
    """ceil(x) with values within tol of an integer snapped to that integer.

    Products like n*alpha are carried in floats; without the snap, a value
    that is mathematically integral can round up one step too far.
    """
    r = round(x)
    if abs(x - r) <= tol * max(1.0, abs(x)):
        return int(r)
    return math.ceil(x)


@dataclass(frozen=True)
class MAlphaResult:
    """Count of permutations at overlap >= alpha, with its log companions.

    ``exact`` is the big-integer count when n <= EXACT_COUNT_LIMIT, else None
    (``is_exact`` records which mode produced the log values).  ``log_ratio``
    is log(n! / m_alpha).
    """

    n: int
    alpha: float
    k_min: int
    exact: int | None
    log_m_alpha: float
    log_ratio: float
    is_exact: bool


def m_alpha(n: int, alpha: float) -> MAlphaResult:
    """Count permutations of n elements with at least ceil(n*alpha) fixed points."""
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    if not 0.0 < alpha <= 1.0:
        raise ParameterError(f"alpha must be in (0, 1], got {alpha}")
    k_min = max(ceil_snap(n * alpha), 1)  # alpha > 0 forces at least one fixed point
    if k_min > n:
        raise ParameterError(f"ceil(n*alpha)={k_min} exceeds n={n}")
    if n <= EXACT_COUNT_LIMIT:
        exact = sum(rencontres(n, k) for k in range(k_min, n + 1))
        log_m = math.log(exact)
        log_ratio = math.lgamma(n + 1) - log_m if exact else math.inf
        return MAlphaResult(n, alpha, k_min, exact, log_m, log_ratio, True)
    logs = [log_rencontres(n, k) for k in range(k_min, n + 1)]
    peak = max(logs)
    log_m = peak + math.log(math.fsum(math.exp(x - peak) for x in logs))
    return MAlphaResult(n, alpha, k_min, None, log_m, math.lgamma(n + 1) - log_m, False)


# -- ordered-pair cycle decomposition -----------------------------------------

GROUP_MIRROR_IN_CYCLE = "G1"
GROUP_MIRROR_IN_TWIN = "G2"
GROUP_FIXED_SECOND = "G3"


@dataclass(frozen=True)
class PairCycle:
    group: str
    pairs: tuple[tuple[int, int], ...]

    @property
    def size(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True)
class CycleDecomposition:
    """S1 / S2^1 / S2^2 split of the ordered pairs, with the orbit census.

    ``census`` maps each orbit size k to the triple (l_k, m_k, n_k): the
    number of size-k orbits of groups G1, G2 and G3 respectively.
    """

    n: int
    eps: float
    s1: tuple[tuple[int, int], ...]
    s21: tuple[tuple[int, int], ...]
    cycles: tuple[PairCycle, ...]
    census: dict[int, tuple[int, int, int]]

    @property
    def s22_size(self) -> int:
        return sum(c.size for c in self.cycles)


def decompose(pi: Permutation, pi_star: Permutation) -> CycleDecomposition:
    """Decompose the ordered pairs under p = pi o pi_star^{-1}.

    Cost and memory are Theta(n^2); intended for analysis at modest n.
    """
    if len(pi) != len(pi_star):
        raise ParameterError("decompose needs permutations of equal length")
    n = len(pi)
    if n * (n - 1) > _DECOMPOSE_PAIR_LIMIT:
        raise CapacityError(f"decompose materializes n*(n-1) pairs; n={n} is too large")
    p = pi.compose(pi_star.inverse()).as_array()
    fixed = p == np.arange(n)
    eps = float(np.count_nonzero(fixed)) / n

    s1: list[tuple[int, int]] = []
    s21: list[tuple[int, int]] = []
    s22: list[tuple[int, int]] = []
    for i in range(n):
        if fixed[i]:
            s1.extend((i, j) for j in range(n) if j != i)
            continue
        pi_i = int(p[i])
        for j in range(n):
            if j == i:
                continue
            if pi_i == j and p[j] == i:
                s21.append((i, j))
            else:
                s22.append((i, j))

    visited: set[tuple[int, int]] = set()
    cycles: list[PairCycle] = []
    census: dict[int, list[int]] = {}
    for start in s22:
        if start in visited:
            continue
        orbit = [start]
        cur = (int(p[start[0]]), int(p[start[1]]))
        while cur != start:
            orbit.append(cur)
            cur = (int(p[cur[0]]), int(p[cur[1]]))
        visited.update(orbit)
        members = set(orbit)
        if (start[1], start[0]) in members:
            group = GROUP_MIRROR_IN_CYCLE
        elif all(j == start[1] for _, j in orbit):
            group = GROUP_FIXED_SECOND
        else:
            group = GROUP_MIRROR_IN_TWIN
        cycles.append(PairCycle(group, tuple(orbit)))
        counts = census.setdefault(len(orbit), [0, 0, 0])
        counts[
            {GROUP_MIRROR_IN_CYCLE: 0, GROUP_MIRROR_IN_TWIN: 1, GROUP_FIXED_SECOND: 2}[group]
        ] += 1

    return CycleDecomposition(
        n=n,
        eps=eps,
        s1=tuple(s1),
        s21=tuple(s21),
        cycles=tuple(cycles),
        census={k: tuple(v) for k, v in sorted(census.items())},
    )


def census_rows(dec: CycleDecomposition) -> list[dict[str, int | str]]:
    """Flatten the census to [{group, k, count}] rows for serialization."""
    rows: list[dict[str, int | str]] = []
    for k, (l_k, m_k, n_k) in dec.census.items():
        for group, count in (
            (GROUP_MIRROR_IN_CYCLE, l_k),
            (GROUP_MIRROR_IN_TWIN, m_k),
            (GROUP_FIXED_SECOND, n_k),
        ):
            if count:
                rows.append({"group": group, "k": k, "count": count})
    return rows
