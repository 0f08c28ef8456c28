"""Lattice post-processing: recover ``d`` from ``s`` outcome pairs.

Given pairs ``(j_i, k_i)`` the lattice ``L`` is spanned by the rows of::

    [ j_1   j_2  ...  j_s   1 ]
    [ N     0    ...  0     0 ]
    [ 0     N    ...  0     0 ]
    ...
    [ 0     0    ...  N     0 ]

with ``N = 2**(l+m)``. For good pairs the vector
``({d j_1}_N, ..., {d j_s}_N, d)`` (shifted by multiples of ``N``) lies within
``sqrt(s/4 + 1) * 2**m`` of ``v = ({-2**m k_1}_N, ..., {-2**m k_s}_N, 0)``, so
enumerating all lattice vectors in that ball and testing their last
coordinate finds ``d``.

All distance comparisons are exact: the radius test is carried out as
``4 |u - v|**2 < (s + 4) * 2**(2m)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence

from .arith import centered_reduce
from .errors import DegenerateSubsetError, InvalidArgumentError, InvalidBasisError, TooManyCandidatesError
from .quantum import AlgorithmParams, OutcomePair

Vector = tuple[int, ...]

DEFAULT_DELTA = Fraction(99, 100)
CANDIDATE_CAP = 10**6


@dataclass(frozen=True)
class RecoveryProblem:
    basis: tuple[Vector, ...]
    target: Vector


@dataclass(frozen=True)
class Candidate:
    vector: Vector
    sq_distance: int

    @property
    def c(self) -> int:
        return self.vector[-1]


def lattice_basis(js: Sequence[int], params: AlgorithmParams) -> tuple[Vector, ...]:
    """Basis rows of ``L`` for the given ``j`` values (duplicates allowed)."""
    s = len(js)
    n = params.two_lm
    rows = [tuple(js) + (1,)]
    for i in range(s):
        row = [0] * (s + 1)
        row[i] = n
        rows.append(tuple(row))
    return tuple(rows)


def target_vector(ks: Sequence[int], params: AlgorithmParams) -> Vector:
    return tuple(centered_reduce(-params.two_m * k, params.two_lm) for k in ks) + (0,)


def build_problem(pairs: Sequence[OutcomePair], params: AlgorithmParams) -> RecoveryProblem:
    if not pairs:
        raise InvalidArgumentError("need at least one pair")
    js = [p.j for p in pairs]
    if len(set(js)) != len(js):
        raise DegenerateSubsetError(f"duplicate j values in {js}")
    return RecoveryProblem(lattice_basis(js, params), target_vector([p.k for p in pairs], params))


def _dot(u: Sequence, v: Sequence):
    return sum(a * b for a, b in zip(u, v))


def gram_schmidt(basis: Sequence[Sequence[int]]) -> tuple[list[list[Fraction]], list[Fraction]]:
    """Exact Gram-Schmidt: returns ``(mu, bstar_sq)`` with ``mu[i][j]`` for ``j < i``."""
    n = len(basis)
    bstar: list[list[Fraction]] = []
    mu = [[Fraction(0)] * n for _ in range(n)]
    sq: list[Fraction] = []
    for i in range(n):
        v = [Fraction(x) for x in basis[i]]
        for j in range(i):
            if sq[j] == 0:
                raise InvalidBasisError("basis is rank deficient")
            mu[i][j] = _dot(basis[i], bstar[j]) / sq[j]
            v = [a - mu[i][j] * b for a, b in zip(v, bstar[j])]
        bstar.append(v)
        sq.append(_dot(v, v))
    if sq and sq[-1] == 0:
        raise InvalidBasisError("basis is rank deficient")
    return mu, sq


def _nearest(x: Fraction) -> int:
    return math.floor(x + Fraction(1, 2))


def lll_reduce(basis: Sequence[Sequence[int]], delta: Fraction = DEFAULT_DELTA) -> tuple[Vector, ...]:
    """LLL-reduce an integer basis using exact rational Gram-Schmidt data.

    The output is size-reduced (``|mu_ij| <= 1/2``) and satisfies the Lovasz
    condition with parameter ``delta``.
    """
    delta = Fraction(delta)
    if not Fraction(1, 4) < delta < 1:
        raise InvalidArgumentError(f"delta must lie in (1/4, 1), got {delta}")
    b = [list(map(int, row)) for row in basis]
    n = len(b)
    if n == 0:
        raise InvalidBasisError("empty basis")
    if any(len(row) != len(b[0]) for row in b) or n > len(b[0]):
        raise InvalidBasisError("basis rows must have equal length and be independent")
    mu, sq = gram_schmidt(b)

    k = 1
    while k < n:
        for j in range(k - 1, -1, -1):
            q = _nearest(mu[k][j])
            if q:
                b[k] = [x - q * y for x, y in zip(b[k], b[j])]
                for i in range(j):
                    mu[k][i] -= q * mu[j][i]
                mu[k][j] -= q
        if sq[k] >= (delta - mu[k][k - 1] ** 2) * sq[k - 1]:
            k += 1
            continue
        # swap b[k-1], b[k] and update the Gram-Schmidt data in place
        b[k - 1], b[k] = b[k], b[k - 1]
        m = mu[k][k - 1]
        new_sq = sq[k] + m * m * sq[k - 1]
        mu[k][k - 1] = m * sq[k - 1] / new_sq
        sq[k] = sq[k - 1] * sq[k] / new_sq
        sq[k - 1] = new_sq
        for j in range(k - 1):
            mu[k - 1][j], mu[k][j] = mu[k][j], mu[k - 1][j]
        for i in range(k + 1, n):
            t = mu[i][k]
            mu[i][k] = mu[i][k - 1] - m * t
            mu[i][k - 1] = t + mu[k][k - 1] * mu[i][k]
        k = max(k - 1, 1)
    return tuple(tuple(row) for row in b)


def enumerate_within(
    basis: Sequence[Sequence[int]],
    v: Sequence[int],
    sq_radius_num: int,
    sq_radius_den: int = 1,
    cap: int = CANDIDATE_CAP,
) -> list[Candidate]:
    """All lattice vectors ``u`` with ``den * |u - v|**2 < num``.

    Depth-first enumeration of coefficient vectors from the last Gram-Schmidt
    level down, pruning with exact partial squared distances. Works for any
    basis; a reduced basis keeps the search tree small.
    """
    n = len(basis)
    if n != len(v) or any(len(row) != n for row in basis):
        raise InvalidBasisError("enumeration needs a square basis matching the target length")
    mu, sq = gram_schmidt(basis)
    radius = Fraction(sq_radius_num, sq_radius_den)

    # coordinates of v along the Gram-Schmidt vectors: v = sum_i tv[i] bstar_i
    # obtained from <v, b_i> = sum_{j<=i} mu[i][j] sq[j] tv[j]
    dots = [_dot(v, row) for row in basis]
    tv: list[Fraction] = []
    for i in range(n):
        acc = Fraction(dots[i]) - sum((mu[i][j] * sq[j] * tv[j] for j in range(i)), Fraction(0))
        tv.append(acc / sq[i])

    found: list[Candidate] = []
    x = [0] * n

    def descend(level: int, partial: Fraction) -> None:
        center = tv[level] - sum((x[i] * mu[i][level] for i in range(level + 1, n)), Fraction(0))
        # need partial + sq[level] * (x - center)**2 < radius
        room = (radius - partial) / sq[level]
        if room <= 0:
            return
        half = math.sqrt(float(room))
        lo = math.floor(float(center) - half) - 1
        hi = math.ceil(float(center) + half) + 1
        for xi in range(lo, hi + 1):
            diff = xi - center
            nxt = partial + sq[level] * diff * diff
            if nxt >= radius:
                continue
            x[level] = xi
            if level == 0:
                u = tuple(sum(x[i] * basis[i][c] for i in range(n)) for c in range(len(v)))
                dist = sum((a - b) ** 2 for a, b in zip(u, v))
                if sq_radius_den * dist < sq_radius_num:
                    found.append(Candidate(u, dist))
                    if len(found) > cap:
                        raise TooManyCandidatesError(f"more than {cap} lattice vectors within radius")
            else:
                descend(level - 1, nxt)
        x[level] = 0

    descend(n - 1, Fraction(0))
    found.sort(key=lambda c: (c.sq_distance, c.vector))
    return found


def recovery_radius(params: AlgorithmParams, s: int) -> tuple[int, int]:
    """Squared search radius ``(s/4 + 1) * 2**(2m)`` as ``(numerator, denominator)``."""
    return (s + 4) * params.two_m ** 2, 4


def candidate_logs(pairs: Sequence[OutcomePair], params: AlgorithmParams) -> list[int]:
    """Distinct positive last coordinates ``0 < c < 2**m`` of vectors near ``v``, nearest first."""
    problem = build_problem(pairs, params)
    reduced = lll_reduce(problem.basis)
    num, den = recovery_radius(params, len(pairs))
    seen: set[int] = set()
    out = []
    for cand in enumerate_within(reduced, problem.target, num, den):
        c = cand.c
        if 0 < c < params.two_m and c not in seen:
            seen.add(c)
            out.append(c)
    return out


def recover_d(
    pairs: Sequence[OutcomePair],
    params: AlgorithmParams,
    verify: Callable[[int], bool],
) -> Optional[int]:
    """Return the first candidate accepted by ``verify``, or None on failure."""
    for c in candidate_logs(pairs, params):
        if verify(c):
            return c
    return None


def short_vectors(basis: Sequence[Sequence[int]], bound: int) -> list[Vector]:
    """Nonzero lattice vectors with every coordinate strictly below ``bound`` in absolute value."""
    dim = len(basis[0])
    reduced = lll_reduce(basis)
    # the cube |u_i| < bound sits inside the ball |u|^2 < dim * bound^2
    ball = enumerate_within(reduced, (0,) * dim, dim * bound * bound)
    return [c.vector for c in ball if any(c.vector) and max(map(abs, c.vector)) < bound]
