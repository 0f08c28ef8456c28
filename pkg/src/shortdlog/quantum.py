"""Exact classical model of the quantum stage.

The stage prepares a uniform superposition over ``0 <= a < 2**(l+m)`` and
``0 <= b < 2**l``, computes ``[a - b d] g`` into a third register, applies
QFTs of sizes ``2**(l+m)`` and ``2**l`` and measures ``(j, k, [e] g)``.

Three routes to the resulting distribution live here:

* closed-form probabilities (:func:`pair_probability`,
  :func:`probability_table`) built from the counts ``T_e``;
* a brute-force amplitude oracle (:func:`statevector_distribution`) for tiny
  parameters;
* a scalable exact sampler (:func:`sample_pair`).

Throughout, ``N = 2**(l+m)`` and ``theta(j, k) = {d j + 2**m k}_N``.
"""
from __future__ import annotations

import functools
import random
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from .arith import centered_reduce, two_adic_valuation
from .errors import ExhaustiveModeUnavailableError, InvalidArgumentError

EXHAUSTIVE_LIMIT_BITS = 24
STATEVECTOR_LIMIT_BITS = 20
# statevector tables hold (#e) * N * 2**l complex amplitudes
STATEVECTOR_TABLE_LIMIT = 1 << 22
# above this reduced modulus the sampler switches from tables to rejection
TABLE_SAMPLER_LIMIT = 1 << 16


@dataclass(frozen=True)
class AlgorithmParams:
    """Register sizing: ``m`` bounds the logarithm, ``ell`` is the second register width."""

    m: int
    s: int
    ell: int

    def __post_init__(self):
        if self.m < 1 or self.s < 1:
            raise InvalidArgumentError(f"need m >= 1 and s >= 1, got m={self.m}, s={self.s}")
        if not 0 < self.ell <= self.m:
            raise InvalidArgumentError(f"ell must satisfy 0 < ell <= m, got ell={self.ell}, m={self.m}")

    @property
    def two_m(self) -> int:
        return 1 << self.m

    @property
    def two_l(self) -> int:
        return 1 << self.ell

    @property
    def two_lm(self) -> int:
        return 1 << (self.ell + self.m)

    @property
    def exponent_bits(self) -> int:
        """Width of the first index register, i.e. the exponent length."""
        return self.ell + self.m


def derive_params(m: int, s: int, ell: Optional[int] = None) -> AlgorithmParams:
    """Size the registers; ``ell`` defaults to ``ceil(m / s)``."""
    if m < 1 or s < 1:
        raise InvalidArgumentError(f"need m >= 1 and s >= 1, got m={m}, s={s}")
    if ell is None:
        ell = -(-m // s)
    return AlgorithmParams(m=m, s=s, ell=ell)


@dataclass(frozen=True)
class SecretInstance:
    """A logarithm ``d`` together with the parameters used to find it.

    Only the sampler reads ``d``. ``group_order`` is informational: when known
    it lets callers check whether the order requirement holds.
    """

    d: int
    params: AlgorithmParams
    group_order: Optional[int] = None

    def __post_init__(self):
        if self.params.m < 2:
            raise InvalidArgumentError("m = 1 is not supported (good-pair threshold 2**(m-2) is fractional)")
        if not 0 < self.d < self.params.two_m:
            raise InvalidArgumentError(f"d must satisfy 0 < d < 2**m, got d={self.d}, m={self.params.m}")

    @property
    def kappa(self) -> int:
        return two_adic_valuation(self.d)

    @property
    def order_requirement(self) -> int:
        p = self.params
        return p.two_lm + p.two_l * self.d

    def order_requirement_met(self) -> Optional[bool]:
        if self.group_order is None:
            return None
        return self.group_order >= self.order_requirement


@dataclass(frozen=True, order=True)
class OutcomePair:
    j: int
    k: int


@dataclass(frozen=True)
class BRange:
    """Values of ``b`` for which ``a = e + b d`` stays inside the first register."""

    e: int
    b_lo: int
    b_hi: int

    @property
    def count(self) -> int:
        return max(0, self.b_hi - self.b_lo + 1)


def b_range(e: int, inst: SecretInstance) -> BRange:
    p, d = inst.params, inst.d
    lo = max(0, -(e // d))  # ceil(-e / d)
    hi = min(p.two_l - 1, (p.two_lm - 1 - e) // d)
    return BRange(e, lo, hi)


def t_counts(inst: SecretInstance) -> tuple[int, np.ndarray]:
    """Return ``(e_min, counts)`` with ``counts[i] = T_{e_min + i}`` for all e in ``[-N, N)``."""
    p, d = inst.params, inst.d
    n = p.two_lm
    if p.ell + p.m > EXHAUSTIVE_LIMIT_BITS:
        raise ExhaustiveModeUnavailableError(f"l+m = {p.ell + p.m} exceeds {EXHAUSTIVE_LIMIT_BITS}")
    e = np.arange(-n, n, dtype=np.int64)
    lo = np.maximum(0, -(e // d))
    hi = np.minimum(p.two_l - 1, (n - 1 - e) // d)
    return -n, np.maximum(0, hi - lo + 1)


@functools.lru_cache(maxsize=256)
def _t_histogram(inst: SecretInstance) -> tuple[np.ndarray, np.ndarray]:
    """Distinct nonzero values of ``T_e`` and how many ``e`` take each."""
    _, counts = t_counts(inst)
    hist = np.bincount(counts, minlength=inst.params.two_l + 1)
    values = np.nonzero(hist)[0]
    values = values[values > 0]
    return values, hist[values]


def theta(pair: OutcomePair, inst: SecretInstance) -> int:
    p = inst.params
    return centered_reduce(inst.d * pair.j + p.two_m * pair.k, p.two_lm)


def is_good(pair: OutcomePair, inst: SecretInstance) -> bool:
    return abs(theta(pair, inst)) <= 1 << (inst.params.m - 2)


def best_k(j: int, inst: SecretInstance) -> int:
    """The ``k`` in ``[0, 2**l)`` minimising ``|theta(j, k)|``; ties go to the smaller ``k``."""
    p = inst.params
    dj = inst.d * j
    target = centered_reduce(dj, p.two_m)
    k = ((target - dj) >> p.m) % p.two_l
    if target == -(p.two_m >> 1):
        # +2**(m-1) is equally close; its k is one step higher (mod 2**l)
        k = min(k, (k + 1) % p.two_l)
    return k


def good_j_values(inst: SecretInstance) -> np.ndarray:
    """All ``j`` for which some ``k`` makes ``(j, k)`` good, in increasing order."""
    p = inst.params
    if p.ell + p.m > EXHAUSTIVE_LIMIT_BITS:
        raise ExhaustiveModeUnavailableError(f"l+m = {p.ell + p.m} exceeds {EXHAUSTIVE_LIMIT_BITS}")
    j = np.arange(p.two_lm, dtype=np.int64)
    r = (inst.d % p.two_m) * (j % p.two_m) % p.two_m
    r = np.where(2 * r >= p.two_m, r - p.two_m, r)
    return j[np.abs(r) <= 1 << (p.m - 2)]


def enumerate_good_j(inst: SecretInstance) -> tuple[int, Iterator[int]]:
    values = good_j_values(inst)
    return len(values), (int(j) for j in values)


def fejer_weight(count: int, x, modulus: int):
    """``|sum_{b < count} exp(2 pi i b x / modulus)|**2`` via the sine-ratio closed form.

    ``x`` may be an int or an integer array; the value ``count**2`` is used
    exactly where ``x`` is a multiple of ``modulus``.
    """
    xr = np.asarray(x, dtype=np.int64) % modulus
    xc = np.where(2 * xr >= modulus, xr - modulus, xr).astype(np.float64)
    phase = np.pi * xc / modulus
    den = np.sin(phase) ** 2
    zero = xr == 0
    num = np.sin(count * phase) ** 2
    out = np.where(zero, float(count) ** 2, num / np.where(zero, 1.0, den))
    return out if out.ndim else float(out)


def pair_probability(pair: OutcomePair, inst: SecretInstance) -> float:
    """Probability of measuring ``(j, k)``, summed over the third register."""
    p = inst.params
    values, mult = _t_histogram(inst)
    th = theta(pair, inst)
    total = sum(int(c) * fejer_weight(int(t), th, p.two_lm) for t, c in zip(values, mult))
    return total / float(1 << (2 * (2 * p.ell + p.m)))


def probability_table(inst: SecretInstance) -> np.ndarray:
    """``P[j, k]`` for every outcome, as an array of shape ``(2**(l+m), 2**l)``."""
    p = inst.params
    if p.ell + p.m + p.ell > EXHAUSTIVE_LIMIT_BITS:
        raise ExhaustiveModeUnavailableError("probability table too large")
    values, mult = _t_histogram(inst)
    j = np.arange(p.two_lm, dtype=np.int64)[:, None]
    k = np.arange(p.two_l, dtype=np.int64)[None, :]
    th = (inst.d % p.two_lm) * j + p.two_m * k
    table = np.zeros((p.two_lm, p.two_l))
    for t, c in zip(values, mult):
        table += int(c) * fejer_weight(int(t), th, p.two_lm)
    return table / float(1 << (2 * (2 * p.ell + p.m)))


@dataclass
class StatevectorTable:
    """Squared amplitudes ``probs[e - e_min, j, k]`` after the two QFTs."""

    e_min: int
    probs: np.ndarray

    def marginal(self) -> np.ndarray:
        return self.probs.sum(axis=0)

    def mass_for_e(self, e: int) -> float:
        i = e - self.e_min
        if not 0 <= i < self.probs.shape[0]:
            return 0.0
        return float(self.probs[i].sum())


def statevector_distribution(inst: SecretInstance) -> StatevectorTable:
    """Brute-force amplitudes by direct summation over every ``(a, b)``.

    Deliberately shares nothing with the closed-form path: no ``T_e``, no
    sine ratios, just the superposition and two explicit DFT sums.
    """
    p, d = inst.params, inst.d
    n, nl = p.two_lm, p.two_l
    e_min = -(nl - 1) * d
    n_e = n + (nl - 1) * d
    if 2 * p.ell + p.m > STATEVECTOR_LIMIT_BITS or n_e * n * nl > STATEVECTOR_TABLE_LIMIT:
        raise ExhaustiveModeUnavailableError("statevector oracle limited to tiny parameters")

    a = np.arange(n)
    jj = np.arange(n)
    kk = np.arange(nl)
    first = np.exp(2j * np.pi * np.outer(a, jj) / n)  # [a, j]
    amp = np.zeros((n_e, n, nl), dtype=np.complex128)
    for b in range(nl):
        second = np.exp(2j * np.pi * (p.two_m * b * kk) / n)  # [k]
        start = -b * d - e_min
        amp[start:start + n] += first[:, :, None] * second[None, None, :]
    amp /= float(1 << (2 * p.ell + p.m))
    return StatevectorTable(e_min=e_min, probs=np.abs(amp) ** 2)


def _fejer_rejection(count: int, modulus: int, rng: random.Random) -> int:
    """Draw ``u`` in ``Z_modulus`` with weight ``fejer_weight(count, u, modulus)``.

    Rejection from the envelope ``count**2`` on ``|u| <= c`` and
    ``modulus**2 / (4 v (v - 1))`` on the tails ``|u| = v > c`` where
    ``c = modulus // (2 count)``; the tail envelope telescopes so it has an
    exact inverse CDF. Requires ``2 <= count <= modulus / 2``.
    """
    c = modulus // (2 * count)
    half = modulus // 2
    t2 = float(count) ** 2
    a_coef = modulus * modulus / 4.0
    w_plateau = t2 * (2 * c + 1)
    v_pos, v_neg = half - 1, half
    w_pos = a_coef * (1.0 / c - 1.0 / v_pos) if v_pos > c else 0.0
    w_neg = a_coef * (1.0 / c - 1.0 / v_neg)
    total = w_plateau + w_pos + w_neg
    while True:
        r = rng.random() * total
        if r < w_plateau:
            u = rng.randrange(-c, c + 1)
            envelope = t2
        else:
            if r < w_plateau + w_pos:
                sign, vmax = 1, v_pos
            else:
                sign, vmax = -1, v_neg
            span = 1.0 / c - 1.0 / vmax
            v = int(1.0 / (1.0 / c - rng.random() * span)) + 1
            v = min(max(v, c + 1), vmax)
            u = sign * v
            envelope = a_coef / (v * (v - 1))
        if rng.random() * envelope < fejer_weight(count, u, modulus):
            return u % modulus


class PairSampler:
    """Exact sampler for ``(j, k, e)`` under the measurement distribution.

    Draw ``(a, b)`` uniformly to fix ``e``; given ``e`` the outcome depends on
    ``(j, k)`` only through ``t = d j + 2**m k mod N``, and ``t`` ranges over
    multiples of ``2**kappa`` with ``2**(l+kappa)`` preimages each. Writing
    ``t = 2**kappa u`` the weight of ``u`` is a Fejer kernel of length ``T_e``
    modulo ``N / 2**kappa``. Finally ``(j, k)`` is uniform on the fiber of ``t``.
    """

    def __init__(self, inst: SecretInstance, method: str = "auto"):
        if method not in ("auto", "table", "rejection"):
            raise InvalidArgumentError(f"unknown sampling method {method!r}")
        p = inst.params
        self.inst = inst
        self.kappa = inst.kappa
        self.reduced_modulus = p.two_lm >> self.kappa
        if method == "auto":
            method = "table" if self.reduced_modulus <= TABLE_SAMPLER_LIMIT else "rejection"
        self.method = method
        self._low_bits = p.m - self.kappa
        self._d_odd_inv = pow(inst.d >> self.kappa, -1, 1 << self._low_bits)
        self._tables: dict[int, np.ndarray] = {}

    def _table(self, count: int) -> np.ndarray:
        table = self._tables.get(count)
        if table is None:
            u = np.arange(self.reduced_modulus, dtype=np.int64)
            table = np.cumsum(fejer_weight(count, u, self.reduced_modulus))
            self._tables[count] = table
        return table

    def draw_reduced(self, count: int, rng: random.Random) -> int:
        if count == 1:
            return rng.randrange(self.reduced_modulus)
        if self.method == "table":
            cum = self._table(count)
            i = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
            return min(i, self.reduced_modulus - 1)
        return _fejer_rejection(count, self.reduced_modulus, rng)

    def fiber(self, t: int, rng: random.Random) -> OutcomePair:
        p, d = self.inst.params, self.inst.d
        t %= p.two_lm
        low = t % p.two_m
        if low % (1 << self.kappa):
            raise InvalidArgumentError(f"t={t} is not achievable (needs 2**{self.kappa} | t mod 2**m)")
        j0 = (low >> self.kappa) * self._d_odd_inv % (1 << self._low_bits)
        j = j0 + (rng.randrange(1 << (p.ell + self.kappa)) << self._low_bits)
        k = ((t - d * j) >> p.m) % p.two_l
        return OutcomePair(j, k)

    def sample(self, rng: random.Random) -> tuple[OutcomePair, int]:
        p = self.inst.params
        a = rng.randrange(p.two_lm)
        b = rng.randrange(p.two_l)
        e = a - b * self.inst.d
        count = b_range(e, self.inst).count
        t = self.draw_reduced(count, rng) << self.kappa
        return self.fiber(t, rng), e


@functools.lru_cache(maxsize=64)
def get_sampler(inst: SecretInstance, method: str = "auto") -> PairSampler:
    return PairSampler(inst, method)


def sample_pair(inst: SecretInstance, rng: random.Random, method: str = "auto") -> tuple[OutcomePair, int]:
    """Simulate one run of the quantum stage; returns the pair and the discarded ``e``."""
    return get_sampler(inst, method).sample(rng)


def sample_fiber(t: int, inst: SecretInstance, rng: random.Random) -> OutcomePair:
    """Uniform ``(j, k)`` with ``d j + 2**m k = t (mod 2**(l+m))``."""
    return get_sampler(inst).fiber(t, rng)


def fiber_size(inst: SecretInstance) -> int:
    return 1 << (inst.params.ell + inst.kappa)


def good_mass(inst: SecretInstance) -> float:
    """Total probability of observing a good pair."""
    p = inst.params
    table = probability_table(inst)
    j = np.arange(p.two_lm, dtype=np.int64)[:, None]
    k = np.arange(p.two_l, dtype=np.int64)[None, :]
    th = ((inst.d % p.two_lm) * j + p.two_m * k) % p.two_lm
    th = np.where(2 * th >= p.two_lm, th - p.two_lm, th)
    return float(table[np.abs(th) <= 1 << (p.m - 2)].sum())

