"""Numerical checks of the counting and probability bounds behind the algorithm.

Each check returns a :class:`Check` with the measured quantity, the bound it
is compared against and the margin (positive when the bound holds).
"""
from __future__ import annotations

import itertools
import math
import random
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .lattice import Candidate, lattice_basis, short_vectors
from .quantum import (
    AlgorithmParams,
    SecretInstance,
    good_j_values,
    probability_table,
    sample_pair,
    statevector_distribution,
    t_counts,
)

PROB_SLACK = 1e-9


@dataclass
class Check:
    name: str
    passed: bool
    measured: float
    bound: float
    margin: float
    detail: str = ""
    required: bool = True

    def to_dict(self) -> dict:
        return asdict(self)


def _tag(inst: SecretInstance) -> str:
    p = inst.params
    return f"d={inst.d} m={p.m} l={p.ell}"


def te_identity_checks(inst: SecretInstance) -> list[Check]:
    """Sum of T_e, lower bound on the sum of T_e**2, and the support of e."""
    p = inst.params
    e_min, counts = t_counts(inst)
    total = int(counts.sum())
    squares = int((counts.astype(object) ** 2).sum())
    sum_target = 1 << (2 * p.ell + p.m)
    sq_bound = 1 << (3 * p.ell + p.m - 1)
    support = np.nonzero(counts)[0] + e_min
    max_abs_e = int(np.abs(support).max())
    tag = _tag(inst)
    return [
        Check("te_sum", total == sum_target, total, sum_target, total - sum_target, tag),
        Check("te_square_sum", squares >= sq_bound, squares, sq_bound, squares - sq_bound, tag),
        Check("e_support", max_abs_e < p.two_lm, max_abs_e, p.two_lm, p.two_lm - max_abs_e, tag),
    ]


def good_count_check(inst: SecretInstance) -> Check:
    """At least ``2**(l+m-1)`` good ``j``; exactly that many when ``d = 2**(m-1)``."""
    p = inst.params
    count = len(good_j_values(inst))
    bound = 1 << (p.ell + p.m - 1)
    passed = count >= bound
    detail = _tag(inst)
    if inst.d == 1 << (p.m - 1):
        passed = passed and count == bound
        detail += " (equality case)"
    return Check("good_j_count", passed, count, bound, count - bound, detail)


def probability_checks(inst: SecretInstance, slack: float = PROB_SLACK) -> list[Check]:
    """Minimum probability over good pairs and total mass of good pairs."""
    p = inst.params
    table = probability_table(inst)
    j = np.arange(p.two_lm, dtype=np.int64)[:, None]
    k = np.arange(p.two_l, dtype=np.int64)[None, :]
    th = ((inst.d % p.two_lm) * j + p.two_m * k) % p.two_lm
    th = np.where(2 * th >= p.two_lm, th - p.two_lm, th)
    good = np.abs(th) <= 1 << (p.m - 2)
    min_good = float(table[good].min())
    pair_bound = 2.0 ** (-p.m - p.ell - 2)
    mass = float(table[good].sum())
    tag = _tag(inst)
    return [
        Check("good_pair_probability", min_good >= pair_bound - slack, min_good, pair_bound,
              min_good - pair_bound, tag),
        Check("good_pair_mass", mass >= 0.125 - slack, mass, 0.125, mass - 0.125, tag),
        Check("normalization", abs(float(table.sum()) - 1.0) <= slack, float(table.sum()), 1.0,
              slack - abs(float(table.sum()) - 1.0), tag),
    ]


def oracle_equivalence_check(inst: SecretInstance, tol: float = 1e-9) -> Check:
    """Closed form against the brute-force amplitude oracle, entry by entry."""
    oracle = statevector_distribution(inst).marginal()
    closed = probability_table(inst)
    diff = float(np.abs(oracle - closed).max())
    return Check("oracle_equivalence", diff <= tol, diff, tol, tol - diff, _tag(inst))


def sampler_tv_distance(inst: SecretInstance, samples: int, rng: random.Random, method: str = "auto") -> float:
    """Total-variation distance between sampled outcomes and the exact table."""
    exact = probability_table(inst)
    counts = np.zeros_like(exact)
    for _ in range(samples):
        pair, _e = sample_pair(inst, rng, method)
        counts[pair.j, pair.k] += 1
    return 0.5 * float(np.abs(counts / samples - exact).sum())


def sampler_check(inst: SecretInstance, samples: int, rng: random.Random, tol: float = 0.02,
                  method: str = "auto") -> Check:
    """TV check; with fewer than 10 draws per outcome cell the empirical TV is
    dominated by sparsity, so the check is then reported but not required."""
    tv = sampler_tv_distance(inst, samples, rng, method)
    cells = inst.params.two_lm * inst.params.two_l
    dense = samples >= 10 * cells
    detail = f"{_tag(inst)} samples={samples} method={method}"
    if not dense:
        detail += f" (undersampled: {cells} cells)"
    return Check("sampler_tv", tv < tol, tv, tol, tol - tv, detail, required=dense)


def has_short_vector(js: list[int], params: AlgorithmParams) -> bool:
    """Whether ``L`` has a nonzero vector with all coordinates below ``2**(m-3)`` in absolute value."""
    return bool(short_vectors(lattice_basis(js, params), 1 << (params.m - 3)))


def short_vector_rate(
    params: AlgorithmParams, trials: int, rng: random.Random, d: Optional[int] = None
) -> tuple[float, float]:
    """Fraction of lattices from random good-``j`` tuples that contain a short vector.

    Each trial draws ``d`` (unless fixed) and ``s`` good ``j`` values
    independently and uniformly. Returns ``(rate, standard_error)``.
    """
    hits = 0
    good_cache: dict[int, np.ndarray] = {}
    for _ in range(trials):
        dd = d if d is not None else rng.randrange(1, params.two_m)
        if dd not in good_cache:
            good_cache[dd] = good_j_values(SecretInstance(dd, params))
        good = good_cache[dd]
        js = [int(good[rng.randrange(len(good))]) for _ in range(params.s)]
        hits += has_short_vector(js, params)
    rate = hits / trials
    return rate, math.sqrt(rate * (1 - rate) / trials)


def short_vector_check(params: AlgorithmParams, trials: int, rng: random.Random) -> Check:
    rate, se = short_vector_rate(params, trials, rng)
    bound = 2.0 ** (-params.s - 1)
    limit = bound + 3 * se
    return Check("short_vector_rate", rate <= limit, rate, bound, limit - rate,
                 f"m={params.m} l={params.ell} s={params.s} trials={trials} se={se:.4g}")


def analyze_instance(inst: SecretInstance, with_oracle: bool = True) -> list[Check]:
    checks = te_identity_checks(inst)
    checks.append(good_count_check(inst))
    checks.extend(probability_checks(inst))
    if with_oracle:
        checks.append(oracle_equivalence_check(inst))
    return checks


def exponent_accounting(exponent_bits: int, n: int, s: int) -> tuple[int, int]:
    """Compare the register width with ``ceil((1/2 + 1/s) n)``; returns ``(formula, offset)``."""
    formula = -(-(n * (s + 2)) // (2 * s))
    return formula, exponent_bits - formula



def coefficient_box_search(
    js: list[int], v: list[int], params: AlgorithmParams, sq_radius_num: int, sq_radius_den: int
) -> list[Candidate]:
    """Brute-force oracle for the vectors of ``L`` near ``v``.

    Walks the last coordinate ``x`` over every integer allowed by the radius,
    and for each coordinate ``i`` every multiple of ``N`` that could bring
    ``x j_i + y N`` within the radius of ``v_i``, then tests the full product
    box exactly. Uses no Gram-Schmidt data, so it is independent of the
    enumeration it checks.
    """
    n = params.two_lm
    bound = math.isqrt(sq_radius_num // sq_radius_den) + 1
    out = []
    for x in range(-bound, bound + 1):
        ranges = []
        for ji, vi in zip(js, v):
            base = x * ji
            lo = (vi - base - bound) // n - 1
            hi = (vi - base + bound) // n + 1
            ranges.append([base + y * n for y in range(lo, hi + 1)])
        for coords in itertools.product(*ranges):
            u = tuple(coords) + (x,)
            dist = sum((a - b) ** 2 for a, b in zip(u, v))
            if sq_radius_den * dist < sq_radius_num:
                out.append(Candidate(u, dist))
    out.sort(key=lambda c: (c.sq_distance, c.vector))
    return out
