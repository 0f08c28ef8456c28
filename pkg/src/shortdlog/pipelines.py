"""End-to-end solvers built on the quantum model and the lattice recovery.

The secret logarithm is handed to the sampler only. Recovery sees outcome
pairs, and success is decided by a verification callback that uses public
data (``g``, ``x``, ``N``) alone.
"""
from __future__ import annotations

import itertools
import logging
import random
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from sympy import isprime, n_order

from .arith import isqrt_exact, mod_pow
from .errors import InvalidArgumentError
from .group import (
    GroupElement,
    MulGroup,
    NontrivialGcd,
    make_safe_prime_group,
    power,
    random_element,
    random_prime,
)
from .lattice import recover_d
from .quantum import AlgorithmParams, OutcomePair, SecretInstance, derive_params, is_good, sample_pair

log = logging.getLogger(__name__)

Verify = Callable[[int], bool]


@dataclass
class SolveConfig:
    s: int = 2
    samples_per_round: Optional[int] = None
    max_rounds: int = 3
    subset_cap: int = 10_000
    seed: int = 0
    ell: Optional[int] = None
    tight_m: bool = False
    reduced_exponent: bool = False
    max_retries: int = 8
    sampler: str = "auto"

    def __post_init__(self):
        if self.s < 1:
            raise InvalidArgumentError(f"s must be >= 1, got {self.s}")
        if self.samples_per_round is None:
            self.samples_per_round = 8 * self.s
        if self.samples_per_round < self.s:
            raise InvalidArgumentError("samples_per_round must be at least s")
        if self.max_rounds < 1 or self.subset_cap < 1 or self.max_retries < 1:
            raise InvalidArgumentError("max_rounds, subset_cap and max_retries must be positive")


@dataclass
class SolveOutcome:
    value: Any
    success: bool
    params: Optional[AlgorithmParams] = None
    rounds: int = 0
    samples: int = 0
    subsets_tried: int = 0
    good_pairs: int = 0
    round_pairs: list[list[OutcomePair]] = field(default_factory=list)
    info: dict[str, Any] = field(default_factory=dict)


def solve_short_dlog(
    inst: SecretInstance,
    verify: Verify,
    cfg: SolveConfig,
    rng: Optional[random.Random] = None,
) -> SolveOutcome:
    """Collect pairs round by round and try every ``s``-subset until ``verify`` accepts.

    The pool of distinct pairs grows across rounds; subsets are visited in
    lexicographic index order, each at most once, and at most
    ``cfg.subset_cap`` recoveries are attempted per round.
    """
    rng = rng if rng is not None else random.Random(cfg.seed)
    params = inst.params
    s = params.s
    out = SolveOutcome(value=None, success=False, params=params)
    pool: list[OutcomePair] = []
    seen: set[OutcomePair] = set()
    tried: set[tuple[int, ...]] = set()

    for _ in range(cfg.max_rounds):
        out.rounds += 1
        drawn = []
        for _ in range(cfg.samples_per_round):
            pair, _e = sample_pair(inst, rng, cfg.sampler)
            drawn.append(pair)
            if pair not in seen:
                seen.add(pair)
                pool.append(pair)
        out.samples += len(drawn)
        out.good_pairs += sum(is_good(p, inst) for p in drawn)
        out.round_pairs.append(drawn)

        budget = cfg.subset_cap
        for idx in itertools.combinations(range(len(pool)), s):
            if budget == 0:
                break
            if idx in tried:
                continue
            subset = [pool[i] for i in idx]
            if len({p.j for p in subset}) < s:
                continue
            tried.add(idx)
            budget -= 1
            out.subsets_tried += 1
            c = recover_d(subset, params, verify)
            if c is not None:
                out.value, out.success = c, True
                return out
    return out


# --- fixtures -------------------------------------------------------------


@dataclass(frozen=True)
class DlogFixture:
    group: MulGroup
    g: GroupElement
    x: GroupElement
    d: int
    params: AlgorithmParams

    @property
    def instance(self) -> SecretInstance:
        return SecretInstance(self.d, self.params, group_order=self.group.known_order)

    def verify(self, c: int) -> bool:
        return power(self.g, c) == self.x


@dataclass(frozen=True)
class RsaFixture:
    p: int
    q: int
    n: int

    @property
    def N(self) -> int:
        return self.p * self.q

    @property
    def phi(self) -> int:
        return (self.p - 1) * (self.q - 1)


@dataclass(frozen=True)
class OrderFixture:
    group: MulGroup
    g: GroupElement
    r: int
    r0: int

    @property
    def d(self) -> int:
        return self.r - self.r0


def make_dlog_fixture(
    m: int, s: int, rng: random.Random, ell: Optional[int] = None, group_bits: Optional[int] = None,
    short_exponent: bool = False, d: Optional[int] = None,
) -> DlogFixture:
    """Safe-prime group large enough for the order requirement, and a secret ``d``.

    By default ``d`` has exactly ``m`` bits; with ``short_exponent`` it is any
    value in ``[1, 2**m)``, as in short-exponent Diffie-Hellman.
    """
    params = derive_params(m, s, ell)
    # q >= 2**(l+m+1) >= 2**(l+m) + 2**l d
    bits = max(group_bits or 0, params.ell + m + 3)
    group, g = make_safe_prime_group(bits, rng)
    if d is None:
        d = rng.randrange(1, 1 << m) if short_exponent else rng.randrange(1 << (m - 1), 1 << m)
    elif not 0 < d < 1 << m:
        raise InvalidArgumentError(f"d={d} must satisfy 0 < d < 2**m")
    return DlogFixture(group, g, power(g, d), d, params)


def make_rsa_fixture(n: int, rng: random.Random) -> RsaFixture:
    """Distinct random primes ``p, q`` with ``2**(n-1) < p, q < 2**n``."""
    if n < 3:
        raise InvalidArgumentError("need n >= 3 for two distinct odd primes")
    p = random_prime((1 << (n - 1)) + 1, 1 << n, rng)
    while True:
        q = random_prime((1 << (n - 1)) + 1, 1 << n, rng)
        if q != p:
            return RsaFixture(p, q, n)


def make_order_fixture(
    m: int, rng: random.Random, r: Optional[int] = None, p: Optional[int] = None, r_bits: int = 16,
    d: Optional[int] = None,
) -> OrderFixture:
    """A prime-order-``r`` subgroup of ``Z_p^*`` and a hint ``r0 = r - d``.

    ``r`` must be prime and divide ``p - 1``; missing values are generated.
    """
    if r is None:
        r = random_prime(max(1 << (r_bits - 1), (1 << m) + 1), 1 << r_bits, rng)
    if not isprime(r):
        raise InvalidArgumentError(f"r={r} must be prime")
    if p is None:
        for k in itertools.count(1):
            if isprime(2 * k * r + 1):
                p = 2 * k * r + 1
                break
    if not isprime(p) or (p - 1) % r:
        raise InvalidArgumentError(f"need a prime p with r | p - 1, got p={p}, r={r}")
    group = MulGroup(p, known_order=r)
    while True:
        h = mod_pow(rng.randrange(2, p - 1), (p - 1) // r, p)
        if h != 1:
            break
    if d is None:
        d = rng.randrange(1, min(1 << m, r))
    if not 0 <= d < (1 << m) or d > r:
        raise InvalidArgumentError(f"d={d} must satisfy 0 <= d < 2**m")
    return OrderFixture(group, GroupElement(h, group), r, r - d)


def make_fixture(kind: str, rng: random.Random, **size: Any):
    """Dispatch on ``kind`` in {dlog, dh_short_exponent, rsa, order}."""
    if kind == "dlog":
        return make_dlog_fixture(rng=rng, **size)
    if kind == "dh_short_exponent":
        return make_dlog_fixture(rng=rng, short_exponent=True, **size)
    if kind == "rsa":
        return make_rsa_fixture(rng=rng, **size)
    if kind == "order":
        return make_order_fixture(rng=rng, **size)
    raise InvalidArgumentError(f"unknown fixture kind {kind!r}")


# --- factoring --------------------------------------------------------------


def factor_m(n: int, cfg: SolveConfig) -> int:
    """Bit bound used for the factoring logarithm.

    ``n + 1`` is the conservative default; ``d = (p + q - 2) / 2 < 2**n - 1``
    so ``n`` suffices (tight mode), and the reduced exponent also fits in ``n``.
    """
    return n if (cfg.tight_m or cfg.reduced_exponent) else n + 1


def quadratic_factors(N: int, c: int) -> Optional[tuple[int, int]]:
    """Solve ``p, q = c +- sqrt(c**2 - N)``; None when that is not a factorisation."""
    disc = c * c - N
    if disc < 0:
        return None
    root, square = isqrt_exact(disc)
    if not square:
        return None
    p, q = c + root, c - root
    if q <= 1 or p * q != N:
        return None
    return p, q


def factor_rsa(
    N: int,
    cfg: SolveConfig,
    fixture: Optional[RsaFixture] = None,
    n_hint: Optional[int] = None,
    rng: Optional[random.Random] = None,
) -> SolveOutcome:
    """Factor an RSA integer by solving one short discrete logarithm.

    With ``x = g**((N-1)/2)`` the logarithm is ``d = (p + q - 2) / 2``; the
    reduced-exponent variant uses ``x = g**(N - 1 - 2**n)`` and
    ``d' = p + q - 2 - 2**n``. Either way ``p + q`` is recovered and the
    factors follow from a quadratic. ``fixture`` is read only to drive the
    simulated quantum stage. ``cfg.max_rounds`` caps sampling rounds across
    all generator retries.
    """
    if N % 2 == 0 or N < 15:
        raise InvalidArgumentError(f"N must be an odd composite >= 15, got {N}")
    rng = rng if rng is not None else random.Random(cfg.seed)
    n = n_hint if n_hint is not None else -(-N.bit_length() // 2)
    m = factor_m(n, cfg)
    params = derive_params(m, cfg.s, cfg.ell)
    out = SolveOutcome(value=None, success=False, params=params)
    out.info.update(n=n, m=m, exponent_bits=params.exponent_bits, attempts=0)
    group = MulGroup(N)

    while out.info["attempts"] < cfg.max_retries and out.rounds < cfg.max_rounds:
        out.info["attempts"] += 1
        g = random_element(group, rng)
        if isinstance(g, NontrivialGcd):
            out.value, out.success = (max(g.gcd, N // g.gcd), min(g.gcd, N // g.gcd)), True
            out.info["lucky_gcd"] = g.gcd
            return out
        if cfg.reduced_exponent:
            x = pow(g.value, N - 1 - (1 << n), N)
            offset = (1 << n) + 2
        else:
            x = pow(g.value, (N - 1) // 2, N)
            offset = None
        out.info["g"] = g.value

        def to_factors(c: int) -> Optional[tuple[int, int]]:
            # c is a candidate logarithm; map it to p + q and then to (p, q)
            if offset is None:
                return quadratic_factors(N, c + 1)
            if (c + offset) % 2:
                return None
            return quadratic_factors(N, (c + offset) // 2)

        if x == 1:
            # logarithm 0 (only possible for the reduced exponent) or ord(g) | d
            found = to_factors(0)
            if found:
                out.value, out.success = found, True
                return out
            continue

        if fixture is None:
            raise InvalidArgumentError("simulating the quantum stage needs the RSA fixture")
        if cfg.reduced_exponent:
            d = fixture.p + fixture.q - 2 - (1 << n)
        else:
            d = (fixture.p + fixture.q - 2) // 2
        order = int(n_order(g.value, N))
        t = fixture.phi // order
        inst = SecretInstance(d, params, group_order=order)
        out.info.update(
            group_order=order,
            t=t,
            t_requirement_met=t < 2 ** (n - params.ell - 4),
            order_requirement_met=inst.order_requirement_met(),
        )

        sub_cfg = SolveConfig(**{**cfg.__dict__, "max_rounds": cfg.max_rounds - out.rounds})

        def verify(c: int, g=g.value, x=x) -> bool:
            return pow(g, c, N) == x

        res = solve_short_dlog(inst, verify, sub_cfg, rng)
        out.rounds += res.rounds
        out.samples += res.samples
        out.subsets_tried += res.subsets_tried
        out.good_pairs += res.good_pairs
        out.round_pairs.extend(res.round_pairs)
        if not res.success:
            continue
        found = to_factors(res.value)
        if found is None:
            # a logarithm modulo a small ord(g) that is not p + q; try another g
            log.debug("inconsistent candidate %d for N=%d, resampling g", res.value, N)
            continue
        out.value, out.success = found, True
        out.info["d"] = res.value
        return out
    return out


# --- order finding ------------------------------------------------------------


def order_with_hint(
    group: MulGroup,
    g: GroupElement,
    r0: int,
    m: int,
    cfg: SolveConfig,
    rng: Optional[random.Random] = None,
) -> SolveOutcome:
    """Find the order ``r`` of ``g`` given ``0 <= r - r0 < 2**m``.

    Solves for ``d = r - r0`` as the logarithm of ``x = g**(-r0)``. The
    simulated quantum stage reads ``group.known_order``; verification checks
    ``g**(c + r0) == 1`` only.
    """
    rng = rng if rng is not None else random.Random(cfg.seed)
    params = derive_params(m, cfg.s, cfg.ell)
    if r0 > 0 and power(g, r0).is_identity():
        return SolveOutcome(value=r0, success=True, params=params)
    if group.known_order is None:
        raise InvalidArgumentError("simulating the quantum stage needs group.known_order")
    d = group.known_order - r0
    inst = SecretInstance(d, params, group_order=group.known_order)
    x = power(g, -r0)

    def verify(c: int) -> bool:
        return c + r0 > 0 and power(g, c) == x

    out = solve_short_dlog(inst, verify, cfg, rng)
    out.info["order_requirement_met"] = inst.order_requirement_met()
    if out.success:
        out.info["d"] = out.value
        out.value = r0 + out.value
    return out
