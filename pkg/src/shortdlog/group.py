"""Multiplicative groups modulo M and fixture group generation."""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Optional, Union

from sympy import isprime

from .arith import mod_pow
from .errors import GenerationFailedError, InvalidArgumentError


@dataclass(frozen=True)
class MulGroup:
    """The group of units modulo ``modulus``.

    ``known_order`` is the order of the working (cyclic) subgroup when a
    fixture knows it; the algorithms never read it.
    """

    modulus: int
    known_order: Optional[int] = None

    def __post_init__(self):
        if self.modulus < 3:
            raise InvalidArgumentError(f"modulus must be at least 3, got {self.modulus}")

    def element(self, value: int) -> "GroupElement":
        return GroupElement(value % self.modulus, self)

    def identity(self) -> "GroupElement":
        return GroupElement(1, self)


@dataclass(frozen=True)
class GroupElement:
    value: int
    group: MulGroup

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return apply(self, other)

    def __pow__(self, e: int) -> "GroupElement":
        return power(self, e)

    def is_identity(self) -> bool:
        return self.value == 1


@dataclass(frozen=True)
class NontrivialGcd:
    """A random draw that shares a factor with the modulus."""

    gcd: int


def apply(u: GroupElement, v: GroupElement) -> GroupElement:
    if u.group.modulus != v.group.modulus:
        raise InvalidArgumentError("elements belong to different groups")
    return GroupElement(u.value * v.value % u.group.modulus, u.group)


def power(g: GroupElement, e: int) -> GroupElement:
    """Return ``[e]g``. Raises NotInvertibleError for e < 0 and non-unit g."""
    return GroupElement(mod_pow(g.value, e, g.group.modulus), g.group)


def random_element(group: MulGroup, rng: random.Random) -> Union[GroupElement, NontrivialGcd]:
    """Draw ``g`` uniformly from ``1 < g < M - 1``.

    A draw sharing a factor with ``M`` is returned as :class:`NontrivialGcd`
    instead of an element.
    """
    value = rng.randrange(2, group.modulus - 1)
    g = math.gcd(value, group.modulus)
    if g != 1:
        return NontrivialGcd(g)
    return GroupElement(value, group)


def make_safe_prime_group(
    bits: int, rng: random.Random, max_attempts: int = 200_000
) -> tuple[MulGroup, GroupElement]:
    """Generate ``p = 2q + 1`` of ``bits`` bits and a generator of the order-q subgroup."""
    if not 3 <= bits <= 128:
        raise InvalidArgumentError(f"bits must be in [3, 128], got {bits}")
    lo, hi = 1 << (bits - 2), 1 << (bits - 1)
    for _ in range(max_attempts):
        q = rng.randrange(lo, hi)
        p = 2 * q + 1
        if p.bit_length() == bits and isprime(q) and isprime(p):
            break
    else:
        raise GenerationFailedError(f"no safe prime of {bits} bits after {max_attempts} draws")

    group = MulGroup(p, known_order=q)
    # squaring kills the order-2 component; g0 != +-1 keeps the result nontrivial
    g0 = rng.randrange(2, p - 1)
    return group, GroupElement(g0 * g0 % p, group)


def random_prime(lo: int, hi: int, rng: random.Random, max_attempts: int = 100_000) -> int:
    """Uniformly random prime in ``[lo, hi)`` drawn from ``rng``."""
    for _ in range(max_attempts):
        c = rng.randrange(lo, hi)
        if isprime(c):
            return c
    raise GenerationFailedError(f"no prime found in [{lo}, {hi})")
