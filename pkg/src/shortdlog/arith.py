"""Exact integer and modular arithmetic helpers."""
from __future__ import annotations

import math

from .errors import InvalidArgumentError, InvalidModulusError, NotInvertibleError


def centered_reduce(u: int, n: int) -> int:
    """Reduce ``u`` modulo ``n`` into the interval ``[-n/2, n/2)``."""
    if n <= 0:
        raise InvalidModulusError(f"modulus must be positive, got {n}")
    r = u % n
    # r >= n/2  <=>  2r >= n
    if 2 * r >= n:
        r -= n
    return r


def mod_inverse(a: int, n: int) -> int:
    if n < 2:
        raise InvalidModulusError(f"modulus must be at least 2, got {n}")
    g = math.gcd(a, n)
    if g != 1:
        raise NotInvertibleError(a, n, g)
    return pow(a, -1, n)


def mod_pow(g: int, e: int, n: int) -> int:
    """Return ``g**e mod n``; negative exponents go through the inverse of ``g``."""
    if n < 2:
        raise InvalidModulusError(f"modulus must be at least 2, got {n}")
    if e < 0:
        return pow(mod_inverse(g, n), -e, n)
    return pow(g, e, n)


def isqrt_exact(n: int) -> tuple[int, bool]:
    """Return ``(floor(sqrt(n)), is_square)``."""
    if n < 0:
        raise InvalidArgumentError(f"cannot take square root of negative {n}")
    root = math.isqrt(n)
    return root, root * root == n


def two_adic_valuation(n: int) -> int:
    if n == 0:
        raise InvalidArgumentError("2-adic valuation of zero is undefined")
    n = abs(n)
    return (n & -n).bit_length() - 1


def smallest_m(d: int) -> int:
    """Smallest ``m`` with ``d < 2**m`` (the bit length of ``d``)."""
    if d <= 0:
        raise InvalidArgumentError(f"d must be positive, got {d}")
    return d.bit_length()
