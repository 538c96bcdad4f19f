"""Residue arithmetic modulo a 64-bit odd modulus, plus deterministic primality."""

from __future__ import annotations

from dataclasses import dataclass

from rholab.errors import DegenerateCollision, ModulusMismatch

U64_MAX = (1 << 64) - 1

# Jaeschke / Sorenson-Webster: these witnesses decide every n < 3.3e24.
_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, exact for all 64-bit ``n``."""
    if n < 2:
        return False
    for p in _MR_WITNESSES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_WITNESSES:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def next_prime(n: int) -> int:
    """Smallest prime >= n."""
    if n <= 2:
        return 2
    n |= 1
    while not is_prime(n):
        n += 2
    return n


@dataclass(frozen=True)
class Modulus:
    n: int

    def __post_init__(self):
        if not isinstance(self.n, int) or isinstance(self.n, bool):
            raise TypeError("modulus must be an int")
        if self.n < 3 or self.n > U64_MAX:
            raise ValueError(f"modulus must lie in [3, 2**64), got {self.n}")
        if self.n % 2 == 0:
            raise ValueError(f"modulus must be odd, got {self.n}")

    @classmethod
    def prime(cls, n: int) -> Modulus:
        """Modulus that additionally must be prime (walk and spectral code)."""
        m = cls(n)
        if not is_prime(n):
            raise ValueError(f"{n} is not prime")
        return m

    def __call__(self, value: int) -> Residue:
        return Residue(value % self.n, self)

    def __int__(self):
        return self.n


@dataclass(frozen=True)
class Residue:
    value: int
    modulus: Modulus

    def __post_init__(self):
        if not 0 <= self.value < self.modulus.n:
            raise ValueError(f"residue {self.value} out of range for modulus {self.modulus.n}")

    def __int__(self):
        return self.value

    def __add__(self, other):
        return mod_add(self, other)

    def __sub__(self, other):
        _check_same(self, other)
        return Residue((self.value - other.value) % self.modulus.n, self.modulus)

    def __neg__(self):
        return Residue(-self.value % self.modulus.n, self.modulus)

    def __mul__(self, other):
        return mod_mul(self, other)

    def __repr__(self):
        return f"{self.value} (mod {self.modulus.n})"


def _check_same(a: Residue, b: Residue) -> None:
    if a.modulus.n != b.modulus.n:
        raise ModulusMismatch(f"moduli differ: {a.modulus.n} vs {b.modulus.n}")


def mod_add(a: Residue, b: Residue) -> Residue:
    _check_same(a, b)
    return Residue((a.value + b.value) % a.modulus.n, a.modulus)


def mod_mul(a: Residue, b: Residue) -> Residue:
    # Python ints are unbounded, so the 128-bit intermediate is exact.
    _check_same(a, b)
    return Residue(a.value * b.value % a.modulus.n, a.modulus)


def mod_inv(a: Residue) -> Residue:
    """Multiplicative inverse; raises DegenerateCollision when none exists."""
    try:
        return Residue(pow(a.value, -1, a.modulus.n), a.modulus)
    except ValueError:
        raise DegenerateCollision(f"{a.value} is not invertible mod {a.modulus.n}") from None
