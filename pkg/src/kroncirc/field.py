"""Exact scalar fields: the rationals and prime fields GF(p).

Field elements are plain Python numbers.  Over Q they are ``int`` (when
integral) or ``fractions.Fraction``; over GF(p) they are ints in ``[0, p)``.
Keeping them unboxed makes the sparse kernels fast; the :class:`Field`
object carries the interpretation.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Union

Scalar = Union[int, Fraction]

MAX_MODULUS = 2**63 - 1

_RATIONAL_RE = re.compile(r"^\s*(-?\d+)(?:\s*/\s*(\d+))?\s*$")
_TAG_RE = re.compile(r"^GF\s*\(?\s*(\d+)\s*\)?$")


class FieldError(ValueError):
    """Raised on invalid field specs, mismatched fields or bad scalars."""


@lru_cache(maxsize=64)
def _is_prime(p: int) -> bool:
    from sympy import isprime  # deterministic below 2**64

    return bool(isprime(p))


@dataclass(frozen=True)
class Field:
    kind: str = "rational"
    modulus: int | None = None

    def __post_init__(self):
        if self.kind == "rational":
            if self.modulus is not None:
                raise FieldError("rational field takes no modulus")
        elif self.kind == "prime":
            p = self.modulus
            if not isinstance(p, int) or p < 2:
                raise FieldError(f"bad modulus {p!r}")
            if p > MAX_MODULUS:
                raise FieldError(f"modulus {p} exceeds 2^63-1")
            if not _is_prime(p):
                raise FieldError(f"modulus {p} is not prime")
        else:
            raise FieldError(f"unknown field kind {self.kind!r}")

    @property
    def is_prime(self) -> bool:
        return self.kind == "prime"

    @property
    def characteristic(self) -> int:
        return self.modulus if self.kind == "prime" else 0

    @property
    def tag(self) -> str:
        return f"GF{self.modulus}" if self.is_prime else "Q"

    @classmethod
    def from_tag(cls, tag: str) -> "Field":
        tag = tag.strip()
        if tag in ("Q", "QQ", "rational"):
            return Q
        m = _TAG_RE.match(tag)
        if m is None:
            raise FieldError(f"unknown field tag {tag!r}")
        return GF(int(m.group(1)))

    def to_json(self) -> dict:
        if self.is_prime:
            return {"kind": "prime", "modulus": self.modulus}
        return {"kind": "rational"}

    @classmethod
    def from_json(cls, obj) -> "Field":
        if isinstance(obj, str):
            return cls.from_tag(obj)
        return cls(obj.get("kind", "rational"), obj.get("modulus"))

    # scalar handling

    def __call__(self, value) -> Scalar:
        """Coerce ``value`` (int, Fraction or canonical string) into the field."""
        if isinstance(value, str):
            return self.parse(value)
        if isinstance(value, bool):
            value = int(value)
        if self.is_prime:
            if isinstance(value, Fraction):
                num = value.numerator % self.modulus
                den = value.denominator % self.modulus
                if den == 0:
                    raise FieldError(f"{value} has no image in {self.tag}")
                return num * pow(den, -1, self.modulus) % self.modulus
            if isinstance(value, int):
                return value % self.modulus
            raise FieldError(f"cannot coerce {value!r} into {self.tag}")
        if isinstance(value, int):
            return value
        if isinstance(value, Fraction):
            return value.numerator if value.denominator == 1 else value
        raise FieldError(f"cannot coerce {value!r} into Q")

    def parse(self, text: str) -> Scalar:
        m = _RATIONAL_RE.match(text)
        if m is None:
            raise FieldError(f"not an exact scalar: {text!r}")
        num = int(m.group(1))
        if m.group(2) is None:
            return self(num)
        den = int(m.group(2))
        if den == 0:
            raise FieldError("zero denominator")
        return self(Fraction(num, den))

    def format(self, value: Scalar) -> str:
        value = self(value)
        if isinstance(value, Fraction):
            return f"{value.numerator}/{value.denominator}"
        return str(value)

    def zero(self) -> Scalar:
        return 0

    def one(self) -> Scalar:
        return 1

    def add(self, a: Scalar, b: Scalar) -> Scalar:
        return self(a + b)

    def sub(self, a: Scalar, b: Scalar) -> Scalar:
        return self(a - b)

    def mul(self, a: Scalar, b: Scalar) -> Scalar:
        return self(a * b)

    def neg(self, a: Scalar) -> Scalar:
        return self(-a)

    def inv(self, a: Scalar) -> Scalar:
        a = self(a)
        if a == 0:
            raise ZeroDivisionError("zero has no inverse")
        if self.is_prime:
            return pow(a, -1, self.modulus)
        return self(Fraction(1) / a)

    def div(self, a: Scalar, b: Scalar) -> Scalar:
        return self.mul(a, self.inv(b))

    def power(self, a: Scalar, e: int) -> Scalar:
        """``a**e``; negative exponents need ``a`` invertible, and ``0**0 == 1``."""
        a = self(a)
        if e < 0:
            return self.power(self.inv(a), -e)
        if self.is_prime:
            return pow(a, e, self.modulus)
        return self(a**e)


Q = Field("rational")


def GF(p: int) -> Field:
    return Field("prime", p)
