"""Exact field arithmetic over the rationals and prime fields.

Matrices store raw field values (``Fraction`` over Q, ``int`` residues over
F_p) and do their arithmetic through a :class:`FieldSpec`. The
:class:`Scalar` wrapper is the user-facing value type: it carries its field
so that mixing fields is caught.
"""

import logging
import re
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from sympy import isprime

from torvan.errors import DivisionByZeroError, FieldMismatchError, InputError

LOGGER = logging.getLogger(__name__)

RATIONAL_PATTERN = re.compile(r"[+-]?\d+(/\d+)?")
RESIDUE_PATTERN = re.compile(r"[+-]?\d+")


class FieldKind(Enum):
    RATIONALS = "q"
    PRIME = "fp"


@dataclass(frozen=True)
class FieldSpec:
    kind: FieldKind
    p: int | None = None

    def __post_init__(self):
        if self.kind is FieldKind.PRIME:
            if not isinstance(self.p, int) or self.p < 2 or not isprime(self.p):
                raise InputError(f"Prime field requires a prime modulus, got {self.p}")
        elif self.p is not None:
            raise InputError("The rational field takes no modulus")

    @classmethod
    def rationals(cls):
        return cls(FieldKind.RATIONALS)

    @classmethod
    def prime(cls, p: int):
        return cls(FieldKind.PRIME, p)

    @classmethod
    def parse(cls, text: str):
        """Parse ``q`` or ``fp:<p>``."""
        text = text.strip().lower()
        if text == "q":
            return cls.rationals()
        if text.startswith("fp:"):
            modulus = text[3:]
            if not modulus.isdigit():
                raise InputError(f"Field modulus is not an integer: {text}")
            return cls.prime(int(modulus))
        raise InputError(f"Unknown field {text!r}. Valid fields are q or fp:<p>")

    def render(self) -> str:
        if self.kind is FieldKind.RATIONALS:
            return "q"
        return f"fp:{self.p}"

    def __str__(self):
        return self.render()

    @property
    def is_prime(self) -> bool:
        return self.kind is FieldKind.PRIME

    # raw value arithmetic; values are assumed canonical

    @property
    def zero(self):
        return 0 if self.is_prime else Fraction(0)

    @property
    def one(self):
        return 1 if self.is_prime else Fraction(1)

    def coerce(self, value):
        """Canonical raw value for an int, Fraction, Scalar or scalar text."""
        if isinstance(value, Scalar):
            if value.field != self:
                raise FieldMismatchError(value.field, self)
            return value.value
        if isinstance(value, str):
            return self.parse_value(value)
        if self.is_prime:
            if isinstance(value, Fraction):
                return self.div(value.numerator % self.p, value.denominator % self.p)
            return int(value) % self.p
        return Fraction(value)

    def add(self, a, b):
        if self.is_prime:
            return (a + b) % self.p
        return a + b

    def sub(self, a, b):
        if self.is_prime:
            return (a - b) % self.p
        return a - b

    def neg(self, a):
        if self.is_prime:
            return (-a) % self.p
        return -a

    def mul(self, a, b):
        if self.is_prime:
            return (a * b) % self.p
        return a * b

    def inv(self, a):
        if not a:
            raise DivisionByZeroError(f"Cannot invert zero in {self}")
        if self.is_prime:
            return pow(a, -1, self.p)
        return 1 / a

    def div(self, a, b):
        return self.mul(a, self.inv(b))

    def parse_value(self, text: str):
        text = text.strip()
        if self.is_prime:
            if not RESIDUE_PATTERN.fullmatch(text):
                raise InputError(f"Not a residue for {self}: {text!r}")
            return int(text) % self.p
        if not RATIONAL_PATTERN.fullmatch(text):
            raise InputError(f"Not a rational number: {text!r}")
        numerator, _, denominator = text.partition("/")
        if denominator and int(denominator) == 0:
            raise DivisionByZeroError(f"Zero denominator in {text!r}")
        return Fraction(int(numerator), int(denominator or 1))

    def render_value(self, value) -> str:
        if self.is_prime:
            return str(value)
        if value.denominator == 1:
            return str(value.numerator)
        return f"{value.numerator}/{value.denominator}"


RATIONALS = FieldSpec.rationals()


@dataclass(frozen=True)
class Scalar:
    field: FieldSpec
    value: object

    @classmethod
    def of(cls, field: FieldSpec, value):
        return cls(field, field.coerce(value))

    def _check(self, other):
        if not isinstance(other, Scalar):
            return Scalar.of(self.field, other)
        if other.field != self.field:
            raise FieldMismatchError(self.field, other.field)
        return other

    def __add__(self, other):
        return scalar_add(self, self._check(other))

    __radd__ = __add__

    def __sub__(self, other):
        other = self._check(other)
        return Scalar(self.field, self.field.sub(self.value, other.value))

    def __rsub__(self, other):
        return self._check(other) - self

    def __neg__(self):
        return Scalar(self.field, self.field.neg(self.value))

    def __mul__(self, other):
        return scalar_mul(self, self._check(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return scalar_mul(self, scalar_inv(self._check(other)))

    def __rtruediv__(self, other):
        return self._check(other) / self

    def __bool__(self):
        return bool(self.value)

    def __str__(self):
        return render_scalar(self)


def _same_field(a: Scalar, b: Scalar):
    if a.field != b.field:
        raise FieldMismatchError(a.field, b.field)


def scalar_add(a: Scalar, b: Scalar) -> Scalar:
    _same_field(a, b)
    return Scalar(a.field, a.field.add(a.value, b.value))


def scalar_mul(a: Scalar, b: Scalar) -> Scalar:
    _same_field(a, b)
    return Scalar(a.field, a.field.mul(a.value, b.value))


def scalar_inv(a: Scalar) -> Scalar:
    return Scalar(a.field, a.field.inv(a.value))


def parse_scalar(text: str, field: FieldSpec = RATIONALS) -> Scalar:
    return Scalar(field, field.parse_value(text))


def render_scalar(s: Scalar) -> str:
    return s.field.render_value(s.value)
