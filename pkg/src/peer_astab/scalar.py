"""Exact scalars: rationals (``fractions.Fraction``) and the quadratic field Q(sqrt d).

Rationals are plain :class:`fractions.Fraction` objects. Elements of a real
quadratic extension are :class:`QuadExt` values ``a + b*sqrt(d)``. Both
interoperate with Python ints, so numpy object arrays of them behave like
ordinary matrices under ``@``, ``+`` and friends.

Floats never leak into the exact world; the only bridge is :func:`to_float`.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering
from numbers import Rational

__all__ = [
    "FieldSpec",
    "QuadExt",
    "ScalarParseError",
    "is_exact",
    "is_squarefree",
    "parse_scalar",
    "render_scalar",
    "sign",
    "to_float",
]


class ScalarParseError(ValueError):
    pass


def is_squarefree(n: int) -> bool:
    if n < 2:
        return False
    k = 2
    while k * k <= n:
        if n % (k * k) == 0:
            return False
        k += 1
    return True


@dataclass(frozen=True)
class FieldSpec:
    """Which scalar world a matrix lives in.

    ``kind`` is ``"rational"``, ``"quadratic"`` or ``"float64"``; ``d`` is the
    square-free radicand for the quadratic case.
    """

    kind: str = "rational"
    d: int | None = None

    def __post_init__(self):
        if self.kind not in ("rational", "quadratic", "float64"):
            raise ValueError(f"unknown field kind {self.kind!r}")
        if self.kind == "quadratic":
            if self.d is None or not is_squarefree(self.d):
                raise ValueError(f"quadratic field needs square-free d >= 2, got {self.d}")
        elif self.d is not None:
            raise ValueError("only quadratic fields carry a radicand")

    @property
    def exact(self) -> bool:
        return self.kind != "float64"

    @classmethod
    def parse(cls, text: str) -> FieldSpec:
        text = text.strip()
        if text.startswith("quadratic"):
            _, _, d = text.partition(":")
            if not d:
                raise ValueError("quadratic field spec must look like 'quadratic:65'")
            return cls("quadratic", int(d))
        return cls(text)

    def __str__(self) -> str:
        return f"quadratic:{self.d}" if self.kind == "quadratic" else self.kind


def _q(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    raise TypeError(f"not an exact rational: {x!r}")


@total_ordering
class QuadExt:
    """The number ``a + b*sqrt(d)`` with rational ``a, b`` and square-free ``d``.

    Arithmetic between values with different ``d`` raises ``ValueError``.
    Ints and Fractions are promoted on the fly.
    """

    __slots__ = ("a", "b", "d")

    def __init__(self, a, b=0, d: int = 2):
        self.a = _q(a)
        self.b = _q(b)
        self.d = int(d)

    def _coerce(self, other):
        if isinstance(other, QuadExt):
            if other.d != self.d:
                raise ValueError(f"cannot combine sqrt({self.d}) with sqrt({other.d})")
            return other
        if isinstance(other, (int, Fraction)):
            return QuadExt(other, 0, self.d)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return QuadExt(self.a + o.a, self.b + o.b, self.d)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return QuadExt(self.a - o.a, self.b - o.b, self.d)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __neg__(self):
        return QuadExt(-self.a, -self.b, self.d)

    def __pos__(self):
        return self

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return QuadExt(self.a * o.a + self.b * o.b * self.d, self.a * o.b + self.b * o.a, self.d)

    __rmul__ = __mul__

    def norm(self) -> Fraction:
        return self.a * self.a - self.b * self.b * self.d

    def conjugate(self) -> QuadExt:
        return QuadExt(self.a, -self.b, self.d)

    def inverse(self) -> QuadExt:
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("QuadExt division by zero")
        return QuadExt(self.a / n, -self.b / n, self.d)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o * self.inverse()

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.inverse() ** (-n)
        out = QuadExt(1, 0, self.d)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __abs__(self):
        return -self if sign(self) < 0 else self

    def __bool__(self):
        return bool(self.a) or bool(self.b)

    def __eq__(self, other):
        if isinstance(other, QuadExt):
            return self.a == other.a and self.b == other.b and (self.d == other.d or self.b == 0)
        if isinstance(other, (int, Fraction)):
            return self.b == 0 and self.a == other
        return NotImplemented

    def __lt__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return sign(self - o) < 0

    def __hash__(self):
        if self.b == 0:
            return hash(self.a)
        return hash((self.a, self.b, self.d))

    def __float__(self):
        return to_float(self)

    def __repr__(self):
        return f"QuadExt({self.a}, {self.b}, {self.d})"

    def __str__(self):
        return render_scalar(self)


def _fsign(x: Fraction) -> int:
    return (x > 0) - (x < 0)


def sign(x) -> int:
    """Exact sign of a rational or of ``a + b*sqrt(d)``."""
    if not isinstance(x, QuadExt):
        return _fsign(_q(x))
    sa, sb = _fsign(x.a), _fsign(x.b)
    if sb == 0:
        return sa
    if sa == 0 or sa == sb:
        return sb
    # opposite signs: the larger magnitude wins
    cmp = x.a * x.a - x.b * x.b * x.d
    if cmp == 0:
        return 0
    return sa if cmp > 0 else sb


def is_exact(x) -> bool:
    return isinstance(x, (int, Fraction, QuadExt))


def to_float(x) -> float:
    """Double closest (to a few ulps) to the exact value. Not a certifying operation.

    Raises ``OverflowError`` when the value is outside the double range.
    """
    if isinstance(x, QuadExt):
        if x.b == 0:
            return float(x.a)
        root = math.sqrt(x.d)
        if _fsign(x.a) * _fsign(x.b) >= 0:
            return float(x.a) + float(x.b) * root
        # a - b*sqrt(d) has no cancellation; divide the exact norm by it
        return float(x.norm()) / (float(x.a) - float(x.b) * root)
    if isinstance(x, (int, Fraction)):
        return float(x)
    return float(x)


_RAT = r"[+-]?\d+(?:/\d+)?"
_SCALAR_RE = re.compile(
    rf"^(?P<a>{_RAT})?(?:(?P<bs>[+-])?(?P<b>\d+(?:/\d+)?)?\*?sqrt\((?P<d>\d+)\))?$"
)
_FLOAT_RE = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")


def _parse_rational(text: str) -> Fraction:
    num, _, den = text.partition("/")
    if den and int(den) == 0:
        raise ScalarParseError(f"zero denominator in {text!r}")
    return Fraction(int(num), int(den) if den else 1)


def parse_scalar(text: str, field: FieldSpec | None = None):
    """Parse ``INT``, ``INT/POSINT``, optionally followed by ``+-q*sqrt(d)``.

    >>> parse_scalar("20/29")
    Fraction(20, 29)
    >>> parse_scalar("207/500+3/100*sqrt(65)", FieldSpec("quadratic", 65))
    QuadExt(207/500, 3/100, 65)
    """
    field = field or FieldSpec()
    if not isinstance(text, str):
        raise ScalarParseError(f"scalars are serialized as strings, got {text!r}")
    s = text.replace(" ", "")
    if not s:
        raise ScalarParseError("empty scalar")
    if field.kind == "float64":
        if _FLOAT_RE.match(s) or re.match(rf"^{_RAT}$", s):
            if "/" in s:
                return float(_parse_rational(s))
            return float(s)
        raise ScalarParseError(f"malformed float {text!r}")
    m = _SCALAR_RE.match(s)
    if not m or (m.group("a") is None and m.group("d") is None):
        raise ScalarParseError(f"malformed scalar {text!r}")
    a = _parse_rational(m.group("a")) if m.group("a") else Fraction(0)
    if m.group("d") is None:
        if field.kind == "quadratic":
            return QuadExt(a, 0, field.d)
        return a
    d = int(m.group("d"))
    if field.kind != "quadratic":
        raise ScalarParseError(f"sqrt({d}) not allowed in a {field.kind} field")
    if d != field.d:
        raise ScalarParseError(f"sqrt({d}) does not match field radicand {field.d}")
    if m.group("a") is not None and m.group("bs") is None:
        if m.group("b") is not None or "*" not in s:
            raise ScalarParseError(f"malformed scalar {text!r}")
        # "3/2*sqrt(5)": the leading rational is the surd coefficient
        return QuadExt(0, a, d)
    b = _parse_rational(m.group("b")) if m.group("b") else Fraction(1)
    if m.group("bs") == "-":
        b = -b
    return QuadExt(a, b, d)


def _render_q(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def render_scalar(x) -> str:
    if isinstance(x, QuadExt):
        if x.b == 0:
            return _render_q(x.a)
        op = "+" if x.b > 0 else "-"
        return f"{_render_q(x.a)}{op}{_render_q(abs(x.b))}*sqrt({x.d})"
    if isinstance(x, (int, Fraction)):
        return _render_q(Fraction(x))
    return repr(float(x))
