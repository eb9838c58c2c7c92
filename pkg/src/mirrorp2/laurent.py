"""Exact arithmetic for p_n(q, E) as a polynomial in E whose coefficients are
Laurent polynomials in q with integer coefficients. Small n only."""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import DomainError

P_SYMBOLIC_MAX_N = 12


@dataclass(frozen=True)
class LaurentPoly:
    """sum_k coeffs[k] q^k with integer coefficients; zero terms are dropped."""

    coeffs: tuple = field(default=())  # sorted ((exponent, coefficient), ...)

    @classmethod
    def from_dict(cls, d: dict) -> "LaurentPoly":
        return cls(tuple(sorted((k, v) for k, v in d.items() if v != 0)))

    @classmethod
    def const(cls, c: int) -> "LaurentPoly":
        return cls.from_dict({0: c})

    @classmethod
    def monomial(cls, k: int, c: int = 1) -> "LaurentPoly":
        return cls.from_dict({k: c})

    @classmethod
    def q_n(cls, n: int) -> "LaurentPoly":
        """q^n - q^{-n}."""
        return cls.from_dict({n: 1}) - cls.from_dict({-n: 1})

    def as_dict(self) -> dict:
        return dict(self.coeffs)

    def is_zero(self) -> bool:
        return not self.coeffs

    def __add__(self, other):
        other = _lift(other)
        d = self.as_dict()
        for k, v in other.coeffs:
            d[k] = d.get(k, 0) + v
        return LaurentPoly.from_dict(d)

    __radd__ = __add__

    def __neg__(self):
        return LaurentPoly(tuple((k, -v) for k, v in self.coeffs))

    def __sub__(self, other):
        return self + (-_lift(other))

    def __rsub__(self, other):
        return _lift(other) - self

    def __mul__(self, other):
        other = _lift(other)
        d: dict = {}
        for k1, v1 in self.coeffs:
            for k2, v2 in other.coeffs:
                d[k1 + k2] = d.get(k1 + k2, 0) + v1 * v2
        return LaurentPoly.from_dict(d)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        out = LaurentPoly.const(1)
        for _ in range(n):
            out = out * self
        return out

    def exact_div(self, other: "LaurentPoly") -> "LaurentPoly":
        """Quotient when ``other`` divides ``self`` exactly, else ValueError."""
        if other.is_zero():
            raise ZeroDivisionError("division by the zero Laurent polynomial")
        if self.is_zero():
            return LaurentPoly()
        a_lo, b_lo = self.coeffs[0][0], other.coeffs[0][0]
        rem = {k - a_lo: v for k, v in self.coeffs}
        div = {k - b_lo: v for k, v in other.coeffs}
        top_b = max(div)
        quot: dict = {}
        while rem and max(rem) >= top_b:
            k = max(rem)
            v, r = divmod(rem[k], div[top_b])
            if r:
                raise ValueError("non-integral quotient")
            quot[k - top_b + a_lo - b_lo] = v
            for kb, vb in div.items():
                kk = k - top_b + kb
                rem[kk] = rem.get(kk, 0) - v * vb
                if rem[kk] == 0:
                    del rem[kk]
        if rem:
            raise ValueError("division is not exact")
        return LaurentPoly.from_dict(quot)

    def invert(self) -> "LaurentPoly":
        """Substitute q -> 1/q."""
        return LaurentPoly.from_dict({-k: v for k, v in self.coeffs})

    def __call__(self, q: complex) -> complex:
        return complex(sum(v * q**k for k, v in self.coeffs))


def _lift(x) -> LaurentPoly:
    return x if isinstance(x, LaurentPoly) else LaurentPoly.const(int(x))


@dataclass(frozen=True)
class EPoly:
    """Polynomial in E with LaurentPoly coefficients: terms[k] multiplies E^k."""

    terms: tuple = ()  # sorted ((power, LaurentPoly), ...)

    @classmethod
    def from_dict(cls, d: dict) -> "EPoly":
        return cls(tuple(sorted((k, v) for k, v in d.items() if not v.is_zero())))

    def coefficient(self, k: int) -> LaurentPoly:
        return dict(self.terms).get(k, LaurentPoly())

    @property
    def degree(self) -> int:
        return self.terms[-1][0] if self.terms else -1

    def __add__(self, other: "EPoly") -> "EPoly":
        d = dict(self.terms)
        for k, v in other.terms:
            d[k] = d.get(k, LaurentPoly()) + v
        return EPoly.from_dict(d)

    def times_E(self) -> "EPoly":
        return EPoly(tuple((k + 1, v) for k, v in self.terms))

    def scale(self, c: LaurentPoly) -> "EPoly":
        return EPoly.from_dict({k: v * c for k, v in self.terms})

    def invert_q(self) -> "EPoly":
        return EPoly(tuple((k, v.invert()) for k, v in self.terms))

    def __call__(self, q: complex, E: complex) -> complex:
        return complex(sum(v(q) * E**k for k, v in self.terms))


def p_symbolic(n: int) -> EPoly:
    """p_n as an exact polynomial, from p_{k+1} = E p_k + q_k q_{k-1} p_{k-2}."""
    if n < 0:
        raise DomainError("p_n needs n >= 0")
    if n > P_SYMBOLIC_MAX_N:
        raise DomainError(f"exact expansion is limited to n <= {P_SYMBOLIC_MAX_N}")
    one = EPoly.from_dict({0: LaurentPoly.const(1)})
    seq = [EPoly(), EPoly(), one]  # p_{-2}, p_{-1}, p_0
    for k in range(n):
        nxt = seq[-1].times_E()
        if k >= 2:
            nxt = nxt + seq[-3].scale(LaurentPoly.q_n(k) * LaurentPoly.q_n(k - 1))
        seq.append(nxt)
    return seq[-1]
