"""Admissible coefficient series and the semigroup algebra over them.

An *admissible series* is a finitely supported map k -> c_k (k >= 0) with
c_k >= 0, sum c_k <= 1, c_0 > 0 and at least one positive coefficient at
k > 0.  It plays two roles: as the sampling distribution for spacer columns
(see :mod:`rankone.construction`) and as a generator of the operator
semigroup spanned by a shift operator T, the series evaluated at T, and
their adjoints.

Because T is invertible and everything here commutes, every semigroup
element is fully described by a finitely supported map z -> q_z over the
integers (negative z encoding adjoint powers).  :class:`FormalElement`
holds that map together with a symbolic word; products are coefficient
convolutions.  All arithmetic is exact (:class:`fractions.Fraction`), so
element equality -- and hence deduplication during enumeration -- is
decidable.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

__all__ = [
    "AdmissibleSeries",
    "FormalElement",
    "SeriesValidationError",
    "adjoint",
    "convolve",
    "element_from_json",
    "element_to_json",
    "enumerate_semigroup",
    "make_admissible",
    "power",
    "validate_coeffs",
]


def _to_fraction(x) -> Fraction:
    if isinstance(x, float):
        # Floats are accepted for convenience but converted through their
        # exact binary value; callers wanting exact decimals should pass
        # strings or Fractions.
        return Fraction(x).limit_denominator(10**12)
    return Fraction(x)


class SeriesValidationError(ValueError):
    """Raised when a coefficient map is not admissible.

    The individual failed conditions are available as ``violations``.
    """

    def __init__(self, violations: Sequence[str]):
        super().__init__("; ".join(violations))
        self.violations = list(violations)


def validate_coeffs(coeffs: Mapping[int, object]) -> list[str]:
    """Return every admissibility violation of ``coeffs`` (empty list = ok)."""
    violations = []
    frac = {}
    for k, v in coeffs.items():
        if not isinstance(k, int) or k < 0:
            violations.append(f"exponent {k!r} is not a nonnegative integer")
            continue
        frac[k] = _to_fraction(v)
    for k, v in sorted(frac.items()):
        if v < 0:
            violations.append(f"coefficient c_{k} = {v} is negative")
    mass = sum(frac.values(), Fraction(0))
    if mass > 1:
        violations.append(f"total mass {mass} exceeds 1")
    if frac.get(0, Fraction(0)) <= 0:
        violations.append("constant coefficient c_0 must be positive")
    if not any(v > 0 for k, v in frac.items() if k > 0):
        violations.append("some coefficient c_k with k > 0 must be positive")
    return violations


@dataclass(frozen=True)
class AdmissibleSeries:
    """Finitely supported admissible coefficient series.

    ``coeffs`` is stored as a sorted tuple of (exponent, Fraction) pairs with
    zero entries dropped; ``declared_mass`` is the exact total mass (<= 1).
    """

    coeffs: tuple[tuple[int, Fraction], ...]
    declared_mass: Fraction

    def as_dict(self) -> dict[int, Fraction]:
        return dict(self.coeffs)

    @property
    def mass(self) -> Fraction:
        return self.declared_mass

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(k for k, _ in self.coeffs)

    @property
    def max_exponent(self) -> int:
        return self.coeffs[-1][0]

    def renormalized(self) -> "AdmissibleSeries":
        """The conditional distribution: coefficients divided by total mass."""
        if self.declared_mass == 1:
            return self
        scaled = tuple((k, v / self.declared_mass) for k, v in self.coeffs)
        return AdmissibleSeries(scaled, Fraction(1))

    def __str__(self) -> str:
        return " + ".join(f"{v}*T^{k}" for k, v in self.coeffs)


def make_admissible(coeffs: Mapping[int, object]) -> AdmissibleSeries:
    """Validate ``coeffs`` and build an :class:`AdmissibleSeries`.

    Raises :class:`SeriesValidationError` listing every failed condition.
    """
    violations = validate_coeffs(coeffs)
    if violations:
        raise SeriesValidationError(violations)
    frac = sorted((k, _to_fraction(v)) for k, v in coeffs.items() if _to_fraction(v) != 0)
    mass = sum((v for _, v in frac), Fraction(0))
    return AdmissibleSeries(tuple(frac), mass)


# ---------------------------------------------------------------------------
# Formal semigroup elements
# ---------------------------------------------------------------------------

# A factorization is (t_exp, ((gen_index, direct_exp, adjoint_exp), ...)).
# It is carried for reporting only; equality ignores it.
Factorization = tuple[int, tuple[tuple[int, int, int], ...]]


def _render_word(fact: Factorization | None, fallback: str) -> str:
    if fact is None:
        return fallback
    t_exp, powers = fact
    parts = []
    if t_exp:
        parts.append("T" if t_exp == 1 else f"T^{t_exp}")
    for gen, direct, adj in powers:
        name = f"P{gen + 1}"
        if direct:
            parts.append(name if direct == 1 else f"{name}^{direct}")
        if adj:
            parts.append(f"{name}*" if adj == 1 else f"{name}*^{adj}")
    return "*".join(parts) if parts else "I"


@dataclass(frozen=True)
class FormalElement:
    """A semigroup element as a finitely supported map z -> coefficient.

    ``coeffs`` is a sorted tuple of (z, Fraction) with strictly positive
    entries; the empty tuple is the zero element.  ``word`` is a symbolic
    factorization kept for reports; two elements are equal iff their
    coefficient maps are equal (the weak topology only sees coefficients).
    """

    coeffs: tuple[tuple[int, Fraction], ...]
    word: str = "?"
    factorization: Factorization | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(sorted(self.coeffs)))

    # equality / hashing on coefficients only
    def __eq__(self, other) -> bool:
        if not isinstance(other, FormalElement):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash(self.coeffs)

    @classmethod
    def from_coeffs(cls, coeffs: Mapping[int, object], word: str = "?",
                    factorization: Factorization | None = None) -> "FormalElement":
        items = tuple(sorted((int(z), _to_fraction(v)) for z, v in coeffs.items()
                             if _to_fraction(v) != 0))
        if any(v < 0 for _, v in items):
            raise ValueError("formal elements have nonnegative coefficients")
        return cls(items, word, factorization)

    @classmethod
    def zero(cls) -> "FormalElement":
        return cls((), "0", None)

    @classmethod
    def identity(cls) -> "FormalElement":
        return cls(((0, Fraction(1)),), "I", (0, ()))

    @classmethod
    def t_power(cls, z: int) -> "FormalElement":
        fact = (z, ())
        return cls(((z, Fraction(1)),), _render_word(fact, ""), fact)

    @classmethod
    def from_series(cls, series: AdmissibleSeries, gen_index: int = 0) -> "FormalElement":
        fact = (0, ((gen_index, 1, 0),))
        return cls(tuple(series.coeffs), _render_word(fact, ""), fact)

    def as_dict(self) -> dict[int, Fraction]:
        return dict(self.coeffs)

    @property
    def mass(self) -> Fraction:
        return sum((v for _, v in self.coeffs), Fraction(0))

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(z for z, _ in self.coeffs)

    @property
    def max_abs_exponent(self) -> int:
        return max((abs(z) for z, _ in self.coeffs), default=0)

    def coefficient(self, z: int) -> Fraction:
        for zz, v in self.coeffs:
            if zz == z:
                return v
        return Fraction(0)

    def __str__(self) -> str:
        return self.word


def _merge_factorizations(a: Factorization | None, b: Factorization | None) -> Factorization | None:
    if a is None or b is None:
        return None
    ta, pa = a
    tb, pb = b
    powers: dict[int, list[int]] = {}
    for gen, direct, adj in itertools.chain(pa, pb):
        cur = powers.setdefault(gen, [0, 0])
        cur[0] += direct
        cur[1] += adj
    merged = tuple((g, d, s) for g, (d, s) in sorted(powers.items()) if d or s)
    return (ta + tb, merged)


def convolve(a: FormalElement, b: FormalElement) -> FormalElement:
    """Semigroup product: coefficient convolution, words concatenated."""
    if a.is_zero or b.is_zero:
        return FormalElement.zero()
    out: dict[int, Fraction] = {}
    for u, x in a.coeffs:
        for v, y in b.coeffs:
            out[u + v] = out.get(u + v, Fraction(0)) + x * y
    fact = _merge_factorizations(a.factorization, b.factorization)
    word = _render_word(fact, f"({a.word})*({b.word})")
    return FormalElement.from_coeffs(out, word, fact)


def adjoint(a: FormalElement) -> FormalElement:
    """Reflect exponents: z -> -z.  Involutive."""
    if a.is_zero:
        return a
    fact = None
    if a.factorization is not None:
        t_exp, powers = a.factorization
        fact = (-t_exp, tuple((g, s, d) for g, d, s in powers))
    word = _render_word(fact, f"({a.word})*adj")
    return FormalElement(tuple((-z, v) for z, v in a.coeffs), word, fact)


def power(a: FormalElement, n: int) -> FormalElement:
    """n-fold product; n = 0 gives the identity."""
    if n < 0:
        raise ValueError("power requires n >= 0")
    result = FormalElement.identity()
    for _ in range(n):
        result = convolve(result, a)
    return result


def enumerate_semigroup(generators: Sequence[AdmissibleSeries],
                        max_total_degree: int,
                        z_range: int) -> list[FormalElement]:
    """Enumerate T^z * prod P_i^{b_i} * prod P_i(T*)^{c_i}, deduplicated.

    Covers sum(b_i + c_i) <= max_total_degree and |z| <= z_range, plus the
    zero element.  Two elements are equal iff their coefficient maps are
    equal; among coefficient-equal words the one with the fewest factors
    (then the smallest bare shift) is kept, so e.g. T*P1*P1* displays as
    P1^2.
    """
    if not generators:
        raise ValueError("at least one generator required")
    if max_total_degree < 0 or z_range < 0:
        raise ValueError("bounds must be nonnegative")
    k = len(generators)
    base = [FormalElement.from_series(g, i) for i, g in enumerate(generators)]
    base_adj = [adjoint(el) for el in base]

    def complexity(el: FormalElement, total: int, z: int) -> tuple[int, int]:
        return (total + abs(z), abs(z))

    seen: dict[tuple, tuple[tuple[int, int], int]] = {}
    out: list[FormalElement] = [FormalElement.zero()]
    seen[()] = ((0, 0), 0)

    # exponent vectors (b_1..b_k, c_1..c_k) by total degree
    for total in range(max_total_degree + 1):
        for exps in itertools.product(range(total + 1), repeat=2 * k):
            if sum(exps) != total:
                continue
            el = FormalElement.identity()
            for i in range(k):
                for _ in range(exps[i]):
                    el = convolve(el, base[i])
                for _ in range(exps[k + i]):
                    el = convolve(el, base_adj[i])
            for z in range(-z_range, z_range + 1):
                shifted = convolve(FormalElement.t_power(z), el) if z else el
                cx = complexity(shifted, total, z)
                prior = seen.get(shifted.coeffs)
                if prior is None:
                    seen[shifted.coeffs] = (cx, len(out))
                    out.append(shifted)
                elif cx < prior[0]:
                    seen[shifted.coeffs] = (cx, prior[1])
                    out[prior[1]] = shifted
    return out


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def element_to_json(el: FormalElement) -> str:
    """Serialize as {"word": ..., "coeffs": [[z, num, den], ...]} (z-sorted)."""
    rows = [[z, v.numerator, v.denominator] for z, v in el.coeffs]
    return json.dumps({"word": el.word, "coeffs": rows})


def element_from_json(text: str) -> FormalElement:
    blob = json.loads(text)
    coeffs = {int(z): Fraction(int(num), int(den)) for z, num, den in blob["coeffs"]}
    return FormalElement.from_coeffs(coeffs, blob.get("word", "?"))
