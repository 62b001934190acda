"""Exact algebra for two-level atom ⊗ single-mode boson operators.

Every expression is a finite sum of terms

    coeff · λ^k · |r⟩⟨c| ⊗ a†^m a^n

with an exact complex-rational coefficient, a power ``k`` of the coupling
constant, a 2×2 matrix unit on the atom (basis order ``g, e``) and a
normal-ordered bosonic monomial. Because the matrix units and the
normal-ordered monomials are both linearly independent, this expansion is
unique, so two expressions are equal exactly when their term tables are.
"""

from __future__ import annotations

import math
import re
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Union

import numpy as np

from .errors import UnknownState

__all__ = [
    "Scalar",
    "AtomicBlock",
    "BosonicMonomial",
    "OperatorTerm",
    "OperatorExpr",
    "BareState",
    "multiply",
    "commutator",
    "normal_order",
    "equals",
    "canonical",
    "to_matrix",
    "normal_ordered_coefficients",
    "parse_state",
    "state_index",
    "sigma_plus",
    "sigma_minus",
    "sigma_z",
    "sigma_x",
    "proj_e",
    "proj_g",
    "identity",
    "annihilate",
    "create",
    "number",
    "boson_word",
    "PAULI_LABELS",
]

Number = Union[int, Fraction]

G, E = 0, 1
ATOM_LABELS = ("g", "e")


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"cannot convert {x!r} to an exact rational")


@dataclass(frozen=True, slots=True)
class Scalar:
    """Exact complex rational ``re + i·im``."""

    re: Fraction = Fraction(0)
    im: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "re", _frac(self.re))
        object.__setattr__(self, "im", _frac(self.im))

    @classmethod
    def of(cls, x) -> Scalar:
        """Coerce ints, Fractions, rational strings or complex values."""
        if isinstance(x, Scalar):
            return x
        if isinstance(x, complex):
            return cls(Fraction(x.real), Fraction(x.imag))
        return cls(_frac(x))

    def __add__(self, other):
        o = Scalar.of(other)
        return Scalar(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = Scalar.of(other)
        return Scalar(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        return Scalar.of(other) - self

    def __mul__(self, other):
        o = Scalar.of(other)
        return Scalar(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = Scalar.of(other)
        den = o.re * o.re + o.im * o.im
        if den == 0:
            raise ZeroDivisionError("division by an exact zero Scalar")
        num = self * o.conjugate()
        return Scalar(num.re / den, num.im / den)

    def __rtruediv__(self, other):
        return Scalar.of(other) / self

    def __neg__(self):
        return Scalar(-self.re, -self.im)

    def __pow__(self, k: int):
        if k < 0:
            return Scalar(1) / self**-k
        out = Scalar(1)
        for _ in range(k):
            out = out * self
        return out

    def conjugate(self) -> Scalar:
        return Scalar(self.re, -self.im)

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.im == 0 and self.re == other
        if isinstance(other, Scalar):
            return self.re == other.re and self.im == other.im
        return NotImplemented

    def __hash__(self):
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    @property
    def is_real(self) -> bool:
        return self.im == 0

    def __str__(self):
        if self.im == 0:
            return str(self.re)
        if self.re == 0:
            return f"{self.im}i"
        sign = "+" if self.im > 0 else "-"
        return f"{self.re}{sign}{abs(self.im)}i"

    def __repr__(self):
        return f"Scalar({self})"


ZERO = Scalar(0)
ONE = Scalar(1)


@dataclass(frozen=True, slots=True)
class AtomicBlock:
    """A 2×2 matrix on the atom in the basis ``(|g⟩, |e⟩)``.

    ``entries[r][c]`` is ``⟨r|A|c⟩``. Products are ordinary matrix products.
    """

    entries: tuple[tuple[Scalar, Scalar], tuple[Scalar, Scalar]]

    @classmethod
    def from_rows(cls, rows) -> AtomicBlock:
        return cls(tuple(tuple(Scalar.of(x) for x in row) for row in rows))

    @classmethod
    def unit(cls, r: int, c: int) -> AtomicBlock:
        rows = [[0, 0], [0, 0]]
        rows[r][c] = 1
        return cls.from_rows(rows)

    def __matmul__(self, other: AtomicBlock) -> AtomicBlock:
        a, b = self.entries, other.entries
        return AtomicBlock(
            tuple(
                tuple(a[r][0] * b[0][c] + a[r][1] * b[1][c] for c in range(2))
                for r in range(2)
            )
        )

    def units(self) -> Iterator[tuple[int, int, Scalar]]:
        """Yield the non-zero ``(row, col, value)`` entries."""
        for r in range(2):
            for c in range(2):
                if self.entries[r][c]:
                    yield r, c, self.entries[r][c]

    def to_numpy(self) -> np.ndarray:
        return np.array([[complex(x) for x in row] for row in self.entries])


class BosonicMonomial(NamedTuple):
    """Normal-ordered ``a†^create_power a^annihilate_power``."""

    create_power: int
    annihilate_power: int

    @property
    def label(self) -> str:
        return _boson_label(self.create_power, self.annihilate_power)


def _boson_label(m: int, n: int) -> str:
    if m == 0 and n == 0:
        return "1"
    parts = []
    if m:
        parts.append("a†" if m == 1 else f"a†^{m}")
    if n:
        parts.append("a" if n == 1 else f"a^{n}")
    return "".join(parts) if len(parts) == 1 else parts[0] + parts[1]


def _monomial_product(m1: int, n1: int, m2: int, n2: int) -> list[tuple[int, int, int]]:
    # a^n1 a†^m2 = sum_k k! C(n1,k) C(m2,k) a†^(m2-k) a^(n1-k)
    out = []
    for k in range(min(n1, m2) + 1):
        w = math.factorial(k) * math.comb(n1, k) * math.comb(m2, k)
        out.append((m1 + m2 - k, n1 + n2 - k, w))
    return out


_UNIT_LABELS = {(G, G): "|g><g|", (G, E): "σ-", (E, G): "σ+", (E, E): "|e><e|"}
PAULI_LABELS = ("1", "σz", "σ+", "σ-")

# key = (lambda_power, row, col, m, n)
_Key = tuple[int, int, int, int, int]


@dataclass(frozen=True, slots=True)
class OperatorTerm:
    """One canonical term: ``coeff · λ^lambda_power · atomic ⊗ bosonic``.

    ``atomic`` is always a matrix unit and ``bosonic`` a single normal-ordered
    monomial, so a term is fully described by its key and coefficient.
    """

    coeff: Scalar
    lambda_power: int
    row: int
    col: int
    bosonic: BosonicMonomial

    @property
    def atomic(self) -> AtomicBlock:
        return AtomicBlock.unit(self.row, self.col)

    @property
    def key(self) -> _Key:
        return (self.lambda_power, self.row, self.col, *self.bosonic)

    @property
    def atomic_label(self) -> str:
        return _UNIT_LABELS[(self.row, self.col)]


class OperatorExpr:
    """Immutable canonical sum of :class:`OperatorTerm`.

    Terms are sorted by ``(lambda_power, atomic entry, m, n)``; like terms
    are merged and zero coefficients dropped at construction.
    """

    __slots__ = ("_table", "_hash")

    def __init__(self, table: Mapping[_Key, Scalar] | None = None):
        merged: dict[_Key, Scalar] = {}
        for key, c in (table or {}).items():
            c = Scalar.of(c)
            if c:
                merged[key] = c
        self._table = {k: merged[k] for k in sorted(merged)}
        self._hash = None

    @classmethod
    def _accumulate(cls, pairs: Iterable[tuple[_Key, Scalar]]) -> OperatorExpr:
        acc: dict[_Key, Scalar] = {}
        for key, c in pairs:
            acc[key] = acc.get(key, ZERO) + c
        return cls(acc)

    @classmethod
    def term(cls, coeff=1, lambda_power=0, row=G, col=G, m=0, n=0) -> OperatorExpr:
        return cls({(lambda_power, row, col, m, n): Scalar.of(coeff)})

    @classmethod
    def from_atomic(cls, block: AtomicBlock, m: int = 0, n: int = 0, lambda_power: int = 0):
        """Build ``block ⊗ a†^m a^n`` from an arbitrary 2×2 atomic block."""
        return cls({(lambda_power, r, c, m, n): v for r, c, v in block.units()})

    @property
    def table(self) -> dict[_Key, Scalar]:
        return dict(self._table)

    @property
    def terms(self) -> tuple[OperatorTerm, ...]:
        return tuple(
            OperatorTerm(c, k[0], k[1], k[2], BosonicMonomial(k[3], k[4]))
            for k, c in self._table.items()
        )

    def __iter__(self):
        return iter(self.terms)

    def __len__(self):
        return len(self._table)

    @property
    def is_zero(self) -> bool:
        return not self._table

    def __bool__(self):
        return bool(self._table)

    def sort_key(self) -> tuple:
        return tuple((k, c.re, c.im) for k, c in self._table.items())

    def __eq__(self, other):
        if not isinstance(other, OperatorExpr):
            return NotImplemented
        return self._table == other._table

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(tuple(self._table.items()))
        return self._hash

    def __add__(self, other: OperatorExpr) -> OperatorExpr:
        if not isinstance(other, OperatorExpr):
            return NotImplemented
        return OperatorExpr._accumulate([*self._table.items(), *other._table.items()])

    def __neg__(self) -> OperatorExpr:
        return OperatorExpr({k: -c for k, c in self._table.items()})

    def __sub__(self, other: OperatorExpr) -> OperatorExpr:
        if not isinstance(other, OperatorExpr):
            return NotImplemented
        return self + (-other)

    def scale(self, factor) -> OperatorExpr:
        f = Scalar.of(factor)
        return OperatorExpr({k: c * f for k, c in self._table.items()})

    def __mul__(self, other):
        if isinstance(other, OperatorExpr):
            return multiply(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def with_lambda_power(self, shift: int) -> OperatorExpr:
        """Raise every λ grade by ``shift``."""
        return OperatorExpr({(k[0] + shift, *k[1:]): c for k, c in self._table.items()})

    def dagger(self) -> OperatorExpr:
        return OperatorExpr(
            {(lp, c, r, n, m): v.conjugate() for (lp, r, c, m, n), v in self._table.items()}
        )

    @property
    def is_hermitian(self) -> bool:
        return self.dagger() == self

    def lambda_powers(self) -> set[int]:
        return {k[0] for k in self._table}

    def coefficient(self, lambda_power=0, row=G, col=G, m=0, n=0) -> Scalar:
        return self._table.get((lambda_power, row, col, m, n), ZERO)

    def pauli_terms(self) -> list[tuple[int, str, int, int, Scalar]]:
        """Re-express over the atomic basis ``{1, σz, σ+, σ-}``.

        Returns ``(lambda_power, label, m, n, coeff)`` tuples in canonical
        order. Diagonal units combine as ``|g⟩⟨g| = (1 - σz)/2`` and
        ``|e⟩⟨e| = (1 + σz)/2``.
        """
        acc: dict[tuple[int, int, int, int], Scalar] = {}

        def add(lp, idx, m, n, v):
            key = (lp, idx, m, n)
            acc[key] = acc.get(key, ZERO) + v

        half = Fraction(1, 2)
        for (lp, r, c, m, n), v in self._table.items():
            if (r, c) == (G, G):
                add(lp, 0, m, n, v * half)
                add(lp, 1, m, n, -v * half)
            elif (r, c) == (E, E):
                add(lp, 0, m, n, v * half)
                add(lp, 1, m, n, v * half)
            elif (r, c) == (E, G):
                add(lp, 2, m, n, v)
            else:
                add(lp, 3, m, n, v)
        return [
            (lp, PAULI_LABELS[idx], m, n, v)
            for (lp, idx, m, n), v in sorted(acc.items())
            if v
        ]

    @classmethod
    def from_pauli(cls, terms: Iterable[tuple[int, str, int, int, object]]) -> OperatorExpr:
        """Inverse of :meth:`pauli_terms`."""
        pairs = []
        for lp, label, m, n, v in terms:
            v = Scalar.of(v)
            if label == "1":
                pairs += [((lp, G, G, m, n), v), ((lp, E, E, m, n), v)]
            elif label == "σz":
                pairs += [((lp, G, G, m, n), -v), ((lp, E, E, m, n), v)]
            elif label == "σ+":
                pairs.append(((lp, E, G, m, n), v))
            elif label == "σ-":
                pairs.append(((lp, G, E, m, n), v))
            else:
                raise ValueError(f"unknown atomic label {label!r}")
        return cls._accumulate(pairs)

    def __str__(self):
        if not self._table:
            return "0"
        parts = []
        for t in self.terms:
            parts.append(_format_term(t.coeff, t.lambda_power, t.atomic_label, t.bosonic.label))
        return " ".join(parts).lstrip("+ ").strip()

    def pauli_str(self) -> str:
        terms = self.pauli_terms()
        if not terms:
            return "0"
        parts = [_format_term(v, lp, lab, _boson_label(m, n)) for lp, lab, m, n, v in terms]
        return " ".join(parts).lstrip("+ ").strip()

    def __repr__(self):
        return f"OperatorExpr({self})"


def _format_term(coeff: Scalar, lp: int, atomic: str, bosonic: str) -> str:
    if coeff.is_real:
        sign = "-" if coeff.re < 0 else "+"
        mag = abs(coeff.re)
        c = "" if mag == 1 else f"{mag} "
    else:
        sign, c = "+", f"({coeff}) "
    lam = "" if lp == 0 else ("λ " if lp == 1 else f"λ^{lp} ")
    factors = [f for f in (atomic if atomic != "1" else "", bosonic if bosonic != "1" else "") if f]
    body = " ".join(factors) if factors else "1"
    return f"{sign} {c}{lam}{body}".replace("  ", " ")


def multiply(a: OperatorExpr, b: OperatorExpr) -> OperatorExpr:
    """Canonical normal-ordered product ``a · b``."""
    pairs = []
    for (lp1, r1, c1, m1, n1), v1 in a._table.items():
        for (lp2, r2, c2, m2, n2), v2 in b._table.items():
            if c1 != r2:
                continue
            v = v1 * v2
            for m, n, w in _monomial_product(m1, n1, m2, n2):
                pairs.append(((lp1 + lp2, r1, c2, m, n), v * w))
    return OperatorExpr._accumulate(pairs)


def commutator(a: OperatorExpr, b: OperatorExpr) -> OperatorExpr:
    """``[a, b] = a·b - b·a``."""
    return multiply(a, b) - multiply(b, a)


def equals(a: OperatorExpr, b: OperatorExpr) -> bool:
    return a == b


def canonical(expr: OperatorExpr) -> OperatorExpr:
    """Return the canonical form; rebuilding from the term table is idempotent."""
    return OperatorExpr(expr.table)


_CREATE_SYMBOLS = {"a†", "ad", "adag", "a^†", "a+", "create"}
_ANNIHILATE_SYMBOLS = {"a", "annihilate"}


def normal_order(sequence: Iterable[str]) -> dict[BosonicMonomial, int]:
    """Normal-order a word of ladder operators using ``[a, a†] = 1``.

    Parameters
    ----------
    sequence :
        Symbols read left to right, each ``"a"`` or ``"a†"`` (``"ad"`` and
        ``"adag"`` are accepted for ``a†``).

    Returns
    -------
    Mapping from normal-ordered monomial to its integer weight.
    """
    acc: dict[tuple[int, int], int] = {(0, 0): 1}
    for sym in sequence:
        if sym in _CREATE_SYMBOLS:
            m2, n2 = 1, 0
        elif sym in _ANNIHILATE_SYMBOLS:
            m2, n2 = 0, 1
        else:
            raise ValueError(f"unknown ladder symbol {sym!r}")
        nxt: dict[tuple[int, int], int] = {}
        for (m1, n1), w1 in acc.items():
            for m, n, w in _monomial_product(m1, n1, m2, n2):
                nxt[(m, n)] = nxt.get((m, n), 0) + w1 * w
        acc = nxt
    return {BosonicMonomial(m, n): w for (m, n), w in sorted(acc.items()) if w}


def boson_word(sequence: Iterable[str]) -> OperatorExpr:
    """The normal-ordered word as an expression (atomic identity)."""
    pairs = []
    for (m, n), w in normal_order(sequence).items():
        pairs += [((0, G, G, m, n), Scalar(w)), ((0, E, E, m, n), Scalar(w))]
    return OperatorExpr._accumulate(pairs)


# -- named operators -------------------------------------------------------


def identity() -> OperatorExpr:
    return OperatorExpr({(0, G, G, 0, 0): ONE, (0, E, E, 0, 0): ONE})


def sigma_plus() -> OperatorExpr:
    return OperatorExpr.term(1, 0, E, G)


def sigma_minus() -> OperatorExpr:
    return OperatorExpr.term(1, 0, G, E)


def proj_e() -> OperatorExpr:
    return OperatorExpr.term(1, 0, E, E)


def proj_g() -> OperatorExpr:
    return OperatorExpr.term(1, 0, G, G)


def sigma_z() -> OperatorExpr:
    return proj_e() - proj_g()


def sigma_x() -> OperatorExpr:
    return sigma_plus() + sigma_minus()


def annihilate(power: int = 1) -> OperatorExpr:
    return OperatorExpr({(0, G, G, 0, power): ONE, (0, E, E, 0, power): ONE})


def create(power: int = 1) -> OperatorExpr:
    return OperatorExpr({(0, G, G, power, 0): ONE, (0, E, E, power, 0): ONE})


def number() -> OperatorExpr:
    return OperatorExpr({(0, G, G, 1, 1): ONE, (0, E, E, 1, 1): ONE})


# -- state space -----------------------------------------------------------


class BareState(NamedTuple):
    """Bare product state ``|atom, photons⟩`` with ``atom`` in ``{"g", "e"}``."""

    atom: str
    photons: int

    def __str__(self):
        return f"|{self.atom},{self.photons}⟩"


_STATE_RE = re.compile(r"^\s*\|?\s*([ge])\s*,\s*(\d+)\s*(?:>|⟩)?\s*$")


def parse_state(label) -> BareState:
    """Parse ``"e,0"``, ``"|g,3>"``, ``"|g,3⟩"`` or an ``(atom, n)`` pair."""
    if isinstance(label, BareState):
        return label
    if isinstance(label, tuple) and len(label) == 2:
        atom, n = label
        if atom in ATOM_LABELS and isinstance(n, int) and n >= 0:
            return BareState(atom, n)
        raise UnknownState(f"malformed state {label!r}")
    if isinstance(label, str):
        match = _STATE_RE.match(label)
        if match:
            return BareState(match.group(1), int(match.group(2)))
    raise UnknownState(f"malformed state {label!r}")


def state_index(state, n_max: int) -> int:
    """Index of a bare state in the ``|g,0⟩, |e,0⟩, |g,1⟩, …`` ordering."""
    s = parse_state(state)
    if s.photons > n_max:
        raise UnknownState(f"{s} lies beyond the truncation n_max={n_max}")
    return 2 * s.photons + ATOM_LABELS.index(s.atom)


# -- matrix realisation ----------------------------------------------------


def _ladder_element(p: int, m: int, n: int) -> tuple[int, float] | None:
    """Return ``(q, ⟨q|a†^m a^n|p⟩)`` or None if the element vanishes."""
    if p < n:
        return None
    s = p - n
    q = s + m
    # sqrt(p!/s! * q!/s!) from an exact integer
    val = math.prod(range(s + 1, p + 1)) * math.prod(range(s + 1, q + 1))
    return q, math.sqrt(val)


def to_matrix(
    expr: OperatorExpr,
    n_max: int,
    lambda_value: float = 1.0,
    *,
    return_truncation: bool = False,
):
    """Matrix of ``expr`` on the truncated space with photon numbers ``0..n_max``.

    The basis is ``|g,0⟩, |e,0⟩, |g,1⟩, …, |e,n_max⟩``. Components that would
    leave the truncated space are dropped; ``return_truncation=True`` also
    returns whether that happened.
    """
    if n_max < 0:
        raise ValueError("n_max must be non-negative")
    dim = 2 * (n_max + 1)
    mat = np.zeros((dim, dim), dtype=complex)
    truncated = False
    for (lp, r, c, m, n), v in expr._table.items():
        coeff = complex(v) * lambda_value**lp
        for p in range(n_max + 1):
            hit = _ladder_element(p, m, n)
            if hit is None:
                continue
            q, amp = hit
            if q > n_max:
                truncated = True
                continue
            mat[2 * q + r, 2 * p + c] += coeff * amp
    if return_truncation:
        return mat, truncated
    return mat


def normal_ordered_coefficients(matrix: np.ndarray, n_interior: int) -> np.ndarray:
    """Invert :func:`to_matrix` on the low-photon corner of a matrix.

    Returns ``C[r, c, m, n]``, the coefficient of ``|r⟩⟨c| ⊗ a†^m a^n``,
    for ``m, n ≤ n_interior``. Uses
    ``⟨p|X|q⟩ = Σ_k C[p-k, q-k] √(p! q!) / k!`` solved for increasing ``p``.
    """
    dim = matrix.shape[0]
    if 2 * (n_interior + 1) > dim:
        raise ValueError("n_interior exceeds the matrix truncation")
    K = n_interior + 1
    coeffs = np.zeros((2, 2, K, K), dtype=complex)
    fact = [math.factorial(k) for k in range(K + 1)]
    for r in range(2):
        for c in range(2):
            block = matrix[r::2, c::2]
            for p in range(K):
                for q in range(K):
                    root = math.sqrt(fact[p] * fact[q])
                    acc = block[p, q]
                    for k in range(1, min(p, q) + 1):
                        acc -= coeffs[r, c, p - k, q - k] * root / fact[k]
                    coeffs[r, c, p, q] = acc / root
    return coeffs
