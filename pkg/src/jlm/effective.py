"""Effective Hamiltonian corrections and their projection onto bare states.

The order-``n`` correction sums, over every distinct operator product of
``n + 1`` elementary transitions, the product times the coarse-grained
ordering-averaged weight. Only products with vanishing total detuning
survive coarse-graining; the rest are kept in an audit list together with
their (would-be) coefficient. Multiples of the identity are removed from
the resonant part and recorded separately, because they shift every level
equally.
"""

from __future__ import annotations

import math
import warnings
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .diagrams import DiagramGroup, JLMTransition, ModelSpec, enumerate_diagrams, extract_zeroth_order
from .errors import DegenerateDetunings, NoSolution
from .opalg import ATOM_LABELS, BareState, OperatorExpr, Scalar, parse_state
from .weights import averaged_residues

__all__ = [
    "DiscardedTerm",
    "EffectiveCorrection",
    "SubspaceEntry",
    "SubspaceMatrix",
    "build_correction",
    "build_corrections",
    "project_subspace",
    "subspace_shifts",
    "resonance_condition",
    "effective_coupling",
    "product_operator",
]

MAX_ORDER = 2


@dataclass(frozen=True)
class DiscardedTerm:
    """An off-resonant composite removed by coarse-graining.

    ``weight`` is the coefficient the composite would carry in a rotating
    frame at its own detuning, or None when the averaged weight has a pole.
    """

    operator: OperatorExpr
    phase_detuning: Fraction
    weight: Scalar | None
    products: tuple[str, ...] = ()


@dataclass(frozen=True)
class EffectiveCorrection:
    order: int
    resonant_terms: OperatorExpr
    discarded_terms: tuple[DiscardedTerm, ...] = ()
    identity_dropped: OperatorExpr = field(default_factory=OperatorExpr)
    warnings: tuple[str, ...] = ()

    @property
    def full_terms(self) -> OperatorExpr:
        """Resonant terms with the dropped identity constant restored."""
        return self.resonant_terms + self.identity_dropped


def product_operator(product: Sequence[JLMTransition]) -> OperatorExpr:
    out = product[0].op
    for t in product[1:]:
        out = out * t.op
    return out


def _product_label(product: Sequence[JLMTransition]) -> str:
    return " · ".join(t.label for t in product)


def _group_weights(group: DiagramGroup, phase: Fraction | None):
    """Yield ``(product, coefficient at phase)`` for each product of a group."""
    for product in group.products():
        deltas = tuple(t.detuning for t in reversed(product))
        try:
            residues = averaged_residues(deltas)
        except DegenerateDetunings as exc:
            raise DegenerateDetunings(
                f"diagram {_product_label(product)} (δ = {', '.join(map(str, deltas))}): {exc}"
            ) from exc
        target = group.total_detuning if phase is None else phase
        yield product, residues.get(target, Fraction(0))


def _split_identity(expr: OperatorExpr) -> tuple[OperatorExpr, OperatorExpr]:
    ident = [(lp, lab, m, n, v) for lp, lab, m, n, v in expr.pauli_terms() if lab == "1" and m == n == 0]
    ident_expr = OperatorExpr.from_pauli(ident)
    return expr - ident_expr, ident_expr


def _is_resonant(delta: Fraction, coarse_time: float | None) -> bool:
    if coarse_time is None:
        return delta == 0
    return abs(float(delta)) * coarse_time < 1


def build_correction(model: ModelSpec, n: int, *, coarse_time: float | None = None) -> EffectiveCorrection:
    """Order-``n`` correction ``ΔH⁽ⁿ⁾`` with the coupling kept as ``λ^(n+1)``.

    Parameters
    ----------
    model :
        Model whose free Hamiltonian fixes the detunings.
    n :
        Order, 0 to 2.
    coarse_time :
        Optional coarse-graining time ``T``. By default only exactly
        resonant composites survive; with ``T`` set, any composite with
        ``|Δ|·T < 1`` is kept as well.

    Raises
    ------
    DegenerateDetunings
        If a kept composite's averaged weight has a pole; the message names
        the product.
    """
    if not 0 <= n <= MAX_ORDER:
        raise ValueError(f"averaged weights are available for orders 0..{MAX_ORDER}, got {n}")
    notes = []
    if model.lam > 0:
        for t in extract_zeroth_order(model):
            if t.detuning != 0 and model.lam >= abs(t.detuning):
                msg = f"λ = {model.lam} is not small against |δ| = {abs(t.detuning)} of {t.label}"
                notes.append(msg)
                warnings.warn(msg, RuntimeWarning, stacklevel=2)

    resonant = OperatorExpr()
    discarded = []
    for group in enumerate_diagrams(model, n):
        delta = group.total_detuning
        labels = tuple(_product_label(p) for p in group.products())
        if _is_resonant(delta, coarse_time):
            for product, coeff in _group_weights(group, None):
                if coeff:
                    resonant = resonant + product_operator(product).scale(coeff)
            continue
        try:
            weight = OperatorExpr()
            for product, coeff in _group_weights(group, None):
                weight = weight + product_operator(product).scale(coeff)
            # every product of a group shares the composite, so the ratio is a scalar
            key, c0 = next(iter(group.composite.table.items()))
            scalar = weight.coefficient(*key) / c0 if weight else Scalar(0)
        except DegenerateDetunings:
            scalar = None
        discarded.append(DiscardedTerm(group.composite, delta, scalar, labels))

    kept, ident = _split_identity(resonant)
    return EffectiveCorrection(n, kept, tuple(discarded), ident, tuple(notes))


def build_corrections(model: ModelSpec, max_order: int = MAX_ORDER, **kw) -> list[EffectiveCorrection]:
    """Corrections of orders 1 through ``max_order``."""
    return [build_correction(model, k, **kw) for k in range(1, max_order + 1)]


# -- subspace projection ---------------------------------------------------


def _squarefree_split(x: int) -> tuple[int, int]:
    """``x = k² · f`` with ``f`` squarefree; returns ``(k, f)``."""
    k, f = 1, 1
    rest = x
    p = 2
    while p * p <= rest:
        e = 0
        while rest % p == 0:
            rest //= p
            e += 1
        k *= p ** (e // 2)
        if e % 2:
            f *= p
        p += 1
    f *= rest
    return k, f


@dataclass(frozen=True)
class SubspaceEntry:
    """Exact matrix entry ``√sqrt_factor · Σ_p coeffs[p] λ^p``."""

    sqrt_factor: int = 1
    coeffs: tuple[tuple[int, Scalar], ...] = ()

    def coefficient(self, lambda_power: int) -> Scalar:
        return dict(self.coeffs).get(lambda_power, Scalar(0))

    @property
    def is_zero(self) -> bool:
        return not any(c for _, c in self.coeffs)

    def value(self, lam: float) -> complex:
        total = sum(complex(c) * lam**p for p, c in self.coeffs)
        return complex(total) * math.sqrt(self.sqrt_factor)

    def conjugate(self) -> SubspaceEntry:
        return SubspaceEntry(self.sqrt_factor, tuple((p, c.conjugate()) for p, c in self.coeffs))

    def __str__(self):
        if self.is_zero:
            return "0"
        parts = []
        for p, c in self.coeffs:
            lam = "" if p == 0 else ("λ" if p == 1 else f"λ^{p}")
            parts.append(f"({c}){lam}" if lam else f"{c}")
        body = " + ".join(parts)
        if self.sqrt_factor == 1:
            return body
        return f"√{self.sqrt_factor}·({body})"


@dataclass(frozen=True)
class SubspaceMatrix:
    basis: tuple[BareState, ...]
    entries: tuple[tuple[SubspaceEntry, ...], ...]

    def __getitem__(self, idx) -> SubspaceEntry:
        i, j = idx
        return self.entries[i][j]

    def to_numpy(self, lam: float) -> np.ndarray:
        k = len(self.basis)
        return np.array([[self.entries[i][j].value(lam) for j in range(k)] for i in range(k)])

    @property
    def is_hermitian(self) -> bool:
        k = len(self.basis)
        return all(self.entries[i][j] == self.entries[j][i].conjugate() for i in range(k) for j in range(k))

    def __str__(self):
        labels = [str(s) for s in self.basis]
        rows = [f"{labels[i]}: " + " | ".join(str(e) for e in row) for i, row in enumerate(self.entries)]
        return "\n".join(rows)


def _element(expr: OperatorExpr, bra: BareState, ket: BareState) -> SubspaceEntry:
    r, p = ATOM_LABELS.index(bra.atom), bra.photons
    c, q = ATOM_LABELS.index(ket.atom), ket.photons
    scale, factor = _squarefree_split(math.factorial(p) * math.factorial(q))
    acc: dict[int, Scalar] = {}
    for (lp, tr, tc, m, n), v in expr.table.items():
        if (tr, tc) != (r, c):
            continue
        s = q - n
        if s < 0 or p - m != s:
            continue
        val = v * Fraction(scale, math.factorial(s))
        acc[lp] = acc.get(lp, Scalar(0)) + val
    coeffs = tuple((lp, v) for lp, v in sorted(acc.items()) if v)
    return SubspaceEntry(factor if coeffs else 1, coeffs)


def project_subspace(
    corrections: Iterable[EffectiveCorrection],
    model: ModelSpec,
    basis: Sequence,
    *,
    include_free: bool = True,
    include_constant: bool = True,
) -> SubspaceMatrix:
    """Exact matrix of ``H_free + Σ ΔH⁽ⁿ⁾`` between bare states.

    Parameters
    ----------
    corrections :
        Corrections to add; orders are simply summed.
    basis :
        Bare-state labels such as ``"e,0"`` or ``"|g,3>"``.
    include_constant :
        Restore the identity terms removed from each correction so diagonal
        entries are the physical level shifts. Off-diagonal entries and
        level differences do not depend on it.

    Raises
    ------
    UnknownState
        For malformed labels.
    """
    states = tuple(parse_state(b) for b in basis)
    total = model.free_hamiltonian() if include_free else OperatorExpr()
    for corr in corrections:
        total = total + (corr.full_terms if include_constant else corr.resonant_terms)
    entries = tuple(tuple(_element(total, bra, ket) for ket in states) for bra in states)
    return SubspaceMatrix(states, entries)


def subspace_shifts(corrections: Iterable[EffectiveCorrection], state) -> Fraction:
    """Coefficient of ``λ²`` in the diagonal shift of ``state`` (identity included)."""
    s = parse_state(state)
    total = OperatorExpr()
    for corr in corrections:
        total = total + corr.full_terms
    entry = _element(total, s, s)
    return entry.coefficient(2).re


def _bare_resonance(model: ModelSpec, a: BareState, b: BareState) -> Fraction:
    if a.photons == b.photons:
        raise NoSolution(f"{a} and {b} hold the same photon number; ω_c cannot tune them")
    half = model.omega_e / 2
    e1 = half if a.atom == "e" else -half
    e2 = half if b.atom == "e" else -half
    bare = (e2 - e1) / (a.photons - b.photons)
    if bare <= 0:
        raise NoSolution(f"{a} and {b} cannot be resonant for a positive cavity frequency")
    return bare


def effective_coupling(model: ModelSpec, pair: Sequence, *, max_order: int = MAX_ORDER) -> SubspaceEntry:
    """Exact effective matrix element between two states at their bare resonance.

    Raises
    ------
    NoSolution
        If the states cannot be brought into resonance or no computed
        correction couples them.
    """
    a, b = (parse_state(s) for s in pair)
    at_bare = model.with_omega_c(_bare_resonance(model, a, b))
    corrs = build_corrections(at_bare, max_order)
    coupling = project_subspace(corrs, at_bare, [a, b], include_free=False)[0, 1]
    if coupling.is_zero:
        raise NoSolution(f"no correction up to order {max_order} couples {a} and {b}")
    return coupling


def resonance_condition(model: ModelSpec, pair: Sequence, *, max_order: int = MAX_ORDER) -> Fraction:
    """Cavity frequency that brings two bare states into shift-corrected resonance.

    Solves ``E₁ + λ²s₁ = E₂ + λ²s₂`` for ``ω_c`` where ``E`` are the bare
    energies and the second-order shifts ``s`` are evaluated at the bare
    resonance, so the result is exact to order ``λ²``.

    Raises
    ------
    NoSolution
        If the states have equal photon number or no computed correction
        couples them.
    """
    a, b = (parse_state(s) for s in pair)
    bare = _bare_resonance(model, a, b)
    effective_coupling(model, pair, max_order=max_order)
    corrs = build_corrections(model.with_omega_c(bare), max_order)
    s1 = subspace_shifts(corrs, a)
    s2 = subspace_shifts(corrs, b)
    return bare + model.lam**2 * (s2 - s1) / (a.photons - b.photons)
