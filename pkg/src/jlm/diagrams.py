"""Zeroth-order transition operators and their order-n concatenations.

A diagram starts from one zeroth-order transition (the perturbed operator)
and attaches further transitions one at a time, each to the LEFT or RIGHT
of the growing product, as the commutator with the interaction Hamiltonian
does. Each LEFT placement carries a factor -1 from the commutator; that
sign is kept in ``n_left`` and not folded into ``composite``.
"""

from __future__ import annotations

import enum
import itertools
import numbers
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import NotEigenoperator
from .opalg import (
    E,
    G,
    OperatorExpr,
    Scalar,
    annihilate,
    commutator,
    create,
    number,
    sigma_minus,
    sigma_plus,
    sigma_x,
    sigma_z,
)

__all__ = [
    "ModelSpec",
    "JLMTransition",
    "Placement",
    "Diagram",
    "DiagramGroup",
    "RegularizedDetuning",
    "regularize",
    "extract_zeroth_order",
    "detuning_of",
    "enumerate_diagrams",
    "render_diagram",
    "render_group",
    "format_frequency",
]


def _exact(x, name: str) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, numbers.Integral):
        return Fraction(int(x))
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, numbers.Real):
        # shortest decimal that round-trips, not the binary expansion
        return Fraction(repr(float(x)))
    raise TypeError(f"{name} must be rational, got {x!r}")


@dataclass(frozen=True)
class ModelSpec:
    """Rabi (``rwa=False``) or Jaynes-Cummings (``rwa=True``) model.

    Frequencies are exact rationals in a common unit. ``lam`` is the
    coupling; it never enters a resonance test, so it may come from a
    decimal, but it is still stored exactly.
    """

    omega_e: Fraction
    omega_c: Fraction
    lam: Fraction = Fraction(0)
    rwa: bool = False

    def __post_init__(self):
        object.__setattr__(self, "omega_e", _exact(self.omega_e, "omega_e"))
        object.__setattr__(self, "omega_c", _exact(self.omega_c, "omega_c"))
        object.__setattr__(self, "lam", _exact(self.lam, "lam"))
        if self.omega_e <= 0 or self.omega_c <= 0:
            raise ValueError("omega_e and omega_c must be positive")
        if self.lam < 0:
            raise ValueError("lambda must be non-negative")

    @property
    def name(self) -> str:
        return "jc" if self.rwa else "rabi"

    def free_hamiltonian(self) -> OperatorExpr:
        """``(ω_e/2) σ_z + ω_c n̂``."""
        return sigma_z().scale(self.omega_e / 2) + number().scale(self.omega_c)

    def interaction_hamiltonian(self) -> OperatorExpr:
        """Interaction with the coupling kept symbolic as one λ grade."""
        if self.rwa:
            h = sigma_plus() * annihilate() + sigma_minus() * create()
        else:
            h = sigma_x() * (annihilate() + create())
        return h.with_lambda_power(1)

    def with_omega_c(self, omega_c) -> ModelSpec:
        return ModelSpec(self.omega_e, omega_c, self.lam, self.rwa)


@dataclass(frozen=True)
class JLMTransition:
    """Elementary one-photon transition operator and its detuning.

    ``omega_c_mult`` and ``omega_e_mult`` give the detuning symbolically as
    ``omega_c_mult·ω_c + omega_e_mult·ω_e``.
    """

    op: OperatorExpr
    detuning: Fraction
    label: str
    raising: bool
    absorbs: bool

    @property
    def omega_c_mult(self) -> int:
        return 1 if self.absorbs else -1

    @property
    def omega_e_mult(self) -> int:
        return -1 if self.raising else 1

    @property
    def source(self) -> str:
        return "g" if self.raising else "e"

    @property
    def target(self) -> str:
        return "e" if self.raising else "g"

    def dagger(self) -> JLMTransition:
        op = self.op.dagger()
        return JLMTransition(op, -self.detuning, _transition_label(op), not self.raising, not self.absorbs)


class Placement(enum.Enum):
    LEFT = "LEFT"
    RIGHT = "RIGHT"


@dataclass(frozen=True)
class RegularizedDetuning:
    """Detuning ``delta - iθ`` with θ kept as a symbolic index.

    Only the index matters: distinct indices guarantee distinct cumulative
    regularizers, and the θ → 0 limit is taken analytically.
    """

    delta: Fraction
    theta: int

    def __post_init__(self):
        object.__setattr__(self, "delta", _exact(self.delta, "delta"))


def regularize(deltas) -> tuple[RegularizedDetuning, ...]:
    """Attach distinct θ indices to plain detunings."""
    out = []
    for i, d in enumerate(deltas):
        if isinstance(d, RegularizedDetuning):
            out.append(d)
        else:
            out.append(RegularizedDetuning(d, i))
    thetas = [d.theta for d in out]
    if len(set(thetas)) != len(thetas):
        raise ValueError("θ indices must be pairwise distinct")
    return tuple(out)


@dataclass(frozen=True)
class Diagram:
    """One perturbation pathway of order ``n``.

    ``sequence`` lists the transitions in perturbation order (the perturbed
    operator first); ``placements[k]`` tells where ``sequence[k+1]`` was
    attached. ``product`` lists the same transitions in operator-product
    order, left to right.
    """

    order: int
    sequence: tuple[JLMTransition, ...]
    placements: tuple[Placement, ...]
    cumulative_detunings: tuple[Fraction, ...]
    composite: OperatorExpr
    product: tuple[JLMTransition, ...]

    @property
    def n_left(self) -> int:
        return sum(p is Placement.LEFT for p in self.placements)

    @property
    def sign(self) -> int:
        return -1 if self.n_left % 2 else 1

    @property
    def total_detuning(self) -> Fraction:
        return self.cumulative_detunings[-1]

    @property
    def product_detunings(self) -> tuple[Fraction, ...]:
        """One-photon detunings of the product, rightmost (acts first) first.

        For a product ``ξ_k ξ_j ξ_i`` this is ``(δ_i, δ_j, δ_k)``.
        """
        return tuple(t.detuning for t in reversed(self.product))


@dataclass(frozen=True)
class DiagramGroup:
    """All diagrams producing one composite operator."""

    composite: OperatorExpr
    total_detuning: Fraction
    diagrams: tuple[Diagram, ...] = field(default_factory=tuple)

    @property
    def order(self) -> int:
        return self.diagrams[0].order

    def products(self) -> list[tuple[JLMTransition, ...]]:
        """Distinct operator-product sequences within the group."""
        seen: dict[tuple[str, ...], tuple[JLMTransition, ...]] = {}
        for d in self.diagrams:
            seen.setdefault(tuple(t.label for t in d.product), d.product)
        return list(seen.values())


def _transition_label(op: OperatorExpr) -> str:
    (term,) = op.terms
    atom = "σ+" if (term.row, term.col) == (E, G) else "σ-"
    boson = "a†" if term.bosonic.create_power else "a"
    return f"{atom}{boson}"


def detuning_of(op: OperatorExpr, model: ModelSpec) -> Fraction:
    """Eigenvalue ``δ`` of ``[op, H_free] = δ·op``, verified exactly.

    Raises
    ------
    NotEigenoperator
        If the commutator is not an exact real multiple of ``op``.
    """
    if op.is_zero:
        raise NotEigenoperator("the zero operator has no detuning")
    lhs = commutator(op, model.free_hamiltonian())
    if lhs.is_zero:
        return Fraction(0)
    key, c0 = next(iter(op.table.items()))
    ratio = lhs.coefficient(*key) / c0
    if not ratio.is_real or lhs != op.scale(ratio):
        raise NotEigenoperator(f"{op} is not an eigenoperator of the free Liouvillian")
    return ratio.re


def extract_zeroth_order(model: ModelSpec) -> tuple[JLMTransition, ...]:
    """Split the interaction Hamiltonian into its one-photon components.

    The coupling grade is kept on each operator (``lambda_power = 1``).
    """
    out = []
    for term in model.interaction_hamiltonian().terms:
        op = OperatorExpr({term.key: Scalar(1)})
        delta = detuning_of(op, model)
        raising = (term.row, term.col) == (E, G)
        absorbs = term.bosonic.annihilate_power == 1
        out.append(JLMTransition(op, delta, _transition_label(op), raising, absorbs))
    # Fig. 1 ordering: σ+a, σ+a†, σ-a†, σ-a
    order = {"σ+a": 0, "σ+a†": 1, "σ-a†": 2, "σ-a": 3}
    return tuple(sorted(out, key=lambda t: order[t.label]))


def enumerate_diagrams(model: ModelSpec, n: int) -> list[DiagramGroup]:
    """Every non-vanishing order-``n`` diagram, grouped by composite.

    Groups are returned in canonical order of their composite operator;
    diagrams inside a group in lexicographic order of (sequence, placements).
    """
    if n < 0:
        raise ValueError("order must be non-negative")
    transitions = extract_zeroth_order(model)
    index = {t.label: i for i, t in enumerate(transitions)}
    found: dict[OperatorExpr, list[Diagram]] = {}

    def grow(seq, placements, product, op, cum):
        if len(seq) == n + 1:
            d = Diagram(n, tuple(seq), tuple(placements), tuple(cum), op, tuple(product))
            found.setdefault(op, []).append(d)
            return
        for t in transitions:
            for place in (Placement.LEFT, Placement.RIGHT):
                new = t.op * op if place is Placement.LEFT else op * t.op
                if new.is_zero:
                    continue
                prod = [t, *product] if place is Placement.LEFT else [*product, t]
                grow([*seq, t], [*placements, place], prod, new, [*cum, cum[-1] + t.detuning])

    for t in transitions:
        grow([t], [], [t], t.op, [t.detuning])

    def diagram_key(d: Diagram):
        return (
            tuple(index[t.label] for t in d.sequence),
            tuple(p.value for p in d.placements),
        )

    groups = [
        DiagramGroup(op, ds[0].total_detuning, tuple(sorted(ds, key=diagram_key)))
        for op, ds in found.items()
    ]
    groups.sort(key=lambda g: g.composite.sort_key())
    return groups


# -- rendering -------------------------------------------------------------


def format_frequency(c_mult: int, e_mult: int) -> str:
    """Symbolic ``c_mult·ω_c + e_mult·ω_e`` with positive terms first.

    Ties put ``ω_e`` first, matching ``−ω_e−ω_c`` and ``ω_e+ω_c``.
    """
    if c_mult == 0 and e_mult == 0:
        return "0"
    terms = [(e_mult, "ω_e"), (c_mult, "ω_c")]
    terms = [t for t in terms if t[0] != 0]
    terms.sort(key=lambda t: (t[0] < 0, t[1] != "ω_e"))
    out = ""
    for i, (k, sym) in enumerate(terms):
        mag = "" if abs(k) == 1 else str(abs(k))
        if k < 0:
            out += "−"
        elif i > 0:
            out += "+"
        out += f"{mag}{sym}"
    return out


def _step(t: JLMTransition) -> str:
    verb = "absorb" if t.absorbs else "emit"
    delta = format_frequency(t.omega_c_mult, t.omega_e_mult)
    return f"{t.source} →({verb}, δ={delta})→ {t.target}"


def render_diagram(d: Diagram) -> str:
    """Plain-text depiction of one diagram.

    Order 0 renders as a single line such as ``g →(absorb, δ=ω_c−ω_e)→ e``.
    Higher orders list one step per transition with its placement and the
    cumulative detuning reached, symbolically and in model units.
    """
    if d.order == 0:
        return _step(d.sequence[0])
    product = " · ".join(t.label for t in d.product)
    lines = [f"order {d.order}: {product} = {d.composite}   [N_L={d.n_left}]"]
    c_tot = e_tot = 0
    for k, t in enumerate(d.sequence):
        c_tot += t.omega_c_mult
        e_tot += t.omega_e_mult
        place = "start" if k == 0 else d.placements[k - 1].value
        cum = format_frequency(c_tot, e_tot)
        value = "" if cum == "0" else f" = {d.cumulative_detunings[k]}"
        lines.append(f"  {k}  {place:<5}  {_step(t)}   Δ{k} = {cum}{value}")
    return "\n".join(lines)


def render_group(group: DiagramGroup) -> str:
    header = f"composite {group.composite}   Δ = {group.total_detuning}   ({len(group.diagrams)} diagrams)"
    body = "\n".join(render_diagram(d) for d in group.diagrams)
    return f"{header}\n{body}"
