"""Time weights of transition diagrams.

The un-averaged weight of one diagram with cumulative detunings
``Δ_0..Δ_n`` is the inverse Laplace transform of
``(-i)^n Π_k 1/(s + iΔ_k)``; with all ``Δ_l`` distinct its partial
fractions give

    v_n(t) = (-1)^N_L Σ_l e^{-iΔ_l t} Π_{k≠l} 1/(Δ_l - Δ_k).

Residues are computed as exact rationals and only the final exponential sum
is evaluated in floating point. Averaged totals (``V1_*``, ``V2_*``) average
over which constituent transition is the perturbed one and sum over the
placement orders for each such choice; that rule is only fixed up to second
order, so nothing here averages beyond n = 2.
"""

from __future__ import annotations

import itertools
from collections.abc import Sequence
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.linalg
from numpy.polynomial.legendre import leggauss

from .diagrams import RegularizedDetuning, regularize
from .errors import DegenerateDetunings, ZeroDetuning
from .opalg import Scalar

_CANCELLATION_LIMIT = 1e4

__all__ = [
    "WeightResult",
    "cumulative_detunings",
    "v_n_residues",
    "v_n_general",
    "v_n_quadrature_oracle",
    "ordering_diagrams",
    "averaged_residues",
    "averaged_quadrature_oracle",
    "V1_total",
    "V1_coarse",
    "V1_full",
    "V2_total",
    "V2_coarse",
    "V2_full",
    "coarse_grain",
]


@dataclass(frozen=True)
class WeightResult:
    """A weight ``λ^p [coefficient·e^{-iΔt} + Σ transients]``.

    ``phase_detuning`` is the detuning ``Δ`` that survives coarse-graining,
    ``transient_terms`` the remaining ``(detuning, residue)`` pairs; it is
    empty for coarse-grained results.
    """

    phase_detuning: Fraction
    coefficient: Scalar
    lambda_power: int
    transient_terms: tuple[tuple[Fraction, Scalar], ...] = field(default_factory=tuple)

    def evaluate(self, t, lam: float = 1.0):
        t = np.asarray(t, dtype=float)
        val = complex(self.coefficient) * np.exp(-1j * float(self.phase_detuning) * t)
        for d, c in self.transient_terms:
            val = val + complex(c) * np.exp(-1j * float(d) * t)
        return lam**self.lambda_power * val


def _exact(x) -> Fraction:
    if isinstance(x, RegularizedDetuning):
        return x.delta
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, (float, np.floating)):
        return Fraction(float(x))
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"cannot use {x!r} as a detuning")


def cumulative_detunings(deltas: Sequence) -> list[Fraction]:
    """Running sums ``Δ_i = Σ_{l≤i} δ_l``."""
    return list(itertools.accumulate(_exact(d) for d in deltas))


def v_n_residues(deltas: Sequence, n_left: int = 0) -> list[tuple[Fraction, Fraction]]:
    """Exact ``(Δ_l, C_l)`` pairs of the θ → 0 partial-fraction expansion.

    ``C_l`` includes the ``(-1)^N_L`` placement sign.

    Raises
    ------
    DegenerateDetunings
        If two cumulative detunings coincide.
    """
    regs = regularize(deltas)
    cum = cumulative_detunings(regs)
    if len(set(cum)) != len(cum):
        raise DegenerateDetunings(f"cumulative detunings {[str(c) for c in cum]} are not distinct")
    sign = -1 if n_left % 2 else 1
    out = []
    for l, dl in enumerate(cum):
        c = Fraction(sign)
        for k, dk in enumerate(cum):
            if k != l:
                c /= dl - dk
        out.append((dl, c))
    return out


def _divided_difference_exp(cum: Sequence[Fraction], t: np.ndarray) -> np.ndarray:
    """``f[Δ_0, …, Δ_n]`` for ``f(x) = e^{-ixt}`` via the Opitz matrix.

    The divided difference is the top-right entry of ``f(A)`` with ``A``
    upper bidiagonal (nodes on the diagonal, ones above it). ``expm`` stays
    accurate when nodes nearly coincide, where the partial-fraction sum
    cancels catastrophically.
    """
    n = len(cum) - 1
    a = np.diag(np.array([float(c) for c in cum])) + np.diag(np.ones(n), k=1)
    flat = t.reshape(-1)
    out = np.array([scipy.linalg.expm(-1j * tau * a)[0, n] for tau in flat])
    return out.reshape(t.shape)


def v_n_general(deltas: Sequence, n_left: int, t):
    """Un-averaged weight ``v_n(t)`` of one diagram.

    Parameters
    ----------
    deltas :
        One-photon detunings ``δ_0..δ_n`` in perturbation order (plain
        rationals or :class:`RegularizedDetuning`). Floats are read as
        their shortest round-tripping decimal.
    n_left :
        Number of transitions placed on the left.
    t :
        Time or array of times.

    Raises
    ------
    DegenerateDetunings
        If two cumulative detunings coincide exactly.
    """
    t = np.asarray(t, dtype=float)
    residues = v_n_residues(deltas, n_left)
    # Σ|C_l| bounds the rounding error of the explicit sum
    if sum(abs(float(c)) for _, c in residues) < _CANCELLATION_LIMIT:
        total = np.zeros_like(t, dtype=complex)
        for dl, c in residues:
            total = total + float(c) * np.exp(-1j * float(dl) * t)
    else:
        sign = -1 if n_left % 2 else 1
        total = sign * _divided_difference_exp([d for d, _ in residues], t)
    return total if total.ndim else complex(total)


def _simplex_rule(n: int, order: int, t: float):
    """Nodes ``τ_1 ≤ … ≤ τ_n`` in ``[0, t]`` and weights for a tensor Gauss rule.

    Collapsed coordinates ``τ_n = t·u_n``, ``τ_k = τ_{k+1}·u_k`` map the unit
    cube onto the ordered simplex with Jacobian ``Π_k τ_{k+1}``.
    """
    x, w = leggauss(order)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    grids = np.meshgrid(*([x] * n), indexing="ij")
    wgrids = np.meshgrid(*([w] * n), indexing="ij")
    # grids[k] holds u_{k+1}
    taus = [None] * (n + 2)
    taus[n + 1] = np.full(grids[0].shape, t)
    weight = np.ones(grids[0].shape)
    for k in range(n, 0, -1):
        taus[k] = taus[k + 1] * grids[k - 1]
        weight = weight * wgrids[k - 1] * taus[k + 1]
    taus[0] = np.zeros(grids[0].shape)
    return taus, weight


def v_n_quadrature_oracle(
    deltas: Sequence[float],
    n_left: int,
    t: float,
    *,
    tol: float = 1e-10,
    method: str = "gauss",
) -> complex:
    """Evaluate the nested time-ordered integral for ``v_n(t)`` numerically.

    Computes

        (-i)^n (-1)^N_L ∫_0^t dτ_n … ∫_0^{τ_2} dτ_1
            e^{-iΔ_n(t-τ_n)} e^{-iΔ_{n-1}(τ_n-τ_{n-1})} … e^{-iΔ_0 τ_1}

    without using partial fractions. ``method="gauss"`` uses a tensor
    Gauss-Legendre rule on the ordered simplex and doubles the order until
    two successive estimates agree to ``tol``; ``method="nquad"`` uses
    scipy's adaptive ``nquad`` on real and imaginary parts (slow, n ≤ 2).
    """
    deltas = [float(d.delta) if isinstance(d, RegularizedDetuning) else float(d) for d in deltas]
    n = len(deltas) - 1
    cum = np.cumsum(deltas)
    prefactor = (-1j) ** n * (-1) ** n_left
    t = float(t)
    if n == 0:
        return complex(np.exp(-1j * cum[0] * t))
    if t == 0.0:
        return 0j

    if method == "nquad":
        from scipy.integrate import nquad

        def integrand(*taus):
            # taus = (τ_1, …, τ_n); nquad integrates the first argument innermost
            pts = (0.0, *taus, t)
            phase = sum(cum[k] * (pts[k + 1] - pts[k]) for k in range(n + 1))
            return phase

        def bounds(k):
            if k == n - 1:
                return lambda *outer: (0.0, t)
            return lambda *outer: (0.0, outer[0])

        ranges = [bounds(k) for k in range(n)]
        opts = {"epsabs": tol, "epsrel": 0.0, "limit": 200}
        re = nquad(lambda *x: np.cos(integrand(*x)), ranges, opts=[opts] * n)[0]
        im = nquad(lambda *x: -np.sin(integrand(*x)), ranges, opts=[opts] * n)[0]
        return complex(prefactor * (re + 1j * im))

    if method != "gauss":
        raise ValueError(f"unknown method {method!r}")

    def estimate(order: int) -> complex:
        taus, weight = _simplex_rule(n, order, t)
        phase = np.zeros_like(weight)
        for k in range(n + 1):
            phase += cum[k] * (taus[k + 1] - taus[k])
        return complex(np.sum(weight * np.exp(-1j * phase)))

    max_order = {1: 4096, 2: 512, 3: 160}.get(n, 48)
    order = 16
    prev = estimate(order)
    while True:
        order = min(2 * order, max_order)
        cur = estimate(order)
        if abs(cur - prev) < tol or order == max_order:
            return complex(prefactor * cur)
        prev = cur


# -- ordering averages -----------------------------------------------------


def ordering_diagrams(product_deltas: Sequence) -> list[tuple[tuple, int]]:
    """All perturbation orderings that build one product.

    ``product_deltas`` are ``(δ_i, δ_j, …)`` for a product ``… ξ_j ξ_i``,
    i.e. rightmost factor first. Returns ``(deltas in perturbation order,
    n_left)`` for every start position and every interleaving of left and
    right attachments.
    """
    ds = list(product_deltas)
    n = len(ds) - 1
    out = []
    for start in range(n + 1):
        n_lefts = n - start
        for pattern in itertools.combinations(range(n), n_lefts):
            lo, hi = start, start
            seq = [ds[start]]
            for step in range(n):
                if step in pattern:
                    hi += 1
                    seq.append(ds[hi])
                else:
                    lo -= 1
                    seq.append(ds[lo])
            out.append((tuple(seq), n_lefts))
    return out


def averaged_residues(product_deltas: Sequence) -> dict[Fraction, Fraction]:
    """Exact residues of the ordering-averaged weight of a product (n ≤ 2).

    In ``ξ_k ξ_j ξ_i`` the factors to the left of the perturbed one were
    attached on the LEFT, which is why every ordering starting at position
    ``p`` carries ``n - p`` left placements.
    """
    n = len(product_deltas) - 1
    if n > 2:
        raise NotImplementedError("ordering averages are only defined up to second order")
    acc: dict[Fraction, Fraction] = {}
    for seq, n_left in ordering_diagrams(product_deltas):
        for dl, c in v_n_residues(seq, n_left):
            acc[dl] = acc.get(dl, Fraction(0)) + c
    return {d: c / (n + 1) for d, c in acc.items() if c != 0}


def averaged_quadrature_oracle(product_deltas: Sequence, t: float, **kw) -> complex:
    """Ordering average of :func:`v_n_quadrature_oracle` (no partial fractions)."""
    n = len(product_deltas) - 1
    total = sum(v_n_quadrature_oracle(seq, n_left, t, **kw) for seq, n_left in ordering_diagrams(product_deltas))
    return complex(total / (n + 1))


def _check_nonzero(*deltas):
    for d in deltas:
        if d == 0:
            raise ZeroDetuning("one-photon detunings must be non-zero in the dispersive regime")


def V1_total(delta_i, delta_j, t):
    """Ordering-averaged first-order weight (θ → 0), without coupling factor."""
    di, dj = _exact(delta_i), _exact(delta_j)
    _check_nonzero(di, dj)
    t = np.asarray(t, dtype=float)
    fi, fj = float(di), float(dj)
    val = 0.5 * (
        np.exp(-1j * fi * t) / fj
        - np.exp(-1j * fj * t) / fi
        + np.exp(-1j * (fi + fj) * t) * (1 / fi - 1 / fj)
    )
    return val if val.ndim else complex(val)


def V1_coarse(delta_i, delta_j) -> WeightResult:
    di, dj = _exact(delta_i), _exact(delta_j)
    _check_nonzero(di, dj)
    coeff = (1 / di - 1 / dj) / 2
    return WeightResult(di + dj, Scalar(coeff), 2)


def V1_full(delta_i, delta_j) -> WeightResult:
    """Exact first-order weight with its transient residues."""
    di, dj = _exact(delta_i), _exact(delta_j)
    _check_nonzero(di, dj)
    return _full_from_residues(averaged_residues((di, dj)), di + dj, 2)


def _check_v2(di, dj, dk):
    _check_nonzero(di, dj, dk)
    if di + dj == 0 or dj + dk == 0:
        raise DegenerateDetunings(
            f"partial detuning sum vanishes for (δi, δj, δk) = ({di}, {dj}, {dk})"
        )


def V2_total(delta_i, delta_j, delta_k, t):
    """Ordering-averaged second-order weight (θ → 0), without coupling factor."""
    di, dj, dk = (_exact(x) for x in (delta_i, delta_j, delta_k))
    _check_v2(di, dj, dk)
    i, j, k = float(di), float(dj), float(dk)
    t = np.asarray(t, dtype=float)
    ex = lambda w: np.exp(-1j * w * t)  # noqa: E731
    val = (
        ex(i) / (j * (j + k))
        + ex(k) / (j * (i + j))
        - ex(j) / (i * k)
        + ex(i + j) / k * (1 / i - 1 / j)
        + ex(k + j) / i * (1 / k - 1 / j)
        + ex(i + j + k) * (1 / (k * (j + k)) + 1 / (i * (i + j)) - 1 / (i * k))
    ) / 3
    return val if val.ndim else complex(val)


def V2_coarse(delta_i, delta_j, delta_k) -> WeightResult:
    di, dj, dk = (_exact(x) for x in (delta_i, delta_j, delta_k))
    _check_v2(di, dj, dk)
    coeff = (1 / (di * (di + dj)) + 1 / (dk * (dk + dj)) - 1 / (di * dk)) / 3
    return WeightResult(di + dj + dk, Scalar(coeff), 3)


def V2_full(delta_i, delta_j, delta_k) -> WeightResult:
    di, dj, dk = (_exact(x) for x in (delta_i, delta_j, delta_k))
    _check_v2(di, dj, dk)
    return _full_from_residues(averaged_residues((di, dj, dk)), di + dj + dk, 3)


def _full_from_residues(res: dict[Fraction, Fraction], phase: Fraction, lp: int) -> WeightResult:
    coeff = res.pop(phase, Fraction(0))
    transients = tuple((d, Scalar(c)) for d, c in sorted(res.items()))
    return WeightResult(phase, Scalar(coeff), lp, transients)


def coarse_grain(result: WeightResult, time_scale: float | None = None) -> WeightResult:
    """Drop oscillating contributions.

    By default a residue survives only if its detuning is exactly zero. With
    ``time_scale`` set, any residue with ``|Δ|·time_scale < 1`` survives
    instead; this numeric mode is meant for exploration only.
    """

    def keep(d: Fraction) -> bool:
        if time_scale is None:
            return d == 0
        return abs(float(d)) * time_scale < 1

    kept = [(result.phase_detuning, result.coefficient)] + list(result.transient_terms)
    kept = [(d, c) for d, c in kept if keep(d)]
    if not kept:
        return WeightResult(result.phase_detuning, Scalar(0), result.lambda_power)
    if len(kept) > 1:
        # several slow components: report the leading phase, fold the rest in as transients
        (d0, c0), rest = kept[0], tuple(kept[1:])
        return WeightResult(d0, c0, result.lambda_power, rest)
    (d0, c0), = kept
    return WeightResult(d0, c0, result.lambda_power)
