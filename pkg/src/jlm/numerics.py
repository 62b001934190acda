"""Brute-force checks on a truncated Fock space.

Hamiltonians here are built directly with numpy Kronecker products rather
than through :mod:`jlm.opalg`, so they can serve as an independent
reference. The basis is ``|g,0⟩, |e,0⟩, |g,1⟩, |e,1⟩, …`` i.e.
``kron(boson, atom)``.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .diagrams import JLMTransition, ModelSpec
from .errors import LeakageExceeded, NoPeak
from .opalg import OperatorExpr, normal_ordered_coefficients, parse_state, state_index

__all__ = [
    "FockConfig",
    "Trajectory",
    "build_full_hamiltonian",
    "evolve",
    "extract_frequency",
    "OperatorSpaceMatrix",
    "operator_space_matrix",
    "intrinsic_rabi_frequency",
    "projector_POmega",
    "resonant_limit_projector",
    "dispersive_limit_projector",
    "heisenberg_operator",
    "heisenberg_overlap",
    "averaged_heisenberg_overlap",
    "ThreePhotonReport",
    "verify_three_photon",
]


@dataclass(frozen=True)
class FockConfig:
    """Photon-number truncation and the leakage guard.

    Evolution aborts when population in the two highest photon levels
    exceeds ``leakage_tolerance``.
    """

    n_max: int = 15
    leakage_tolerance: float = 1e-8

    def __post_init__(self):
        if not isinstance(self.n_max, (int, np.integer)) or self.n_max < 1:
            raise ValueError("n_max must be an integer ≥ 1")
        if not self.leakage_tolerance > 0:
            raise ValueError("leakage_tolerance must be positive")

    @property
    def dim(self) -> int:
        return 2 * (self.n_max + 1)


def _ladder(n_max: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n_max + 1, dtype=float)), k=1)


def build_full_hamiltonian(model: ModelSpec, cfg: FockConfig, lam: float | None = None) -> np.ndarray:
    """Rabi or Jaynes-Cummings Hamiltonian on the truncated space.

    ``lam`` overrides ``model.lam`` so that coupling sweeps need not rebuild
    the model.
    """
    lam = float(model.lam) if lam is None else float(lam)
    a = _ladder(cfg.n_max)
    eye_b = np.eye(cfg.n_max + 1)
    eye_a = np.eye(2)
    sz = np.diag([-1.0, 1.0])
    sp = np.array([[0.0, 0.0], [1.0, 0.0]])  # |e⟩⟨g| with g first
    sm = sp.T
    h = float(model.omega_e) / 2 * np.kron(eye_b, sz) + float(model.omega_c) * np.kron(a.T @ a, eye_a)
    if model.rwa:
        h = h + lam * (np.kron(a, sp) + np.kron(a.T, sm))
    else:
        h = h + lam * np.kron(a + a.T, sp + sm)
    return h.astype(complex)


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    populations: dict[str, np.ndarray]
    leakage: float
    states: np.ndarray | None = field(default=None, repr=False)

    def contrast(self, label: str) -> float:
        p = self.populations[label]
        return float(p.max() - p.min())


def _n_max_of(h: np.ndarray) -> int:
    dim = h.shape[0]
    if dim % 2 or dim < 4:
        raise ValueError("Hamiltonian dimension must be 2(n_max+1) with n_max ≥ 1")
    return dim // 2 - 1


def _top_mask(n_max: int) -> np.ndarray:
    mask = np.zeros(2 * (n_max + 1), dtype=bool)
    mask[2 * (n_max - 1):] = True
    return mask


def evolve(
    h: np.ndarray,
    psi0,
    times: Sequence[float],
    *,
    observe: Sequence | None = None,
    cfg: FockConfig | None = None,
    keep_states: bool = False,
) -> Trajectory:
    """Propagate ``psi0`` exactly through an eigendecomposition of ``h``.

    Parameters
    ----------
    psi0 :
        A bare-state label (``"e,0"``) or a state vector.
    observe :
        Bare states whose populations are returned; defaults to ``psi0``
        when it is a label.
    cfg :
        Supplies the leakage tolerance. Population in the two highest
        photon levels is monitored over the whole grid.

    Raises
    ------
    LeakageExceeded
        If the monitored population exceeds the tolerance.
    """
    h = np.asarray(h)
    n_max = _n_max_of(h)
    tol = (cfg or FockConfig(n_max=n_max)).leakage_tolerance
    if isinstance(psi0, np.ndarray):
        vec = psi0.astype(complex)
        labels = []
    else:
        vec = np.zeros(h.shape[0], dtype=complex)
        vec[state_index(psi0, n_max)] = 1.0
        labels = [str(parse_state(psi0))]
    if observe is not None:
        labels = [str(parse_state(s)) for s in observe]
    times = np.asarray(times, dtype=float)
    evals, evecs = np.linalg.eigh(h)
    coeffs = evecs.conj().T @ vec
    states = evecs @ (np.exp(-1j * np.outer(evals, times)) * coeffs[:, None])  # dim × T
    probs = np.abs(states) ** 2
    leakage = float(probs[_top_mask(n_max)].sum(axis=0).max())
    if leakage > tol:
        raise LeakageExceeded(
            f"population {leakage:.3g} in the top two Fock levels exceeds {tol:g}; raise n_max"
        )
    pops = {lab: probs[state_index(lab, n_max)] for lab in labels}
    return Trajectory(times, pops, leakage, states.T if keep_states else None)


def extract_frequency(signal: Sequence[float], dt: float, *, pad: int = 8) -> float:
    """Dominant angular frequency of a uniformly sampled real signal.

    The windowed mean is removed, a Hann window applied and the
    zero-padded spectrum's highest non-DC bin refined by a parabola through
    the log magnitudes of its neighbours.

    Raises
    ------
    NoPeak
        For a flat signal or one whose peak sits on the DC bin.
    """
    x = np.asarray(signal, dtype=float)
    if x.size < 8:
        raise NoPeak("signal too short")
    scale = max(1.0, float(np.abs(x).max()))
    if np.ptp(x) <= 1e-12 * scale:
        raise NoPeak("signal is flat")
    w = np.hanning(x.size)
    x = x - np.sum(w * x) / np.sum(w)
    spec = np.abs(np.fft.rfft(x * w, n=pad * x.size))
    k = int(np.argmax(spec[1:])) + 1
    if k < 2 or k >= spec.size - 1 or spec[k] <= 0:
        raise NoPeak("no interior spectral peak")
    a, b, c = np.log(spec[k - 1 : k + 2] + 1e-300)
    denom = a - 2 * b + c
    shift = 0.5 * (a - c) / denom if denom != 0 else 0.0
    freq = (k + shift) / (pad * x.size * dt)
    return float(2 * np.pi * freq)


# -- operator space --------------------------------------------------------


@dataclass(frozen=True)
class OperatorSpaceMatrix:
    """Liouvillian generator ``Ẋ = -i M X`` restricted to four operators."""

    labels: tuple[str, str, str, str]
    entries: np.ndarray
    dressed: bool

    def eigenvalues(self) -> np.ndarray:
        ev = np.linalg.eigvals(self.entries)
        return ev[np.lexsort((ev.imag, ev.real))]


def operator_space_matrix(delta: float, lam: float, dressed: bool = True) -> OperatorSpaceMatrix:
    """Four-operator Jaynes-Cummings generator with ``Δ = ω_c − ω_e``.

    ``dressed=True`` uses ``(n, π, σ+a, σ-a†)`` with ``π = σz/2 + σz n``;
    otherwise ``(σz, n, σ+a, σ-a†)``, where the terms ``σz n`` produced by
    the coupling are dropped.
    """
    d, l = float(delta), float(lam)
    if dressed:
        m = [
            [0, 0, -l, l],
            [0, 0, 2 * l, -2 * l],
            [0, l, d, 0],
            [0, -l, 0, -d],
        ]
        labels = ("n", "π", "σ+a", "σ-a†")
    else:
        m = [
            [0, 0, 2 * l, -2 * l],
            [0, 0, -l, l],
            [l / 2, 0, d, 0],
            [-l / 2, 0, 0, -d],
        ]
        labels = ("σz", "n", "σ+a", "σ-a†")
    return OperatorSpaceMatrix(labels, np.array(m, dtype=complex), dressed)


def intrinsic_rabi_frequency(delta: float, lam: float, dressed: bool = True) -> float:
    """``√(Δ² + 4λ²)`` in the dressed basis, ``√(Δ² + 2λ²)`` otherwise."""
    return float(np.hypot(delta, (2.0 if dressed else np.sqrt(2.0)) * lam))


def projector_POmega(delta: float, lam: float) -> np.ndarray:
    """``M²/Ω²`` for the dressed generator."""
    if delta == 0 and lam == 0:
        raise ValueError("(Δ, λ) = (0, 0) has no oscillating subspace")
    m = operator_space_matrix(delta, lam, dressed=True).entries
    return m @ m / (float(delta) ** 2 + 4 * float(lam) ** 2)


def resonant_limit_projector() -> np.ndarray:
    return np.array(
        [[0, -0.5, 0, 0], [0, 1, 0, 0], [0, 0, 0.5, -0.5], [0, 0, -0.5, 0.5]], dtype=complex
    )


def dispersive_limit_projector() -> np.ndarray:
    return np.diag([0, 0, 1, 1]).astype(complex)


# -- Heisenberg picture ----------------------------------------------------


def heisenberg_operator(model: ModelSpec, cfg: FockConfig, op: OperatorExpr, t: float,
                        n_interior: int | None = None) -> np.ndarray:
    """``e^{iHt} op e^{-iHt}`` on the truncated space.

    Leakage is checked for every bare state with at most ``n_interior``
    photons, since only those columns are read back.
    """
    from .opalg import to_matrix

    h = build_full_hamiltonian(model, cfg)
    u = scipy.linalg.expm(-1j * h * float(t))
    if n_interior is not None:
        cols = u[:, : 2 * (n_interior + 1)]
        leak = float((np.abs(cols[_top_mask(cfg.n_max)]) ** 2).sum(axis=0).max())
        if leak > cfg.leakage_tolerance:
            raise LeakageExceeded(f"interior states leak {leak:.3g} into the top Fock levels")
    x = to_matrix(op, cfg.n_max, float(model.lam))
    return u.conj().T @ x @ u


def heisenberg_overlap(model: ModelSpec, cfg: FockConfig, target: OperatorExpr,
                       source: JLMTransition | OperatorExpr, t: float) -> complex:
    """Coefficient of ``target`` in the normal-ordered expansion of ``source(t)``.

    ``target`` must be a single term; its coupling grade and coefficient are
    ignored. The expansion is recovered exactly from the low-photon corner
    of the propagated matrix.
    """
    src = source.op if isinstance(source, JLMTransition) else source
    src = OperatorExpr({(0, *k[1:]): v for k, v in src.table.items()})
    if len(target) != 1:
        raise ValueError("target must be a single operator term")
    (term,) = target.terms
    m, n = term.bosonic
    n_int = max(m, n, 1) + 1
    if 2 * (n_int + 2) > cfg.dim:
        raise ValueError("n_max too small for the requested target")
    mat = heisenberg_operator(model, cfg, src, t, n_interior=n_int)
    coeffs = normal_ordered_coefficients(mat, n_int)
    return complex(coeffs[term.row, term.col, m, n])


def averaged_heisenberg_overlap(model: ModelSpec, cfg: FockConfig, target: OperatorExpr,
                                sources: Sequence[JLMTransition | OperatorExpr], t: float) -> complex:
    """Mean of :func:`heisenberg_overlap` over several source transitions."""
    return complex(np.mean([heisenberg_overlap(model, cfg, target, s, t) for s in sources]))


# -- three-photon verification ---------------------------------------------


@dataclass(frozen=True)
class ThreePhotonReport:
    omega_c: float
    predicted: float
    measured: float | None
    relative_error: float | None
    contrast: float
    leakage: float
    tolerance: float = 0.05
    trajectory: Trajectory | None = field(default=None, repr=False, compare=False)

    @property
    def passed(self) -> bool:
        return (
            self.relative_error is not None
            and self.relative_error < self.tolerance
            and self.contrast > 0.9
        )


def verify_three_photon(
    model: ModelSpec,
    cfg: FockConfig,
    *,
    periods: float = 20,
    samples_per_period: int = 64,
    tolerance: float = 0.05,
) -> ThreePhotonReport:
    """Compare the effective ``|e,0⟩ ↔ |g,3⟩`` coupling with exact dynamics.

    The cavity frequency is moved to the shift-corrected resonance, the
    state ``|e,0⟩`` propagated, and the oscillation frequency of the
    ``|g,3⟩`` population compared with twice the effective coupling.

    Raises
    ------
    NoPeak
        If no oscillation is visible (e.g. at zero coupling).
    LeakageExceeded
        If the truncation is too small.
    """
    from .effective import effective_coupling, resonance_condition

    pair = ("e,0", "g,3")
    omega_c = resonance_condition(model, pair)
    tuned = model.with_omega_c(omega_c)
    coupling = effective_coupling(model, pair).value(float(model.lam))
    predicted = 2 * abs(coupling)
    h = build_full_hamiltonian(tuned, cfg)
    if predicted > 0:
        t_end = periods * 2 * np.pi / predicted
        n_pts = int(periods * samples_per_period)
    else:
        t_end, n_pts = 1e4, 2048
    times = np.linspace(0.0, t_end, n_pts)
    traj = evolve(h, "e,0", times, observe=pair, cfg=cfg)
    p = traj.populations["|g,3⟩"]
    contrast = float(p.max() - p.min())
    measured = extract_frequency(p, times[1] - times[0])
    rel = abs(measured - predicted) / predicted if predicted > 0 else None
    return ThreePhotonReport(
        float(omega_c), predicted, measured, rel, contrast, traj.leakage, tolerance, traj
    )
