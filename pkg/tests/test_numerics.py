from fractions import Fraction

import numpy as np
import pytest
import scipy.linalg

from jlm.diagrams import ModelSpec, extract_zeroth_order
from jlm.errors import LeakageExceeded, NoPeak
from jlm.numerics import (
    FockConfig,
    averaged_heisenberg_overlap,
    build_full_hamiltonian,
    dispersive_limit_projector,
    evolve,
    extract_frequency,
    heisenberg_overlap,
    intrinsic_rabi_frequency,
    operator_space_matrix,
    projector_POmega,
    resonant_limit_projector,
    verify_three_photon,
)
from jlm.opalg import (
    OperatorExpr,
    annihilate,
    commutator,
    create,
    number,
    proj_g,
    sigma_minus,
    sigma_plus,
    sigma_z,
    to_matrix,
)

import oracles as O

F = Fraction


def test_fock_config_validation():
    assert FockConfig().n_max == 15
    for bad in (0, -1, 2.5):
        with pytest.raises(ValueError):
            FockConfig(bad)
    with pytest.raises(ValueError):
        FockConfig(3, 0)


@pytest.mark.parametrize("rwa", [False, True])
def test_hamiltonian_matches_independent_construction(rwa):
    model = ModelSpec(1, F(1, 3), F(1, 10), rwa=rwa)
    h = build_full_hamiltonian(model, FockConfig(6))
    assert np.allclose(h, O.rabi_hamiltonian(1, F(1, 3), 0.1, 6, rwa=rwa))
    assert np.array_equal(h, h.conj().T)


def test_hamiltonian_matches_symbolic_realisation():
    model = ModelSpec(1, F(1, 3), F(1, 10))
    h = build_full_hamiltonian(model, FockConfig(6))
    sym = to_matrix(model.free_hamiltonian() + model.interaction_hamiltonian(), 6, 0.1)
    assert np.allclose(h, sym)


def test_free_hamiltonian_diagonal():
    h = build_full_hamiltonian(ModelSpec(1, F(1, 3)), FockConfig(4))
    expected = [n / 3 + s / 2 for n in range(5) for s in (-1, 1)]
    assert np.allclose(h, np.diag(expected))


def test_vacuum_rabi_splitting():
    model = ModelSpec(1, 1, F(1, 20), rwa=True)
    h = build_full_hamiltonian(model, FockConfig(1))
    block = h[np.ix_([1, 2], [1, 2])]
    ev = np.linalg.eigvalsh(block)
    assert ev[1] - ev[0] == pytest.approx(2 * 0.05)


def test_static_populations_without_coupling():
    h = build_full_hamiltonian(ModelSpec(1, F(1, 3)), FockConfig(4))
    traj = evolve(h, "e,1", np.linspace(0, 50, 11))
    assert np.allclose(traj.populations["|e,1⟩"], 1.0)


def test_jc_vacuum_rabi_oscillation():
    lam = 0.05
    model = ModelSpec(1, 1, F(1, 20), rwa=True)
    cfg = FockConfig(4)
    t = np.linspace(0, 100, 201)
    traj = evolve(build_full_hamiltonian(model, cfg), "e,0", t, observe=["g,1", "e,0"], cfg=cfg)
    assert np.allclose(traj.populations["|g,1⟩"], np.sin(lam * t) ** 2, atol=1e-12)


def test_unitarity_and_energy_conservation():
    model = ModelSpec(1, F(1, 3), F(1, 10))
    cfg = FockConfig(12, leakage_tolerance=1e-3)
    h = build_full_hamiltonian(model, cfg)
    u = scipy.linalg.expm(-1j * h * 3.3)
    assert np.linalg.norm(u.conj().T @ u - np.eye(h.shape[0])) < 1e-12
    psi0 = np.zeros(h.shape[0], complex)
    psi0[1] = 1
    traj = evolve(h, psi0, np.linspace(0, 40, 17), cfg=cfg, keep_states=True)
    energies = np.einsum("ti,ij,tj->t", traj.states.conj(), h, traj.states).real
    assert np.ptp(energies) < 1e-10 * abs(energies[0])


def test_leakage_guard():
    model = ModelSpec(1, F(1, 3), F(1, 5))
    cfg = FockConfig(3)
    with pytest.raises(LeakageExceeded):
        evolve(build_full_hamiltonian(model, cfg), "g,2", np.linspace(0, 100, 50), cfg=cfg)


# -- frequency extraction --------------------------------------------------


def test_extract_frequency_synthetic():
    lam = 0.05
    t = np.linspace(0, 20 * np.pi / lam, 2048)
    w = extract_frequency(np.sin(lam * t) ** 2, t[1] - t[0])
    assert w == pytest.approx(2 * lam, rel=5e-3)


@pytest.mark.parametrize("omega", [0.3, 1.7, 4.2])
def test_extract_frequency_with_offset_and_phase(omega):
    t = np.linspace(0, 40 * np.pi / omega, 4000)
    sig = 3.0 + 0.2 * np.cos(omega * t + 0.4)
    assert extract_frequency(sig, t[1] - t[0]) == pytest.approx(omega, rel=1e-3)


def test_extract_frequency_flat():
    with pytest.raises(NoPeak):
        extract_frequency(np.full(256, 0.7), 0.1)
    with pytest.raises(NoPeak):
        extract_frequency([1.0, 2.0], 0.1)


# -- operator space --------------------------------------------------------


def _rederive(dressed: bool, delta, lam) -> np.ndarray:
    """Generator rows read off from -i[X, H_JC] computed symbolically.

    Each row keeps the coefficients of the leading operator of every basis
    element and drops the rest (identity and higher joint terms), as the
    four-operator truncation does.
    """
    model = ModelSpec(3, 3 + F(delta), F(lam), rwa=True)
    h = model.free_hamiltonian() + model.interaction_hamiltonian()
    # (Pauli label, m, n) of the leading term of each basis element
    if dressed:
        basis = [number(), sigma_z().scale(F(1, 2)) + sigma_z() * number(), sigma_plus() * annihilate(), sigma_minus() * create()]
        leads = [("1", 1, 1), ("σz", 1, 1), ("σ+", 0, 1), ("σ-", 1, 0)]
    else:
        basis = [sigma_z(), number(), sigma_plus() * annihilate(), sigma_minus() * create()]
        leads = [("σz", 0, 0), ("1", 1, 1), ("σ+", 0, 1), ("σ-", 1, 0)]
    rows = []
    for x in basis:
        # Ẋ = i[H, X] = -i[X, H]; with Ẋ = -i M X the rows of M are read from [X, H]
        coeffs = {}
        for lp, label, m, n, v in commutator(x, h).pauli_terms():
            coeffs[(label, m, n)] = coeffs.get((label, m, n), 0) + complex(v) * float(lam) ** lp
        rows.append([coeffs.get(lead, 0) for lead in leads])
    return np.array(rows)


@pytest.mark.parametrize("dressed", [True, False])
@pytest.mark.parametrize("delta, lam", [(F(1, 3), F(1, 7)), (F(-2), F(1, 2)), (F(0), F(1))])
def test_operator_space_matrix_rederived(dressed, delta, lam):
    hard = operator_space_matrix(float(delta), float(lam), dressed=dressed).entries
    assert np.allclose(hard, _rederive(dressed, delta, lam))


def test_operator_space_spectra():
    rng = np.random.default_rng(7)
    for _ in range(50):
        d, l = rng.uniform(-3, 3), rng.uniform(0.01, 3)
        om = np.sqrt(d * d + 4 * l * l)
        ev = np.sort_complex(operator_space_matrix(d, l, dressed=True).eigenvalues())
        assert np.allclose(ev, [-om, 0, 0, om], atol=1e-9)
        bare = np.sort_complex(operator_space_matrix(d, l, dressed=False).eigenvalues())
        om_b = np.sqrt(d * d + 2 * l * l)
        assert np.allclose(bare, [-om_b, 0, 0, om_b], atol=1e-9)


def test_intrinsic_frequencies():
    assert intrinsic_rabi_frequency(0, 1) == 2
    assert intrinsic_rabi_frequency(0, 1, dressed=False) == pytest.approx(np.sqrt(2))
    assert intrinsic_rabi_frequency(3, 2) == pytest.approx(5)


def test_projector_closed_form():
    d, l = 0.7, 0.4
    om2 = d * d + 4 * l * l
    ref = np.array(
        [
            [0, -2 * l * l, -d * l, -d * l],
            [0, 4 * l * l, 2 * d * l, 2 * d * l],
            [0, d * l, d * d + 2 * l * l, -2 * l * l],
            [0, d * l, -2 * l * l, d * d + 2 * l * l],
        ]
    ) / om2
    assert np.allclose(projector_POmega(d, l), ref)
    with pytest.raises(ValueError):
        projector_POmega(0, 0)


def test_generator_cubic_identity():
    m = operator_space_matrix(0.9, 0.35).entries
    om2 = 0.9**2 + 4 * 0.35**2
    assert np.allclose(m @ m @ m, om2 * m)


def test_projector_limits():
    assert np.allclose(projector_POmega(1e-6, 1.0), resonant_limit_projector(), atol=1e-5)
    assert np.allclose(projector_POmega(1.0, 1e-6), dispersive_limit_projector(), atol=1e-5)


# -- Heisenberg picture ----------------------------------------------------


def test_heisenberg_overlap_at_time_zero():
    model = ModelSpec(1, F(1, 3), F(1, 100))
    cfg = FockConfig(8)
    src = extract_zeroth_order(model)[0]
    assert heisenberg_overlap(model, cfg, sigma_plus() * annihilate(), src, 0.0) == pytest.approx(1)
    assert heisenberg_overlap(model, cfg, proj_g() * number(), src, 0.0) == pytest.approx(0)


def test_heisenberg_zeroth_order_phase():
    model = ModelSpec(1, F(1, 3), F(0))
    cfg = FockConfig(8)
    src = extract_zeroth_order(model)[0]
    t = 2.1
    got = heisenberg_overlap(model, cfg, sigma_plus() * annihilate(), src, t)
    assert got == pytest.approx(np.exp(-1j * float(src.detuning) * t))


def test_heisenberg_single_source_matches_single_diagram():
    lam = 0.01
    model = ModelSpec(1, F(1, 3), F(1, 100))
    cfg = FockConfig(10)
    src = extract_zeroth_order(model)[0]  # σ+a
    d = float(src.detuning)
    for t in (3.0, 11.0, 25.0):
        got = heisenberg_overlap(model, cfg, proj_g() * number(), src, t)
        ref = -lam / d * (np.exp(-1j * d * t) - 1)
        assert abs(got - ref) < 0.02 * abs(lam / d) * 2


def test_heisenberg_target_must_be_single_term():
    model = ModelSpec(1, F(1, 3), F(1, 100))
    src = extract_zeroth_order(model)[0]
    with pytest.raises(ValueError):
        heisenberg_overlap(model, FockConfig(8), sigma_z(), src, 1.0)


def test_averaged_overlap_is_a_mean():
    model = ModelSpec(1, F(1, 3), F(1, 100))
    cfg = FockConfig(8)
    ts = extract_zeroth_order(model)
    tgt = proj_g() * number()
    a = heisenberg_overlap(model, cfg, tgt, ts[0], 2.0)
    b = heisenberg_overlap(model, cfg, tgt, ts[2], 2.0)
    assert averaged_heisenberg_overlap(model, cfg, tgt, [ts[0], ts[2]], 2.0) == pytest.approx((a + b) / 2)
    assert isinstance(tgt, OperatorExpr)


# -- verification driver ---------------------------------------------------


def test_verify_three_photon_small_coupling():
    report = verify_three_photon(ModelSpec(1, F(1, 3), F(1, 50)), FockConfig(12))
    assert report.passed
    assert report.relative_error < 0.05


def test_verify_zero_coupling_has_no_peak():
    with pytest.raises(NoPeak):
        verify_three_photon(ModelSpec(1, F(1, 3), F(0)), FockConfig(12))


def test_verify_low_truncation_leaks():
    with pytest.raises(LeakageExceeded):
        verify_three_photon(ModelSpec(1, F(1, 3), F(1, 5)), FockConfig(3))
