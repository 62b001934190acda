"""Acceptance gate.

Each test carries a ``criterion`` marker; the conftest prints one PASS/FAIL
line per criterion after the run. Tolerances are the ones the criteria
state and are not loosened here.
"""

import json
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from jlm.cli import main
from jlm.diagrams import ModelSpec, enumerate_diagrams, extract_zeroth_order
from jlm.effective import build_corrections, project_subspace
from jlm.errors import DegenerateDetunings
from jlm.numerics import (
    FockConfig,
    averaged_heisenberg_overlap,
    build_full_hamiltonian,
    dispersive_limit_projector,
    operator_space_matrix,
    projector_POmega,
    resonant_limit_projector,
    verify_three_photon,
)
from jlm.opalg import number, proj_g, sigma_plus, sigma_z, annihilate, commutator, to_matrix
from jlm.serialize import correction_from_dict
from jlm.weights import (
    V1_coarse,
    V1_total,
    V2_total,
    averaged_quadrature_oracle,
    cumulative_detunings,
    v_n_general,
    v_n_quadrature_oracle,
)

import oracles as O

F = Fraction
RABI = ModelSpec(O.OMEGA_E, O.OMEGA_C, F(3, 100))


def _expand(tmp_path, capsys, order: int):
    cfg = tmp_path / "rabi.cfg"
    cfg.write_text("model = rabi\nomega_e = 1\nomega_c = 1/3\nlambda = 0.03\n", encoding="utf-8")
    start = time.perf_counter()
    code = main(["expand", "--config", str(cfg), "--order", str(order), "--format", "json"])
    elapsed = time.perf_counter() - start
    out = capsys.readouterr().out
    assert code == 0
    return json.loads(out), elapsed


# -- 1 ---------------------------------------------------------------------


@pytest.mark.criterion(1)
def test_first_order_expansion(tmp_path, capsys):
    data, elapsed = _expand(tmp_path, capsys, 1)
    order, resonant, _ = correction_from_dict(data)
    coefficient = O.STARK + O.BLOCH_SIEGERT
    assert coefficient == F(9, 4)
    expected = (sigma_z() * number() + sigma_z().scale(F(1, 2))).scale(coefficient).with_lambda_power(2)
    assert order == 1
    assert resonant == expected
    coeffs = {(t["atomic_label"], t["bosonic_label"]): t["coeff"] for t in data["resonant_terms"]}
    assert coeffs == {("σz", "a†a"): "9/4", ("σz", "1"): "9/8"}
    assert elapsed < 1.0


# -- 2 ---------------------------------------------------------------------


@pytest.mark.criterion(2)
def test_second_order_three_photon(tmp_path, capsys):
    data, elapsed = _expand(tmp_path, capsys, 2)
    _, resonant, _ = correction_from_dict(data)
    up = (sigma_plus() * annihilate(3)).scale(O.THREE_PHOTON)
    assert resonant == (up + up.dagger()).with_lambda_power(3)
    records = {(t["atomic_label"], t["bosonic_label"]): t for t in data["resonant_terms"]}
    rec = records[("σ+", "a^3")]
    assert (rec["coeff_num"], rec["coeff_den"], rec["lambda_power"], rec["omega_power"]) == (-9, 4, 3, -2)
    assert records[("σ-", "a†^3")]["coeff"] == "-9/4"
    assert elapsed < 1.0


# -- 3 ---------------------------------------------------------------------


@pytest.mark.criterion(3)
def test_subspace_projection():
    sm = project_subspace(build_corrections(RABI), RABI, ["e,0", "g,3"], include_free=False)
    assert sm[0, 0].coefficient(2) == F(3, 2) / O.OMEGA_E
    assert sm[1, 1].coefficient(2) == -(F(9, 2) / O.OMEGA_E + 1 / O.OMEGA_C)
    off = sm[0, 1]
    assert off.sqrt_factor == 6
    assert off.coefficient(3) == F(-9, 4) / O.OMEGA_E**2
    assert sm[1, 0] == off.conjugate()


# -- 4 ---------------------------------------------------------------------


@pytest.mark.criterion(4)
def test_three_photon_dynamics():
    start = time.perf_counter()
    report = verify_three_photon(RABI, FockConfig(15))
    elapsed = time.perf_counter() - start
    lam = 0.03
    assert report.predicted == pytest.approx(2 * 9 * math.sqrt(6) * lam**3 / 4, rel=1e-12)
    assert report.relative_error < 0.05
    assert report.contrast > 0.9
    assert elapsed < 10.0


# -- 5 ---------------------------------------------------------------------


def _separated(values, window) -> bool:
    return all(abs(a - b) >= window for i, a in enumerate(values) for b in values[i + 1 :])


@pytest.mark.criterion(5)
def test_weight_oracle_equivalence():
    rng = np.random.default_rng(20240501)
    start = time.perf_counter()
    worst = 0.0
    done = 0
    while done < 200:
        n = int(rng.integers(1, 4))
        deltas = rng.uniform(-5, 5, n + 1)
        cum = cumulative_detunings(list(deltas))
        if not _separated(list(cum), 1e-3) or min(abs(deltas)) < 1e-3:
            continue
        n_left = int(rng.integers(0, n + 1))
        t = float(rng.uniform(0, 10))
        err = abs(v_n_general(deltas, n_left, t) - v_n_quadrature_oracle(deltas, n_left, t))
        worst = max(worst, err)
        done += 1
    assert worst < 1e-8
    assert time.perf_counter() - start < 60.0


# -- 6 ---------------------------------------------------------------------


@pytest.mark.criterion(6)
def test_averaged_weights_first_order():
    rng = np.random.default_rng(11)
    for _ in range(50):
        di, dj = rng.uniform(-5, 5, 2)
        t = float(rng.uniform(0, 10))
        assert abs(V1_total(di, dj, t) - averaged_quadrature_oracle([di, dj], t)) < 1e-8


@pytest.mark.criterion(6)
def test_averaged_weights_second_order():
    rng = np.random.default_rng(12)
    done = 0
    while done < 50:
        di, dj, dk = rng.uniform(-5, 5, 3)
        t = float(rng.uniform(0, 10))
        try:
            ref_v2 = V2_total(di, dj, dk, t)
        except DegenerateDetunings:
            continue
        assert abs(ref_v2 - averaged_quadrature_oracle([di, dj, dk], t)) < 1e-8
        done += 1


@pytest.mark.criterion(6)
def test_coarse_first_order_weights():
    we, wc = O.OMEGA_E, O.OMEGA_C
    assert V1_coarse(wc - we, we - wc).coefficient == 1 / (wc - we)
    assert V1_coarse(-we - wc, we + wc).coefficient == -1 / (we + wc)
    assert V1_coarse(wc - we, wc - we).coefficient == 0


# -- 7 ---------------------------------------------------------------------


@pytest.mark.criterion(7)
@pytest.mark.parametrize("order", [0, 1, 2])
def test_eigenoperator_invariant(order):
    n_max = 10
    h0 = RABI.free_hamiltonian()
    h0_mat = to_matrix(h0, n_max)
    keep = 2 * (n_max + 1 - (order + 1))
    for group in enumerate_diagrams(RABI, order):
        comp = group.composite
        assert commutator(comp, h0) == comp.scale(group.total_detuning)
        for diagram in group.diagrams:
            assert diagram.cumulative_detunings[-1] == group.total_detuning
        x = to_matrix(comp, n_max, 1.0)
        lhs = (x @ h0_mat - h0_mat @ x)[:keep, :keep]
        rhs = float(group.total_detuning) * x[:keep, :keep]
        assert np.max(np.abs(lhs - rhs)) < 1e-10


# -- 8 ---------------------------------------------------------------------


@pytest.mark.criterion(8)
def test_operator_space_spectra():
    rng = np.random.default_rng(8)
    for _ in range(100):
        d = float(rng.uniform(-5, 5))
        lam = float(rng.uniform(0.01, 5))
        om = math.sqrt(d * d + 4 * lam * lam)
        ev = operator_space_matrix(d, lam, dressed=True).eigenvalues()
        assert np.max(np.abs(ev - np.array([-om, 0, 0, om]))) < 1e-12
        om_b = math.sqrt(d * d + 2 * lam * lam)
        ev_b = operator_space_matrix(d, lam, dressed=False).eigenvalues()
        for target in (-om_b, om_b):
            assert np.min(np.abs(ev_b - target)) < 1e-12
        p = projector_POmega(d, lam)
        assert np.linalg.norm(p @ p - p) < 1e-10


@pytest.mark.criterion(8)
@pytest.mark.parametrize("ratio", [1e-1, 3e-2, 1e-2, 1e-3])
def test_projector_limits(ratio):
    # resonant regime: small parameter |Δ|/λ
    p = projector_POmega(ratio, 1.0)
    assert np.max(np.abs(p - resonant_limit_projector())) < 2 * ratio
    # dispersive regime: small parameter λ/|Δ|
    p = projector_POmega(1.0, ratio)
    assert np.max(np.abs(p - dispersive_limit_projector())) < 2 * ratio


# -- 9 ---------------------------------------------------------------------

DISPERSIVE = ModelSpec(1, F(1, 2), F(1, 100), rwa=True)  # Δ/λ = -50


def _exact_stark_shift(model: ModelSpec, n: int) -> float:
    cfg = FockConfig(n + 6)
    levels = np.linalg.eigvalsh(build_full_hamiltonian(model, cfg))
    bare = float(model.omega_e) / 2 + n * float(model.omega_c)
    approx = bare + float(model.lam) ** 2 * (n + 1) / float(model.omega_e - model.omega_c)
    level = levels[np.argmin(np.abs(levels - approx))]
    # the truncated diagonalisation must agree with the closed-form JC level
    assert level == pytest.approx(O.jc_exact_level(model.omega_e, model.omega_c, model.lam, n), abs=1e-13)
    return float(level - bare)


@pytest.mark.criterion(9)
@pytest.mark.parametrize("n", [0, 1, 2, 3])
def test_dispersive_jc_shift(n):
    model = DISPERSIVE
    lam = float(model.lam)
    delta = float(model.omega_c - model.omega_e)
    assert abs(delta / lam) == pytest.approx(50)
    predicted = lam**2 * (n + 1) / float(model.omega_e - model.omega_c)
    exact = _exact_stark_shift(model, n)
    assert abs(exact - predicted) / abs(predicted) < 3 * (lam / delta) ** 2


@pytest.mark.parametrize("n", [0, 1, 2, 3])
def test_dispersive_jc_shift_fourth_order_bound(n):
    model = DISPERSIVE
    lam = float(model.lam)
    delta = float(model.omega_c - model.omega_e)
    predicted = lam**2 * (n + 1) / float(model.omega_e - model.omega_c)
    exact = _exact_stark_shift(model, n)
    assert abs(exact - predicted) <= (n + 1) ** 2 * lam**4 / abs(delta) ** 3


# -- 10 --------------------------------------------------------------------


@pytest.mark.criterion(10)
def test_heisenberg_overlap():
    model = ModelSpec(1, F(1, 3), F(1, 100))
    cfg = FockConfig(10)
    lam = float(model.lam)
    ts = {t.label: t for t in extract_zeroth_order(model)}
    sources = [ts["σ+a"], ts["σ-a†"]]
    di, dj = sources[0].detuning, sources[1].detuning
    target = proj_g() * number()
    times = np.linspace(0, 20 / abs(float(di)), 41)
    got = np.array([averaged_heisenberg_overlap(model, cfg, target, sources, t) for t in times])
    ref = lam * np.array([V1_total(di, dj, t) for t in times])
    assert np.max(np.abs(got - ref)) / np.max(np.abs(ref)) < 1e-2
