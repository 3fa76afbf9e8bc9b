import math

import numpy as np
import pytest

from pdnr.errors import InvalidArgumentError, InvalidDimensionError, PositivityError, TruncationError
from pdnr.fock import basis, ket2dm, make_parity, mean_number
from pdnr.master import (Liouvillian, auto_step, evolve_master, lindblad_rhs, number_distribution,
                         number_std, spectral_width)
from pdnr.model import ModelParams, PulseTrain

from oracles import dense_liouvillian, ladder, master_reference, random_density


def _params(**kw):
    base = dict(delta=1.5, chi=0.3, drive_intensity=2.0, drive_phase=0.4, n_bath=0.2, dim=10,
                pulse=PulseTrain(T=0.5, tau=1.7))
    base.update(kw)
    return ModelParams(**base)


def test_rhs_matches_dense_superoperator(rng):
    p = _params()
    a = ladder(p.dim)
    t = 2.3
    from pdnr.model import hamiltonian_at
    sup = dense_liouvillian(hamiltonian_at(t, p), [math.sqrt(1.2) * a, math.sqrt(0.2) * a.conj().T])
    for _ in range(5):
        # a general (non-Hermitian) matrix exercises both halves of the commutator
        x = rng.normal(size=(p.dim, p.dim)) + 1j * rng.normal(size=(p.dim, p.dim))
        ref = (sup @ x.reshape(-1, order="F")).reshape(p.dim, p.dim, order="F")
        assert np.max(np.abs(lindblad_rhs(x, t, p) - ref)) <= 1e-11


def test_rhs_vacuum_fixed_point():
    p = ModelParams(delta=3, chi=0.5, drive_intensity=0.0, dim=8)
    assert np.max(np.abs(lindblad_rhs(ket2dm(basis(8, 0)), 0.0, p))) == 0.0


def test_rhs_trace_and_hermiticity(rng):
    p = _params()
    L = Liouvillian(p)
    for _ in range(100):
        rho = random_density(p.dim, 3, rng)
        d = L.rhs(rho, 1.1)
        assert abs(np.trace(d)) <= 1e-12
        assert np.max(np.abs(d - d.conj().T)) <= 1e-12
        assert np.max(np.abs(L.rhs(rho, 1.1, hermitian=True) - d)) <= 1e-12


def test_rhs_zero_bath_skips_pump_channel(rng):
    p0 = _params(n_bath=0.0)
    rho = random_density(p0.dim, 2, rng)
    a = ladder(p0.dim)
    from pdnr.model import hamiltonian_at
    sup = dense_liouvillian(hamiltonian_at(0.7, p0), [a])
    ref = (sup @ rho.reshape(-1, order="F")).reshape(p0.dim, p0.dim, order="F")
    assert np.max(np.abs(lindblad_rhs(rho, 0.7, p0) - ref)) <= 1e-12


def test_rhs_dimension_mismatch():
    with pytest.raises(InvalidDimensionError):
        lindblad_rhs(np.eye(4), 0.0, _params())


def test_decay_of_single_photon():
    p = ModelParams(delta=0, chi=0, drive_intensity=0, dim=10)
    times = np.linspace(0.05, 5, 100)
    res = evolve_master(ket2dm(basis(10, 1)), times, p, step=1e-3)
    assert np.max(np.abs(res.mean_n - np.exp(-times))) <= 1e-6


def test_thermal_relaxation():
    p = ModelParams(delta=0.5, chi=0, drive_intensity=0, n_bath=0.3, dim=25)
    res = evolve_master(ket2dm(basis(25, 0)), [1.0, 2.0, 4.0], p, step=1e-3, check_truncation=False)
    expected = 0.3 * (1 - np.exp(-np.array([1.0, 2.0, 4.0])))
    assert np.max(np.abs(res.mean_n - expected)) <= 1e-8


def test_against_adaptive_reference():
    p = ModelParams(delta=2.0, chi=0.4, drive_intensity=9.0, drive_phase=0.3, n_bath=0.1, dim=14,
                    pulse=PulseTrain(T=0.4, tau=1.5))
    times = np.linspace(0.25, 6.0, 24)
    res = evolve_master(ket2dm(basis(14, 0)), times, p, check_truncation=False)
    ref_n, ref_states = master_reference(14, 2.0, 0.4, p.omega, 1.0, 0.1, p.envelope,
                                         ket2dm(basis(14, 0)), times)
    assert np.max(np.abs(res.mean_n - ref_n)) <= 1e-8
    assert np.max(np.abs(res.states - ref_states)) <= 1e-8


def test_invariants_along_evolution(rng):
    p = _params(dim=16)
    rho0 = random_density(16, 4, rng)
    times = np.linspace(0.5, 4, 8)
    res = evolve_master(rho0, times, p, check_truncation=False)
    for rho, n in zip(res.states, res.mean_n):
        assert abs(np.trace(rho) - 1) <= 1e-9
        assert np.max(np.abs(rho - rho.conj().T)) <= 1e-10
        assert np.linalg.eigvalsh(rho)[0] >= -1e-8
        assert n == pytest.approx(np.real(np.trace(np.diag(np.arange(16)) @ rho)), abs=1e-12)
    assert np.all(np.diff(res.times) > 0)


def test_parity_blocks_preserved():
    p = ModelParams.from_omega(5, 1, 6, dim=20, pulse=PulseTrain(T=0.5, tau=2.0))
    res = evolve_master(ket2dm(basis(20, 0)), np.linspace(0.5, 6, 12), p, check_truncation=False)
    P = make_parity(20)
    assert max(np.max(np.abs(r @ P - P @ r)) for r in res.states) <= 1e-8


def test_linearity(rng):
    p = _params(dim=12)
    r1, r2 = random_density(12, 2, rng), random_density(12, 3, rng)
    times = [0.8, 1.6]
    kw = dict(step=1e-3, check_truncation=False)
    e1 = evolve_master(r1, times, p, **kw).states
    e2 = evolve_master(r2, times, p, **kw).states
    mix = evolve_master(0.3 * r1 + 0.7 * r2, times, p, **kw).states
    assert np.max(np.abs(mix - (0.3 * e1 + 0.7 * e2))) <= 1e-9


def test_positivity_guard_trips_on_unstable_step():
    p = ModelParams.from_omega(20, 1, 20, dim=30)
    with pytest.raises(PositivityError):
        evolve_master(ket2dm(basis(30, 0)), [0.2], p, step=0.05, check_truncation=False)


def test_truncation_guard():
    p = ModelParams.from_omega(0, 0.05, 3, dim=10)
    with pytest.raises(TruncationError):
        evolve_master(ket2dm(basis(10, 0)), [1.0, 2.0], p, step=1e-3)


def test_grid_validation():
    p = _params()
    rho = ket2dm(basis(p.dim, 0))
    for grid in ([], [1.0, 1.0], [-1.0], [math.inf]):
        with pytest.raises(InvalidArgumentError):
            evolve_master(rho, grid, p)
    with pytest.raises(InvalidArgumentError):
        evolve_master(rho, [1.0], p, step=0)


def test_auto_step_respects_stability_margin():
    p = ModelParams.from_omega(20, 1, 20, dim=40, pulse=PulseTrain(T=0.5, tau=4 * math.pi / 5))
    h = auto_step(p)
    assert h * spectral_width(p) <= 2.0
    assert 2 * h * spectral_width(p) > 2.0
    assert h == 5e-4


def test_number_distribution():
    assert np.array_equal(number_distribution(ket2dm(basis(5, 2))), [0, 0, 1, 0, 0])
    k = 3
    rho = np.diag(np.r_[np.full(k, 1 / k), np.zeros(4)]).astype(complex)
    assert np.allclose(number_distribution(rho)[:k], 1 / k)
    assert number_distribution(rho).sum() == pytest.approx(np.trace(rho).real)
    assert number_std(ket2dm(basis(5, 2))) == pytest.approx(0.0, abs=1e-15)


@pytest.mark.slow
def test_step_halving_fig1b(fig1b_master):
    cfg, res = fig1b_master
    params = cfg.model_params()
    fine = evolve_master(ket2dm(basis(params.dim, 0)), cfg.sample_schedule()[-1:], params,
                         step=res.step_size / 2, store_states=False)
    assert abs(fine.mean_n[-1] - res.mean_n[-1]) <= 1e-6


@pytest.mark.slow
def test_chaotic_run_has_broader_distribution(fig1a_master, fig1b_master):
    widths = []
    for cfg, res in (fig1a_master, fig1b_master):
        window = res.times > res.times[-1] - cfg.period()
        i = np.flatnonzero(window)[np.argmax(res.mean_n[window])]
        widths.append(number_std(res.states[i]))
    assert widths[0] > widths[1]
