import numpy as np
import pytest

from entroflow import fermi
from entroflow.oracle import (equilibrium_correlations,
                              evolve_correlations, ramp_reservoir_deltas,
                              reservoir_energy, reservoir_number,
                              rlm_hamiltonian)


def test_flat_band_half_filling():
    c, omega = equilibrium_correlations(np.zeros((4, 4)), 0.3, 0.0)
    assert np.abs(c.c - 0.5 * np.eye(4)).max() < 1e-14
    assert omega == pytest.approx(-4 * 0.3 * np.log(2.0), rel=1e-12)


def test_zero_temperature_projector():
    h = np.array([[0.0, 1.0], [1.0, 0.0]])
    c, _ = equilibrium_correlations(h, 1e-7, 0.0)
    assert c.total_number == pytest.approx(1.0, abs=1e-9)
    assert c.energy(h) == pytest.approx(-1.0, abs=1e-9)
    evals = c.occupations()
    assert np.all((evals > -1e-12) & (evals < 1 + 1e-12))


def test_grand_potential_matches_weight_sum():
    h = rlm_hamiltonian(1.0, 1.0, 1.25, 50)
    temp, mu = 0.2, 0.1
    _, omega = equilibrium_correlations(h, temp, mu)
    evals = np.linalg.eigvalsh(h)
    expect = fermi.grand_potential_per_state(evals, mu, temp).sum()
    assert omega == pytest.approx(expect, rel=1e-12)


def test_complex_hamiltonian_correlations_match_eigenbasis():
    # Peierls ring: C_ij = <c_i^dag c_j> = sum_nu f psi*(i) psi(j)
    from entroflow.model import build_ring
    h = build_ring(5, 1.0, 0.13, 0.0, 0.1, 0.2).hamiltonian()
    c, _ = equilibrium_correlations(h, 0.1, 0.2)
    evals, vecs = np.linalg.eigh(h)
    occ = fermi.occupation(evals, 0.2, 0.1)
    direct = np.einsum("n,in,jn->ij", occ, vecs.conj(), vecs)
    assert np.abs(c.c - direct).max() < 1e-13


def test_static_evolution_is_stationary():
    h = rlm_hamiltonian(1.0, 1.0, 1.25, 60)
    c0, _ = equilibrium_correlations(h, 0.2, 0.0)
    cf, _ = evolve_correlations(h, 0, lambda t: 0.0, c0.c, 15.0, 0.02)
    assert np.abs(cf.c - c0.c).max() < 1e-12
    assert abs(np.trace(cf.c) - np.trace(c0.c)) < 1e-10
    assert abs(cf.energy(h) - c0.energy(h)) < 1e-10


def test_unitarity_preserves_occupations():
    h = rlm_hamiltonian(1.0, 1.0, 1.25, 40)
    c0, _ = equilibrium_correlations(h, 0.2, 0.0)
    cf, _ = evolve_correlations(h, 0, lambda t: 0.4 * min(t / 2.0, 1.0),
                                c0.c, 4.0, 0.02)
    occ0 = np.sort(c0.occupations())
    occf = np.sort(cf.occupations())
    assert np.abs(occ0 - occf).max() < 1e-10
    assert abs(cf.total_number - c0.total_number) < 1e-10


def test_split_stepper_matches_exact_diagonalization():
    h = rlm_hamiltonian(1.0, 1.0, 1.25, 30)
    c0, _ = equilibrium_correlations(h, 0.2, 0.0)
    drv = lambda t: 0.5 * min(t / 3.0, 1.0)
    cs, _ = evolve_correlations(h, 0, drv, c0.c, 4.0, 0.01, method="split")
    ce, _ = evolve_correlations(h, 0, drv, c0.c, 4.0, 0.01, method="exact")
    assert np.abs(cs.c - ce.c).max() < 5e-6


def test_reflection_bound_warns():
    h = rlm_hamiltonian(1.0, 1.0, 1.0, 20)
    c0, _ = equilibrium_correlations(h, 0.2, 0.0)
    with pytest.warns(UserWarning, match="reflection"):
        evolve_correlations(h, 0, lambda t: 0.0, c0.c, 30.0, 0.5)


def test_reservoir_observable_helpers():
    h = rlm_hamiltonian(0.7, 0.9, 1.25, 25)
    c, _ = equilibrium_correlations(h, 0.3, 0.0)
    n_r = reservoir_number(c.c)
    e_r = reservoir_energy(c.c, 1.25, 0.9)
    assert n_r == pytest.approx(c.total_number - c.c[0, 0].real, abs=1e-12)
    bonds = np.diag(c.c, 1).real
    assert e_r == pytest.approx(0.9 * bonds[0] + 2 * 1.25 * bonds[1:].sum(),
                                abs=1e-12)


@pytest.mark.slow
def test_slow_ramp_converges_to_frozen_differences():
    """Adiabatic convergence study: the windowed junction observables of
    the closed chain approach the frozen-equilibrium endpoint differences
    as the ramp slows; the gap at least halves per tau doubling."""
    from entroflow.drive import reservoir_observables
    temp, mu, V, t0 = 0.2, 0.0, 1.0, 1.25
    na, ea = reservoir_observables(1.0, V, t0, temp, mu, 2000)
    nb, eb = reservoir_observables(1.5, V, t0, temp, mu, 2000)
    dn_frozen = nb - na
    gaps = []
    for tau_t0 in (50.0, 100.0):
        res = ramp_reservoir_deltas(1.0, 1.5, V, t0, temp, mu, m_sites=300,
                                    tau=tau_t0 / t0, fit_window=(10, 40))
        gaps.append(abs(res["dN_R"] - dn_frozen) / abs(dn_frozen))
    assert gaps[1] < 0.6 * gaps[0]
    assert gaps[1] < 0.01


def test_sudden_quench_protocol_runs():
    # contrast case for the convergence study; conservation still holds
    res = ramp_reservoir_deltas(1.0, 1.5, 1.0, 1.25, 0.2, 0.0, m_sites=120,
                                tau=20.0, ramp="sudden", fit_window=(10, 30))
    assert np.isfinite(res["dN_R"]) and np.isfinite(res["dE_R"])
    # whole-chain particle change equals minus the level change exactly
    assert abs(res["dN_closed"]) < 0.2
