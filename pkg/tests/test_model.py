import numpy as np
import pytest

from entroflow.errors import ModelError
from entroflow.model import (FluxSpec, build_probed_chain, build_ring,
                             build_rlm, loop_phase)


@pytest.mark.parametrize("builder,args", [
    (build_rlm, (1.0, 1.0, 1.25, 0.1, 0.0)),
    (build_ring, (6, 2.7, 0.05, 0.135, 0.026, 0.81)),
    (build_probed_chain, (7, 2.7, 0.27, 0.01, 0.05, -0.05)),
])
def test_hamiltonians_hermitian(builder, args):
    h = builder(*args).hamiltonian()
    assert np.abs(h - h.conj().T).max() < 1e-15


def test_rlm_matches_resonance_width():
    # Gamma(0) = 2 V^2 sqrt(4 t0^2) / (2 t0^2), checked against the
    # decimation recursion in test_greens
    from entroflow.greens import assemble_greens
    m = build_rlm(1.5, 1.0, 1.25, 0.1, 0.0)
    st = assemble_greens(m, 0.0)
    assert st.gamma["R"][0] == pytest.approx(1.6, abs=1e-12)


def test_rlm_decoupled_level_occupation():
    # V = 0: the level stays an isolated pole, occupation f(eps_s)
    from entroflow import fermi
    from entroflow.oracle import equilibrium_correlations
    m = build_rlm(0.0, 0.0, 1.25, 0.2, 0.0)
    c, _ = equilibrium_correlations(m.hamiltonian().real, 0.2, 0.0)
    assert c.c[0, 0].real == pytest.approx(fermi.occupation(np.array([0.0]), 0.0, 0.2)[0],
                                           abs=1e-12)


def test_rlm_requires_lead_hopping():
    with pytest.raises(ModelError):
        build_rlm(1.0, 1.0, 0.0, 0.1, 0.0)


def test_ring_peierls_phase_per_bond():
    m = build_ring(6, 1.0, 0.05, 0.0, 0.1, 0.0)
    h = m.hamiltonian()
    assert np.angle(h[0, 1]) == pytest.approx(2 * np.pi * 0.05 / 6, abs=1e-14)
    assert loop_phase(m) == pytest.approx(np.exp(1j * 2 * np.pi * 0.05), abs=1e-13)


def test_ring_zero_flux_real():
    h = build_ring(6, 1.0, 0.0, 0.0, 0.1, 0.0).hamiltonian()
    assert np.abs(h.imag).max() == 0.0


def test_ring_gauge_invariance():
    # all phase on one bond vs distributed: identical spectra
    m = build_ring(8, 1.3, 0.17, 0.0, 0.1, 0.0)
    ev1 = np.linalg.eigvalsh(m.hamiltonian())
    h2 = np.zeros((8, 8), dtype=complex)
    for i in range(8):
        j = (i + 1) % 8
        ph = np.exp(1j * 2 * np.pi * 0.17) if i == 7 else 1.0
        h2[i, j] = 1.3 * ph
        h2[j, i] = np.conj(h2[i, j])
    ev2 = np.linalg.eigvalsh(h2)
    assert np.abs(ev1 - ev2).max() < 1e-12 * np.abs(ev1).max()


def test_ring_spectrum_even_about_half_flux():
    evp = np.linalg.eigvalsh(build_ring(6, 1.0, 0.5, 0.0, 0.1, 0.0).hamiltonian())
    evm = np.linalg.eigvalsh(build_ring(6, 1.0, -0.5, 0.0, 0.1, 0.0).hamiltonian())
    assert np.abs(np.sort(evp) - np.sort(evm)).max() < 1e-12


def test_ring_minimum_size():
    with pytest.raises(ModelError):
        build_ring(2, 1.0, 0.0, 0.0, 0.1, 0.0)


def test_probed_chain_layout():
    m = build_probed_chain(40, 2.7, 0.27, 0.0099, 0.05, -0.05)
    assert m.n_sites == 40
    labels = m.labels
    assert labels[:2] == ["a", "b"]
    assert len(labels) == 42
    probe7 = m.reservoir("P7")
    assert probe7.kind.sites == (6,)


def test_probed_chain_rejects_negative_coupling():
    with pytest.raises(ModelError):
        build_probed_chain(3, 2.7, -0.1, 0.01, 0.0, 0.0)


def test_flux_spec_cycle_default():
    m = build_ring(5, 1.0, FluxSpec(phi=0.3), 0.0, 0.1, 0.0)
    assert m.flux.ring_cycle == tuple(range(5))
