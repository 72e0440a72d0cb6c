import numpy as np
import pytest

from entroflow.errors import SingularityError
from entroflow.greens import (ChannelWeight, assemble_greens, greens_batch,
                              surface_g, surface_g_deriv, weighted_matrix)
from entroflow.model import build_probed_chain, build_ring, build_rlm
from entroflow.quadrature import energy_grid, integrate


def decimation_oracle(eps, t0, eta=1e-6):
    """Independent surface Green's function by chain doubling."""
    z = eps + 1j * eta
    e_s = e_b = 0.0
    a = b = t0
    for _ in range(200):
        den = z - e_b
        e_s = e_s + a * b / den
        e_b = e_b + 2.0 * a * b / den
        a, b = a * a / den, b * b / den
        if abs(a) < 1e-30:
            break
    return 1.0 / (z - e_s)


@pytest.mark.parametrize("eps,t0,tol", [
    (0.0, 1.0, 1e-4), (0.7, 1.0, 1e-4), (1.99, 1.0, 1e-4),
    (2.0, 1.0, 5e-3), (100.0, 1.0, 1e-6), (-3.0, 1.25, 1e-6),
    (0.5, 1.25, 1e-4),
])
def test_surface_g_against_decimation(eps, t0, tol):
    assert surface_g(eps, t0) == pytest.approx(decimation_oracle(eps, t0), abs=tol)


def test_surface_g_special_values():
    assert surface_g(0.0, 1.0) == pytest.approx(-1j, abs=1e-14)
    assert surface_g(2.0, 1.0) == pytest.approx(1.0, abs=1e-14)
    assert surface_g(100.0, 1.0) == pytest.approx(0.01, abs=1e-4)


def test_surface_g_fixed_point_and_branch():
    eps = np.linspace(-4.0, 4.0, 81)
    g = surface_g(eps, 1.25)
    assert np.abs(g - 1.0 / (eps - 1.25**2 * g)).max() < 1e-12
    assert np.all(g.imag <= 1e-15)            # retarded branch
    outside = np.abs(eps) > 2.6
    assert np.all(np.abs(g[outside]) < 1.0 / 1.25)   # decaying branch


def test_surface_g_deriv_matches_finite_difference():
    for eps in (0.3, 1.1, -1.7, 2.6, -3.2):
        fd = (surface_g(eps + 1e-6, 1.25) - surface_g(eps - 1e-6, 1.25)) / 2e-6
        assert surface_g_deriv(eps, 1.25) == pytest.approx(fd, rel=1e-5)


def test_rlm_broadening():
    m = build_rlm(1.0, 1.0, 1.25, 0.1, 0.0)
    st = assemble_greens(m, 0.0)
    assert st.sigma["R"][0].imag == pytest.approx(-0.8, abs=1e-13)
    assert st.gamma["R"][0] == pytest.approx(1.6, abs=1e-13)


def test_greens_state_invariants():
    m = build_ring(6, 1.0, 0.05, 0.05, 0.1, 0.3)
    st = assemble_greens(m, 0.37)
    assert np.abs(st.g_a - st.g_r.conj().T).max() < 1e-13
    spec = st.spectral()
    assert np.linalg.eigvalsh(spec).min() > -1e-10


def test_spectral_sum_rules():
    m = build_rlm(1.0, 1.0, 1.25, 0.1, 0.0)
    grid = energy_grid([-2.5, 0.0, 1.0, 2.5], band_edges=[-2.5, 2.5])

    def spec_trace(model):
        def f(eps):
            g_r, _, _ = greens_batch(model, eps)
            a = 1j * (g_r - np.conj(np.swapaxes(g_r, 1, 2)))
            return np.trace(a, axis1=1, axis2=2).real / (2 * np.pi)
        return f

    val, _ = integrate(spec_trace(m), grid)
    assert val == pytest.approx(1.0, abs=1e-8)
    chain = build_probed_chain(3, 1.0, 0.0, 0.05, 0.0, 0.0)
    val, _ = integrate(spec_trace(chain), energy_grid([-2.0, 0.0, 2.0],
                                                      band_edges=[-2.0, 2.0]))
    assert val == pytest.approx(3.0, abs=1e-8)


def test_no_bound_states_for_fig1_parameters():
    from entroflow.drive import bound_states
    for eps_s in (1.0, 1.2, 1.5):
        assert bound_states(eps_s, 1.0, 1.25) == []


def test_isolated_pole_spectral_concentration():
    # a weakly broadened single site concentrates its spectral weight at
    # the site energy
    from entroflow.model import DeviceModel, ReservoirAttachment, WideBand
    eta = 1e-3
    site = DeviceModel(
        n_sites=1, onsite=(0.7,),
        hoppings=(),
        reservoirs=(ReservoirAttachment(
            "bath", WideBand(sites=(0,), gammas=(eta,)), temp=0.1, mu=0.0),),
    )
    peak = assemble_greens(site, 0.7).spectral()[0, 0].real
    off = assemble_greens(site, 0.7 + 0.5).spectral()[0, 0].real
    assert peak == pytest.approx(4.0 / eta, rel=1e-10)
    assert peak > 1e4 * off


def test_weighted_matrix_completeness():
    # all occupations -> full spectral weight
    m = build_ring(6, 1.0, 0.05, 0.05, 0.1, 0.3)
    st = assemble_greens(m, 0.42)
    deep = ChannelWeight(channel="n", temps={"surface": 0.1}, mus={"surface": 1e3})
    assert np.abs(weighted_matrix(st, deep) - st.spectral()).max() < 1e-12


def test_weighted_matrix_hermitian_psd():
    m = build_ring(6, 1.0, 0.05, 0.05, 0.1, 0.3)
    st = assemble_greens(m, -0.8)
    for channel in ("n", "s"):
        mat = weighted_matrix(st, ChannelWeight.for_model(m, channel))
        assert np.abs(mat - mat.conj().T).max() < 1e-13
        assert np.linalg.eigvalsh(mat).min() > -1e-12


def test_weighted_matrix_entropy_tails_vanish():
    m = build_ring(6, 1.0, 0.05, 0.05, 0.02, 0.3)
    st = assemble_greens(m, 0.3 + 60 * 0.02)
    mat = weighted_matrix(st, ChannelWeight.for_model(m, "s"))
    assert np.abs(mat).max() < 1e-12


def test_particle_hole_completeness_pointwise():
    # G^< + G^> = A: weights f and p sum to the spectral function
    m = build_probed_chain(4, 1.0, 0.3, 0.05, 0.02, -0.02)
    for eps in (-1.3, 0.0, 0.7):
        st = assemble_greens(m, eps)
        f_occ = weighted_matrix(st, ChannelWeight.for_model(m, "n"))
        hole = ChannelWeight(
            channel="n",
            temps={r.label: r.temp for r in m.reservoirs},
            mus={r.label: 2 * eps - r.mu for r in m.reservoirs},
        )
        # occupation evaluated at mirrored mu equals the hole occupation
        p_occ = weighted_matrix(st, hole)
        assert np.abs(f_occ + p_occ - st.spectral()).max() < 1e-10


def test_singularity_reported_with_energy():
    closed = build_probed_chain(1, 1.0, 0.0, 0.05, 0.0, 0.0)
    # strip the leads: a bare site has a pole at its energy
    from entroflow.model import DeviceModel
    bare = DeviceModel(n_sites=1, onsite=(0.5,), hoppings=())
    with pytest.raises(SingularityError):
        assemble_greens(bare, 0.5)
    assert closed is not None


def test_batch_matches_scalar_assembly():
    m = build_probed_chain(5, 1.0, 0.2, 0.05, 0.03, -0.03)
    eps = np.array([-1.1, 0.2, 1.4])
    g_r, gamma, sigma = greens_batch(m, eps)
    for k, e in enumerate(eps):
        st = assemble_greens(m, float(e))
        assert np.abs(g_r[k] - st.g_r).max() < 1e-13
        for lab in gamma:
            assert np.abs(gamma[lab][k] - st.gamma[lab]).max() < 1e-13
