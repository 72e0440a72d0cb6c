"""Multi-terminal scattering observables.

Sign conventions, fixed once and used everywhere:

* ``reservoir_current`` returns the current flowing from reservoir alpha
  INTO the device region, I_alpha^(nu) = (1/h) int deps eps^nu
  sum_beta T_ab (f_alpha - f_beta).
* ``entropy_current`` returns the entropy current flowing INTO reservoir
  alpha, I^S_alpha = (1/h) int deps sum_beta T_ab (s_beta - s_alpha),
  so that the probe entropy production -sum_n I^S_Pn is positive when
  the probes inject entropy into the wire.

With hbar = 1 the prefactor 1/h is 1/(2*pi).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fermi
from .greens import GreensState, greens_batch
from .model import DeviceModel, SemiInfiniteChain
from .quadrature import EnergyGrid, energy_grid, fermi_window, integrate

ONE_OVER_H = 1.0 / (2.0 * np.pi)


def transmission(state: GreensState, alpha: str, beta: str) -> float:
    """T_ab(eps) = Tr[Gamma^a G^R Gamma^b G^A] at the state's energy.

    With diagonal broadenings this reduces to
    sum_ij Gamma^a_i |G^R_ij|^2 Gamma^b_j.
    """
    return float(
        np.einsum("i,ij,j->", state.gamma[alpha], np.abs(state.g_r) ** 2,
                  state.gamma[beta])
    )


@dataclass(frozen=True)
class TransmissionMatrix:
    """All pairwise transmissions at one energy."""

    eps: float
    labels: tuple
    values: dict          # (alpha, beta) -> T_ab(eps), alpha != beta

    def __getitem__(self, pair):
        return self.values[pair]

    def row_sum(self, alpha: str) -> float:
        """sum_{beta != alpha} T_ab; bounded by the channel count."""
        return sum(v for (a, _), v in self.values.items() if a == alpha)


def transmission_matrix(state: GreensState) -> TransmissionMatrix:
    labels = tuple(state.gamma.keys())
    values = {}
    for a in labels:
        for b in labels:
            if a != b:
                values[(a, b)] = transmission(state, a, b)
    return TransmissionMatrix(eps=state.eps, labels=labels, values=values)


def default_grid(
    model: DeviceModel,
    rel_tol: float = 1e-9,
    abs_tol: float = 1e-12,
    max_panels: int = 4000,
    tail: float = 0.0,
) -> EnergyGrid:
    """Energy grid covering the lead bands and every Fermi window.

    Breakpoints: chain-lead band edges, device eigenvalue hints, all
    reservoir chemical potentials +- 40 kB T. ``tail`` extends the window
    (used for weights like the free-energy channel that decay slowly on
    the hole side).
    """
    band_edges = []
    pts = []
    for res in model.reservoirs:
        if isinstance(res.kind, SemiInfiniteChain):
            lo = res.kind.eps0_lead - 2.0 * abs(res.kind.t0_lead)
            hi = res.kind.eps0_lead + 2.0 * abs(res.kind.t0_lead)
            band_edges.extend([lo, hi])
        pts.extend(fermi_window([res.mu], [res.temp]))
    evals = np.linalg.eigvalsh(model.hamiltonian())
    pts.extend(evals.tolist())
    if tail > 0.0:
        lo = min(pts + band_edges)
        hi = max(pts + band_edges)
        pts.extend([lo - tail, hi + tail])
    # keep plain breakpoints out of the closed band interval edges
    return energy_grid(pts, band_edges=band_edges, rel_tol=rel_tol,
                       abs_tol=abs_tol, max_panels=max_panels)


def _current_integrand(model: DeviceModel, alpha: str, nus):
    labels = model.labels
    temps = {r.label: r.temp for r in model.reservoirs}
    mus = {r.label: r.mu for r in model.reservoirs}

    def f(eps):
        g_r, gamma, _ = greens_batch(model, eps)
        occ = {lab: fermi.occupation(eps, mus[lab], temps[lab]) for lab in labels}
        absg2 = np.abs(g_r) ** 2
        ga = gamma[alpha]
        acc = np.zeros(eps.shape)
        for lab in labels:
            if lab == alpha:
                continue
            t_ab = np.einsum("ki,kij,kj->k", ga, absg2, gamma[lab])
            acc = acc + t_ab * (occ[alpha] - occ[lab])
        return np.stack([acc * eps**nu for nu in nus], axis=-1) * ONE_OVER_H

    return f


def reservoir_current(
    model: DeviceModel, alpha: str, nu: int = 0, grid: EnergyGrid | None = None
) -> float:
    """Particle (nu=0) or energy (nu=1) current from reservoir alpha into
    the device."""
    if grid is None:
        grid = default_grid(model)
    val, _ = integrate(_current_integrand(model, alpha, (nu,)), grid)
    return float(np.atleast_1d(val)[0])


def entropy_current(
    model: DeviceModel, alpha: str, grid: EnergyGrid | None = None
) -> float:
    """Entropy current into reservoir alpha (units of kB/h)."""
    if grid is None:
        grid = default_grid(model)
    labels = model.labels
    temps = {r.label: r.temp for r in model.reservoirs}
    mus = {r.label: r.mu for r in model.reservoirs}

    def f(eps):
        g_r, gamma, _ = greens_batch(model, eps)
        ent = {lab: fermi.entropy_per_state(eps, mus[lab], temps[lab]) for lab in labels}
        absg2 = np.abs(g_r) ** 2
        ga = gamma[alpha]
        acc = np.zeros(eps.shape)
        for lab in labels:
            if lab == alpha:
                continue
            t_ab = np.einsum("ki,kij,kj->k", ga, absg2, gamma[lab])
            acc = acc + t_ab * (ent[lab] - ent[alpha])
        return acc * ONE_OVER_H

    val, _ = integrate(f, grid)
    return float(val)


def probe_entropy_production(probe_entropy_currents) -> float:
    """Total entropy injection rate of the probes, S_dot_P = -sum_n I^S_Pn."""
    return -float(np.sum(probe_entropy_currents))


def joule_entropy_rate(i_particle_1: float, mu_1: float, mu_2: float, t0_temp: float) -> float:
    """Macroscopic Joule entropy production P/T0.

    ``i_particle_1`` is the particle current flowing into reservoir 1
    (lead a); P = I*V is then i_1 * (mu_2 - mu_1), positive for a bias
    driving current from 1 to 2.
    """
    return i_particle_1 * (mu_2 - mu_1) / t0_temp
