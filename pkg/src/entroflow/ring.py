"""Bond-resolved currents on the flux-threaded ring and the eigenstate
formulas they reduce to in the discrete limit.

The lattice bond current replaces the continuum velocity operator: for
channel X and edge (i, j),

    J_X(i->j) = -(1/pi) int deps Im[H_ij M^X_ji(eps)],

where M^X is the weighted spectral matrix of the greens module (hbar=1).
The sign is fixed by lattice continuity: positive values flow from i to
j, and the per-site divergence of J plus the local reservoir injection
vanishes in steady state.

The closed-ring (reservoir-free) limit of the same currents is a sum
over eigenstates nu with per-state bond velocities
v_nu(i->j) = -2 Im[H_ij psi_nu(i)* psi_nu(j)], which is the form used
for the entropy-current identities and their chemical-potential
derivative (the thermal-noise relation).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import fermi
from .errors import ModelError
from .greens import ChannelWeight, greens_batch
from .model import DeviceModel
from .quadrature import EnergyGrid, energy_grid, integrate

ONE_OVER_H = 1.0 / (2.0 * np.pi)


@dataclass(frozen=True)
class BondCurrentField:
    """Per-edge currents in all four channels plus the conventional
    entropy current (j_e - mu j_n)/T."""

    edges: tuple
    j_n: np.ndarray
    j_e: np.ndarray
    j_omega: np.ndarray
    j_s: np.ndarray
    j_s_conv: np.ndarray
    temp: float
    mu: float
    flux: float
    quad_error: float = 0.0


@dataclass(frozen=True)
class EigenstateSet:
    """Spectrum and per-state bond velocities of a closed device."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray        # columns are states
    edges: tuple
    velocities: np.ndarray          # (n_states, n_edges)

    def free_energy_per_state(self, temp: float, mu: float) -> np.ndarray:
        return fermi.grand_potential_per_state(self.eigenvalues, mu, temp)


def _reference_thermo(model: DeviceModel, temp, mu):
    if temp is None or mu is None:
        temps = {r.temp for r in model.reservoirs}
        mus = {r.mu for r in model.reservoirs}
        if len(temps) != 1 or len(mus) != 1:
            raise ModelError(
                "reservoirs are not at a common (T, mu); pass temp/mu explicitly"
            )
        temp = temps.pop() if temp is None else temp
        mu = mus.pop() if mu is None else mu
    return temp, mu


def ring_grid(model: DeviceModel, temp: float, mu: float,
              rel_tol: float = 1e-9, abs_tol: float = 1e-12,
              max_panels: int = 4000) -> EnergyGrid:
    """Quadrature window for wide-band devices.

    The free-energy weight grows linearly on the hole side while the
    off-diagonal spectral tails fall off fast (winding paths only), so
    the window extends far below the spectrum; adaptivity keeps the
    smooth tail cheap.
    """
    evals = np.linalg.eigvalsh(model.hamiltonian()).real
    scale = max(np.max(np.abs(evals)), abs(mu) + temp, 1e-12)
    lo = min(evals.min(), mu) - max(45.0 * temp, 140.0 * scale)
    hi = max(evals.max(), mu) + max(45.0 * temp, 20.0 * scale)
    pts = sorted(set([lo, hi, mu, mu - 40.0 * temp, mu + 40.0 * temp]
                     + evals.tolist()))
    return energy_grid(pts, rel_tol=rel_tol, abs_tol=abs_tol,
                       max_panels=max_panels)


def bond_currents(
    model: DeviceModel,
    temp: float | None = None,
    mu: float | None = None,
    grid: EnergyGrid | None = None,
) -> BondCurrentField:
    """Integrate all four channel currents on every device edge."""
    temp, mu = _reference_thermo(model, temp, mu)
    if grid is None:
        grid = ring_grid(model, temp, mu)
    edges = tuple(model.edges)
    h = model.hamiltonian()
    amps = np.array([h[i, j] for i, j in edges])
    weights = {ch: ChannelWeight.for_model(model, ch) for ch in fermi.CHANNELS}

    def f(eps):
        g_r, gamma, _ = greens_batch(model, eps)
        g_a = np.conj(np.swapaxes(g_r, 1, 2))
        cols = []
        for ch in fermi.CHANNELS:
            wgam = np.zeros(g_r.shape[:2])
            for label, gam in gamma.items():
                wgam = wgam + weights[ch].evaluate(label, eps)[:, None] * gam
            m = g_r @ (wgam[:, :, None] * g_a)
            m_ji = m[:, [j for _, j in edges], [i for i, _ in edges]]
            cols.append(-(1.0 / np.pi) * np.imag(amps[None, :] * m_ji))
        return np.concatenate(cols, axis=1)

    vals, errs = integrate(f, grid)
    n_e = len(edges)
    j_n, j_e, j_om, j_s = (vals[k * n_e:(k + 1) * n_e] for k in range(4))
    j_s_conv = (j_e - mu * j_n) / temp
    phi = model.flux.phi if model.flux is not None else 0.0
    return BondCurrentField(
        edges=edges, j_n=j_n, j_e=j_e, j_omega=j_om, j_s=j_s,
        j_s_conv=j_s_conv, temp=temp, mu=mu, flux=phi,
        quad_error=float(np.max(errs)),
    )


def site_injection(
    model: DeviceModel,
    channel: str,
    temp: float | None = None,
    mu: float | None = None,
    grid: EnergyGrid | None = None,
) -> np.ndarray:
    """Per-site reservoir injection of channel X, local Landauer form:

        inj_i = (1/h) int deps sum_alpha Gamma^alpha_i
                             [w_alpha(eps) A_ii(eps) - M^X_ii(eps)].

    Summed over sites this is the into-device channel current of each
    reservoir; in global equilibrium the integrand vanishes pointwise.
    """
    temp, mu = _reference_thermo(model, temp, mu)
    if grid is None:
        grid = ring_grid(model, temp, mu)
    weight = ChannelWeight.for_model(model, channel)

    def f(eps):
        g_r, gamma, _ = greens_batch(model, eps)
        absg2 = np.abs(g_r) ** 2
        gam_tot = sum(gamma.values())
        a_diag = np.einsum("kij,kj->ki", absg2, gam_tot)
        wgam = np.zeros(g_r.shape[:2])
        for label, gam in gamma.items():
            wgam = wgam + weight.evaluate(label, eps)[:, None] * gam
        m_diag = np.einsum("kij,kj->ki", absg2, wgam)
        acc = np.zeros((eps.size, model.n_sites))
        for label, gam in gamma.items():
            w = weight.evaluate(label, eps)[:, None]
            acc = acc + gam * (w * a_diag - m_diag)
        return acc * ONE_OVER_H

    vals, _ = integrate(f, grid)
    return np.asarray(vals)


def divergence_check(
    model: DeviceModel,
    field: BondCurrentField | None = None,
    channel: str = "omega",
    temp: float | None = None,
    mu: float | None = None,
    grid: EnergyGrid | None = None,
) -> np.ndarray:
    """Per-site continuity residual: incoming bond currents plus local
    reservoir injection. Vanishes in global equilibrium (the lattice
    statement that the free-energy flow is divergence-free there); in a
    biased device the omega channel generically develops a divergence.
    """
    temp, mu = _reference_thermo(model, temp, mu)
    if field is None:
        field = bond_currents(model, temp, mu, grid)
    incoming = np.zeros(model.n_sites)
    values = {"n": field.j_n, "e": field.j_e, "omega": field.j_omega, "s": field.j_s}[channel]
    for (i, j), val in zip(field.edges, values):
        incoming[j] += val
        incoming[i] -= val
    inj = site_injection(model, channel, temp, mu, grid)
    return incoming + inj


def eigenstate_set(model: DeviceModel) -> EigenstateSet:
    """Diagonalize a closed device and tabulate per-state bond velocities."""
    if model.reservoirs:
        raise ModelError("eigenstate path expects a closed (reservoir-free) device")
    h = model.hamiltonian()
    evals, vecs = np.linalg.eigh(h)
    edges = tuple(model.edges)
    vel = np.empty((evals.size, len(edges)))
    for k, (i, j) in enumerate(edges):
        vel[:, k] = -2.0 * np.imag(h[i, j] * np.conj(vecs[i, :]) * vecs[j, :])
    return EigenstateSet(eigenvalues=evals, eigenvectors=vecs, edges=edges,
                         velocities=vel)


def eigenstate_entropy_current(
    states: EigenstateSet, temp: float, mu: float, form: str = "entropy"
) -> np.ndarray:
    """Per-bond equilibrium entropy current of the closed ring.

    form="entropy" weighs velocities with the entropy per state
    s(eps_nu); form="energy-free" uses [(eps_nu - mu) f - w_nu]/T. The
    two are algebraically identical, which is the content of the
    equivalent-rewriting identity tested in the suite.
    """
    ev = states.eigenvalues
    if form == "entropy":
        w = fermi.entropy_per_state(ev, mu, temp)
    elif form == "energy-free":
        w = ((ev - mu) * fermi.occupation(ev, mu, temp)
             - fermi.grand_potential_per_state(ev, mu, temp)) / temp
    else:
        raise ValueError(f"unknown form {form!r}")
    return w @ states.velocities


def eigenstate_channel_current(states: EigenstateSet, channel: str,
                               temp: float, mu: float) -> np.ndarray:
    w = fermi.channel_weight(channel, states.eigenvalues, mu, temp)
    return w @ states.velocities


def dmu_entropy_current(
    states: EigenstateSet, temp: float, mu: float, dmu: float
):
    """Chemical-potential derivative of the bond entropy current.

    Returns a dict with the analytic form T d(j_s)/dmu =
    sum_nu (eps_nu - mu)/T f p v_nu, its central-difference check, and
    the conventional-formula derivative whose extra term
    -sum_nu f v_nu survives at T -> 0.
    """
    if dmu <= 0.0:
        raise ValueError("dmu must be positive")
    ev = states.eigenvalues
    f = fermi.occupation(ev, mu, temp)
    p = fermi.hole_occupation(ev, mu, temp)
    analytic = (((ev - mu) / temp) * f * p) @ states.velocities
    up = eigenstate_entropy_current(states, temp, mu + dmu)
    dn = eigenstate_entropy_current(states, temp, mu - dmu)
    numeric = temp * (up - dn) / (2.0 * dmu)
    extra = -(f @ states.velocities)
    return {
        "analytic": analytic,
        "numeric": numeric,
        "conventional": analytic + extra,
        "extra_term": extra,
    }


def total_circulating(values: np.ndarray):
    """Mean bond current around the cycle and the spread across bonds.

    A divergence-free ring flow makes all bonds equal; the deviation is
    reported as a consistency diagnostic.
    """
    values = np.asarray(values, dtype=float)
    mean = float(values.mean())
    dev = float(np.max(np.abs(values - mean))) if values.size else 0.0
    return mean, dev


def ring_temperature_sweep(model_factory, temps):
    """Corrected and conventional circulating entropy currents vs T.

    model_factory(temp) must return the ring model with its surface
    reservoir at that temperature.
    """
    rows = []
    for temp in temps:
        model = model_factory(float(temp))
        fld = bond_currents(model)
        i_s, _ = total_circulating(fld.j_s)
        i_s_conv, _ = total_circulating(fld.j_s_conv)
        rows.append((float(temp), i_s, i_s_conv))
    return rows
