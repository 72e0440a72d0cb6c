"""Lead surface Green's functions, embedding self-energies, and weighted
spectral matrices.

Every reservoir in this project couples diagonally (a chain lead touches
one site, a wide-band bath touches a set of sites), so self-energies and
broadenings are stored as per-site vectors rather than dense matrices.

The central object built here is the Hermitian weighted spectral matrix

    M^X(eps) = sum_alpha w_alpha(eps) * G^R Gamma^alpha G^A,

which reduces to the spectral function A = i(G^R - G^A) when all weights
are one and whose energy integral gives channel-resolved one-body
expectation values (particle, energy, free-energy and entropy flows).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fermi
from .errors import SingularityError
from .model import DeviceModel, SemiInfiniteChain, WideBand


def surface_g(eps, t0: float, eps0: float = 0.0):
    """Retarded surface Green's function of a semi-infinite chain.

    Solves g = 1/(eps - eps0 - t0**2 * g) on the retarded branch:
    Im g <= 0 inside the band |eps - eps0| < 2|t0| and |g| decaying
    like 1/eps outside. Vectorized over eps.
    """
    x = np.asarray(eps, dtype=float) - eps0
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    b = 2.0 * abs(t0)
    g = np.empty(x.shape, dtype=complex)
    inside = np.abs(x) <= b
    xi = x[inside]
    g[inside] = (xi - 1j * np.sqrt(b * b - xi * xi)) / (2.0 * t0 * t0)
    above = x > b
    xa = x[above]
    g[above] = (xa - np.sqrt(xa * xa - b * b)) / (2.0 * t0 * t0)
    below = x < -b
    xb = x[below]
    g[below] = (xb + np.sqrt(xb * xb - b * b)) / (2.0 * t0 * t0)
    return g[0] if scalar else g


def surface_g_deriv(eps, t0: float, eps0: float = 0.0):
    """d/d(eps) of :func:`surface_g`; diverges like 1/sqrt at band edges."""
    x = np.asarray(eps, dtype=float) - eps0
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    b = 2.0 * abs(t0)
    d = np.empty(x.shape, dtype=complex)
    inside = np.abs(x) < b
    xi = x[inside]
    d[inside] = (1.0 + 1j * xi / np.sqrt(b * b - xi * xi)) / (2.0 * t0 * t0)
    above = x >= b
    xa = x[above]
    root = np.sqrt(np.maximum(xa * xa - b * b, 0.0))
    with np.errstate(divide="ignore"):
        d[above] = (1.0 - xa / np.where(root > 0, root, np.inf)) / (2.0 * t0 * t0)
        d[above] = np.where(root > 0, d[above], -np.inf)
    below = x <= -b
    xb = x[below]
    root = np.sqrt(np.maximum(xb * xb - b * b, 0.0))
    with np.errstate(divide="ignore"):
        d[below] = (1.0 + xb / np.where(root > 0, root, -np.inf)) / (2.0 * t0 * t0)
        d[below] = np.where(root > 0, d[below], -np.inf)
    return d[0] if scalar else d


def reservoir_sigma_diag(model: DeviceModel, res, eps) -> np.ndarray:
    """Retarded self-energy of one reservoir as a per-site diagonal.

    Shape (n_eps, n_sites) for array eps, (n_sites,) for scalar.
    """
    eps = np.asarray(eps, dtype=float)
    scalar = eps.ndim == 0
    eps = np.atleast_1d(eps)
    sig = np.zeros((eps.size, model.n_sites), dtype=complex)
    kind = res.kind
    if isinstance(kind, SemiInfiniteChain):
        g = surface_g(eps, kind.t0_lead, kind.eps0_lead)
        sig[:, kind.contact_site] = kind.contact_amp**2 * g
    elif isinstance(kind, WideBand):
        for site, gam in zip(kind.sites, kind.gammas):
            sig[:, site] = -0.5j * gam
    else:
        raise TypeError(f"unknown reservoir kind {type(kind)!r}")
    return sig[0] if scalar else sig


@dataclass(frozen=True)
class GreensState:
    """Retarded Green's function and reservoir broadenings at one energy."""

    eps: float
    g_r: np.ndarray                 # (n, n) complex
    gamma: dict                     # label -> (n,) real diagonal of Gamma^alpha
    sigma: dict                     # label -> (n,) complex diagonal of Sigma^R_alpha

    @property
    def g_a(self) -> np.ndarray:
        return self.g_r.conj().T

    @property
    def gamma_total(self) -> np.ndarray:
        return sum(self.gamma.values())

    def spectral(self) -> np.ndarray:
        """A = i(G^R - G^A), Hermitian positive semidefinite."""
        return 1j * (self.g_r - self.g_a)


def assemble_greens(model: DeviceModel, eps: float) -> GreensState:
    """Dense G^R(eps) = (eps - H - Sigma^R)^(-1) with all reservoirs embedded."""
    h = model.hamiltonian()
    sigma = {}
    gamma = {}
    sig_tot = np.zeros(model.n_sites, dtype=complex)
    for res in model.reservoirs:
        s = reservoir_sigma_diag(model, res, eps)
        sigma[res.label] = s
        gamma[res.label] = -2.0 * s.imag
        sig_tot += s
    mat = eps * np.eye(model.n_sites, dtype=complex) - h - np.diag(sig_tot)
    try:
        g_r = np.linalg.inv(mat)
    except np.linalg.LinAlgError as exc:
        raise SingularityError(
            "Green's function singular; energy sits on an unbroadened pole",
            eps=eps,
        ) from exc
    if not np.all(np.isfinite(g_r)):
        raise SingularityError("Green's function overflowed", eps=eps)
    return GreensState(eps=eps, g_r=g_r, gamma=gamma, sigma=sigma)


def greens_batch(model: DeviceModel, eps: np.ndarray):
    """Vectorized assembly over an energy batch.

    Returns (g_r, gamma, sigma): g_r has shape (n_eps, n, n); gamma and
    sigma map reservoir labels to (n_eps, n) diagonals.
    """
    eps = np.asarray(eps, dtype=float)
    n = model.n_sites
    h = model.hamiltonian()
    sigma = {}
    gamma = {}
    sig_tot = np.zeros((eps.size, n), dtype=complex)
    for res in model.reservoirs:
        s = reservoir_sigma_diag(model, res, eps)
        sigma[res.label] = s
        gamma[res.label] = -2.0 * s.imag
        sig_tot += s
    mats = -np.broadcast_to(h, (eps.size, n, n)).copy()
    idx = np.arange(n)
    mats[:, idx, idx] += eps[:, None] - sig_tot
    try:
        g_r = np.linalg.inv(mats)
    except np.linalg.LinAlgError as exc:
        raise SingularityError("Green's function singular in batch", ) from exc
    return g_r, gamma, sigma


@dataclass(frozen=True)
class ChannelWeight:
    """Per-reservoir scalar weight functions for one transport channel."""

    channel: str
    temps: dict      # label -> thermal energy
    mus: dict        # label -> chemical potential

    @classmethod
    def for_model(cls, model: DeviceModel, channel: str) -> "ChannelWeight":
        if channel not in fermi.CHANNELS:
            raise ValueError(f"unknown channel {channel!r}")
        return cls(
            channel=channel,
            temps={r.label: r.temp for r in model.reservoirs},
            mus={r.label: r.mu for r in model.reservoirs},
        )

    def evaluate(self, label: str, eps):
        return fermi.channel_weight(self.channel, eps, self.mus[label], self.temps[label])


def weighted_matrix(state: GreensState, weights: ChannelWeight) -> np.ndarray:
    """Hermitian weighted spectral matrix M^X at the state's energy.

    Equals i * G^R Sigma^X G^A for the source term
    Sigma^X = i * sum_alpha Gamma^alpha w_alpha; with all weights equal
    to one it reduces to the spectral function i(G^R - G^A).
    """
    wgam = np.zeros(state.g_r.shape[0])
    for label, gam in state.gamma.items():
        wgam = wgam + float(weights.evaluate(label, state.eps)) * gam
    return state.g_r @ (wgam[:, None] * state.g_a)


def weighted_matrix_batch(g_r, gamma, weights: ChannelWeight, eps) -> np.ndarray:
    """Batched :func:`weighted_matrix`; returns shape (n_eps, n, n)."""
    eps = np.asarray(eps, dtype=float)
    wgam = np.zeros(g_r.shape[:2])
    for label, gam in gamma.items():
        wgam = wgam + weights.evaluate(label, eps)[:, None] * gam
    g_a = np.conj(np.swapaxes(g_r, 1, 2))
    return g_r @ (wgam[:, :, None] * g_a)
