"""Device geometries: site graphs with complex hoppings and attached reservoirs.

Three builders cover the shipped experiments: a driven resonant level on a
semi-infinite chain, a flux-threaded ring on a broadening surface, and a
finite chain between source/drain leads decorated with floating probes.
Models are immutable after construction and safe to share between threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ModelError


@dataclass(frozen=True)
class SemiInfiniteChain:
    """Semi-infinite tight-binding lead, coupled to one device site.

    The lead has hopping t0_lead and on-site energy eps0_lead; the
    contact bond between its end site and contact_site has amplitude
    contact_amp.
    """

    t0_lead: float
    contact_site: int
    contact_amp: float
    eps0_lead: float = 0.0

    def __post_init__(self):
        if self.t0_lead == 0.0:
            raise ModelError("semi-infinite lead needs t0_lead != 0")


@dataclass(frozen=True)
class WideBand:
    """Energy-independent coupling: diagonal broadening gamma on sites."""

    sites: tuple
    gammas: tuple

    def __post_init__(self):
        if len(self.sites) != len(self.gammas):
            raise ModelError("wide-band sites/gammas length mismatch")
        if any(g < 0 for g in self.gammas):
            raise ModelError("wide-band gamma entries must be >= 0")


@dataclass(frozen=True)
class ReservoirAttachment:
    label: str
    kind: object           # SemiInfiniteChain | WideBand
    temp: float            # thermal energy kB*T, > 0
    mu: float

    def __post_init__(self):
        if self.temp <= 0.0:
            raise ModelError(f"reservoir {self.label}: temperature must be > 0")


@dataclass(frozen=True)
class FluxSpec:
    """Magnetic flux through a ring, in units of the flux quantum."""

    phi: float
    ring_cycle: tuple = ()


@dataclass(frozen=True)
class DeviceModel:
    n_sites: int
    onsite: tuple
    hoppings: tuple          # (i, j, amplitude) with i < j, H_ji = conj
    reservoirs: tuple = field(default=())
    flux: FluxSpec | None = None

    def __post_init__(self):
        for i, j, amp in self.hoppings:
            if i == j:
                raise ModelError("hopping must connect distinct sites", edge=(i, j))
            if not (0 <= i < self.n_sites and 0 <= j < self.n_sites):
                raise ModelError("hopping site index out of range", edge=(i, j))

    def hamiltonian(self) -> np.ndarray:
        h = np.zeros((self.n_sites, self.n_sites), dtype=complex)
        h[np.diag_indices(self.n_sites)] = self.onsite
        for i, j, amp in self.hoppings:
            h[i, j] += amp
            h[j, i] += np.conj(amp)
        return h

    @property
    def edges(self):
        return [(i, j) for i, j, _ in self.hoppings]

    def reservoir(self, label: str) -> ReservoirAttachment:
        for res in self.reservoirs:
            if res.label == label:
                return res
        raise ModelError(f"no reservoir labelled {label!r}")

    @property
    def labels(self):
        return [res.label for res in self.reservoirs]


def build_rlm(eps_s: float, V: float, t0: float, temp: float, mu: float) -> DeviceModel:
    """Single resonant level coupled to a semi-infinite chain reservoir."""
    if t0 == 0.0:
        raise ModelError("build_rlm: lead hopping t0 must be nonzero")
    lead = ReservoirAttachment(
        label="R",
        kind=SemiInfiniteChain(t0_lead=t0, contact_site=0, contact_amp=V),
        temp=temp,
        mu=mu,
    )
    return DeviceModel(n_sites=1, onsite=(eps_s,), hoppings=(), reservoirs=(lead,))


def build_ring(
    n: int,
    t_hop: float,
    flux: FluxSpec | float,
    surface_gamma: float,
    temp: float,
    mu: float,
) -> DeviceModel:
    """n-site ring with Peierls phases and a uniform wide-band surface.

    The total flux phi (in units of phi0) is distributed uniformly: each
    bond i -> i+1 carries amplitude t_hop * exp(i * 2*pi*phi / n), so the
    phase product around the cycle is exp(i * 2*pi*phi) regardless of n.
    """
    if n < 3:
        raise ModelError("ring needs at least 3 sites", n=n)
    if not isinstance(flux, FluxSpec):
        flux = FluxSpec(phi=float(flux), ring_cycle=tuple(range(n)))
    elif not flux.ring_cycle:
        flux = FluxSpec(phi=flux.phi, ring_cycle=tuple(range(n)))
    phase = np.exp(1j * 2.0 * np.pi * flux.phi / n)
    # edges oriented along the cycle so every bond current is measured
    # in the same circulation sense
    hoppings = tuple((i, (i + 1) % n, t_hop * phase) for i in range(n))
    reservoirs = ()
    if surface_gamma > 0.0:
        reservoirs = (
            ReservoirAttachment(
                label="surface",
                kind=WideBand(sites=tuple(range(n)), gammas=(surface_gamma,) * n),
                temp=temp,
                mu=mu,
            ),
        )
    return DeviceModel(
        n_sites=n,
        onsite=(0.0,) * n,
        hoppings=hoppings,
        reservoirs=reservoirs,
        flux=flux,
    )


def build_probed_chain(
    N: int,
    t0: float,
    gamma_p: float,
    temp0: float,
    mu_a: float,
    mu_b: float,
) -> DeviceModel:
    """N-site chain between chain leads a/b plus N single-site probes.

    Probe n couples to site n with wide-band strength gamma_p; probe
    attachments are created at the lead temperature and mid bias, the
    floating values are determined later by the probe solver.
    """
    if N < 1:
        raise ModelError("probed chain needs N >= 1", N=N)
    if t0 == 0.0:
        raise ModelError("build_probed_chain: t0 must be nonzero")
    if gamma_p < 0.0:
        raise ModelError("probe coupling gamma_p must be >= 0", gamma_p=gamma_p)
    hoppings = tuple((i, i + 1, complex(t0)) for i in range(N - 1))
    mu_mid = 0.5 * (mu_a + mu_b)
    reservoirs = [
        ReservoirAttachment(
            label="a",
            kind=SemiInfiniteChain(t0_lead=t0, contact_site=0, contact_amp=t0),
            temp=temp0,
            mu=mu_a,
        ),
        ReservoirAttachment(
            label="b",
            kind=SemiInfiniteChain(t0_lead=t0, contact_site=N - 1, contact_amp=t0),
            temp=temp0,
            mu=mu_b,
        ),
    ]
    for nidx in range(N):
        reservoirs.append(
            ReservoirAttachment(
                label=f"P{nidx + 1}",
                kind=WideBand(sites=(nidx,), gammas=(gamma_p,)),
                temp=temp0,
                mu=mu_mid,
            )
        )
    return DeviceModel(
        n_sites=N,
        onsite=(0.0,) * N,
        hoppings=hoppings,
        reservoirs=tuple(reservoirs),
    )


def loop_phase(model: DeviceModel) -> complex:
    """Product of bond phase factors around the ring cycle."""
    if model.flux is None or not model.flux.ring_cycle:
        raise ModelError("model has no ring cycle")
    h = model.hamiltonian()
    cyc = model.flux.ring_cycle
    prod = 1.0 + 0.0j
    for k in range(len(cyc)):
        amp = h[cyc[k], cyc[(k + 1) % len(cyc)]]
        prod *= amp / abs(amp)
    return prod
