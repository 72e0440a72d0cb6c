"""Adaptive energy integration over lead bands and Fermi windows.

Panels between user-supplied breakpoints are refined adaptively using a
nested Clenshaw-Curtis pair (17/33 points; the coarse nodes are a subset
of the fine ones, so each refinement level reuses every evaluation).
Panels that touch a declared band edge are integrated in the variable
u = sqrt(|eps - edge|), which removes the inverse-square-root behaviour
of lead self-energies there.

Integrands must be vectorized: f(eps_array) -> array of shape
(n_eps,) or (n_eps, k) for k simultaneous components. Results are summed
in panel order (sorted by position), so output is deterministic and
independent of the refinement history.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .errors import QuadratureError

_N_COARSE = 16   # coarse rule has _N_COARSE+1 nodes, fine rule 2*_N_COARSE+1


def _cc_weights(n: int) -> np.ndarray:
    """Clenshaw-Curtis weights for the n+1 nodes cos(k*pi/n), n even.

    Waldvogel's FFT construction (BIT 46, 195 (2006)).
    """
    idx = np.arange(1, n, 2)
    length = len(idx)
    m = n - length
    v0 = np.concatenate([2.0 / (idx * (idx - 2.0)), [1.0 / idx[-1]], np.zeros(m)])
    v2 = -v0[:-1] - v0[:0:-1]
    g0 = -np.ones(n)
    g0[length] += n
    g0[m] += n
    g = g0 / (n**2 - 1 + (n % 2))
    w = np.fft.ifft(v2 + g).real
    return np.concatenate([w, [w[0]]])


_W_FINE = _cc_weights(2 * _N_COARSE)
_W_COARSE = _cc_weights(_N_COARSE)
# nodes on [-1, 1], descending; coarse nodes are the even-index fine nodes
_X_FINE = np.cos(np.arange(2 * _N_COARSE + 1) * np.pi / (2 * _N_COARSE))


@dataclass(frozen=True)
class _Panel:
    """One integration panel, possibly in sqrt-transformed coordinates.

    For kind "linear" the panel covers [a, b] in energy directly. For
    kind "sqrt" it covers u in [a, b] with eps = edge + sign * u**2.
    """

    a: float
    b: float
    kind: str = "linear"
    edge: float = 0.0
    sign: float = 1.0

    def nodes_jacobian(self):
        mid = 0.5 * (self.a + self.b)
        half = 0.5 * (self.b - self.a)
        t = mid + half * _X_FINE
        if self.kind == "linear":
            return t, np.full_like(t, half)
        # keep eps representable off the edge; for integrable singularities
        # the transformed integrand f(edge +- u^2) * 2u has a finite u -> 0
        # limit, so nudging the u = 0 endpoint node is exact to O(clip)
        clip = np.sqrt(16.0 * np.finfo(float).eps * max(abs(self.edge), 1.0))
        u = np.maximum(t, clip)
        eps = self.edge + self.sign * u * u
        return eps, 2.0 * u * half

    def split(self):
        mid = 0.5 * (self.a + self.b)
        lo = _Panel(self.a, mid, self.kind, self.edge, self.sign)
        hi = _Panel(mid, self.b, self.kind, self.edge, self.sign)
        return lo, hi

    def too_narrow(self) -> bool:
        """Panels at representability scale cannot be refined further;
        their residual contribution is below double precision."""
        scale = max(abs(self.a), abs(self.b), abs(self.edge), 1.0)
        return (self.b - self.a) <= 1e-12 * scale

    def span(self):
        """Covered energy interval, for diagnostics."""
        if self.kind == "linear":
            return (self.a, self.b)
        e0 = self.edge + self.sign * self.a**2
        e1 = self.edge + self.sign * self.b**2
        return (min(e0, e1), max(e0, e1))


@dataclass
class EnergyGrid:
    """Panelization of the energy axis with refinement tolerances."""

    panels: list = field(default_factory=list)
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_panels: int = 4000

    @property
    def breakpoints(self) -> np.ndarray:
        pts = set()
        for p in self.panels:
            lo, hi = p.span()
            pts.add(lo)
            pts.add(hi)
        return np.array(sorted(pts))


def energy_grid(
    breakpoints,
    band_edges=(),
    pad: float = 0.0,
    rel_tol: float = 1e-9,
    abs_tol: float = 1e-12,
    max_panels: int = 4000,
) -> EnergyGrid:
    """Build a grid whose panel boundaries include every breakpoint.

    band_edges marks energies where lead self-energies have square-root
    behaviour; panels adjacent to them are created in sqrt coordinates.
    pad extends the window beyond the extreme breakpoints.
    """
    pts = sorted(set(float(x) for x in breakpoints) | set(float(e) for e in band_edges))
    if len(pts) < 2:
        raise QuadratureError("need at least two distinct breakpoints", points=pts)
    if pad > 0.0:
        pts = [pts[0] - pad] + pts + [pts[-1] + pad]
    edges = set(float(e) for e in band_edges)

    panels = []
    for a, b in zip(pts[:-1], pts[1:]):
        if b - a <= 0.0:
            continue
        if a in edges and b in edges:
            # split so each half anchors to its own edge
            mid = 0.5 * (a + b)
            panels.append(_Panel(0.0, np.sqrt(mid - a), "sqrt", edge=a, sign=+1.0))
            panels.append(_Panel(0.0, np.sqrt(b - mid), "sqrt", edge=b, sign=-1.0))
        elif a in edges:
            panels.append(_Panel(0.0, np.sqrt(b - a), "sqrt", edge=a, sign=+1.0))
        elif b in edges:
            panels.append(_Panel(0.0, np.sqrt(b - a), "sqrt", edge=b, sign=-1.0))
        else:
            panels.append(_Panel(a, b))
    return EnergyGrid(panels=panels, rel_tol=rel_tol, abs_tol=abs_tol,
                      max_panels=max_panels)


def _eval_panel(f, panel):
    eps, jac = panel.nodes_jacobian()
    vals = np.asarray(f(eps), dtype=float)
    if vals.ndim == 1:
        vals = vals[:, None]
    fine = (_W_FINE[:, None] * jac[:, None] * vals).sum(axis=0)
    coarse = (_W_COARSE[:, None] * jac[::2, None] * vals[::2]).sum(axis=0)
    return fine, np.abs(fine - coarse)


def integrate(f, grid: EnergyGrid):
    """Adaptively integrate f over the grid.

    Returns (value, error_estimate); arrays of shape (k,) for
    vector-valued integrands, scalars otherwise.
    """
    entries = []   # (panel, value, err) keyed by heap of worst error
    heap = []      # (-score, seq, index into entries)
    seq = 0
    for p in grid.panels:
        val, err = _eval_panel(f, p)
        entries.append([p, val, err])
        heapq.heappush(heap, (-float(err.max()), seq, seq))
        seq += 1

    scalar = entries[0][1].size == 1
    while True:
        total = np.sum([e[1] for e in entries], axis=0)
        toterr = np.sum([e[2] for e in entries], axis=0)
        goal = np.maximum(grid.abs_tol, grid.rel_tol * np.abs(total))
        if np.all(toterr <= goal):
            break
        if not heap or len(entries) >= grid.max_panels:
            worst = max((e for e in entries if e[0] is not None),
                        key=lambda e: float(e[2].max()), default=None)
            raise QuadratureError(
                "no convergence within panel budget",
                worst_panel=worst[0].span() if worst else None,
                error=float(worst[2].max()) if worst else 0.0,
                budget=grid.max_panels,
            )
        while heap:
            _, _, idx = heapq.heappop(heap)
            panel, val, err = entries[idx]
            if panel is not None:
                break
        else:
            continue
        if panel.too_narrow():
            # width at representability scale: keep the value, treat the
            # residual estimate as converged
            entries[idx][2] = np.zeros_like(err)
            continue
        children = [(child, *_eval_panel(f, child)) for child in panel.split()]
        child_err = float(np.sum([c[2] for c in children], axis=0).max())
        if (child_err >= 0.95 * float(err.max())
                and float(err.max()) <= 10.0 * grid.abs_tol):
            # tiny error that refinement no longer improves: the panel is
            # at the round-off noise floor, accept it; larger stagnating
            # errors keep refining (an unresolved feature looks like this
            # until the panels reach its width)
            entries[idx][2] = np.zeros_like(err)
            continue
        entries[idx][0] = None
        entries[idx][1] = np.zeros_like(val)
        entries[idx][2] = np.zeros_like(err)
        for child, cval, cerr in children:
            entries.append([child, cval, cerr])
            heapq.heappush(heap, (-float(cerr.max()), seq, len(entries) - 1))
            seq += 1

    live = [(e[0].span()[0], e[0].span()[1], e[1], e[2])
            for e in entries if e[0] is not None]
    live.sort(key=lambda item: (item[0], item[1]))
    value = np.sum([item[2] for item in live], axis=0)
    error = np.sum([item[3] for item in live], axis=0)
    if scalar:
        return float(value[0]), float(error[0])
    return value, error


def fermi_window(mu_values, temps, width: float = 40.0):
    """Breakpoints covering every reservoir Fermi edge out to width*kB*T."""
    mus = np.atleast_1d(np.asarray(mu_values, dtype=float))
    ts = np.broadcast_to(np.atleast_1d(np.asarray(temps, dtype=float)), mus.shape)
    pts = []
    for m, t in zip(mus, ts):
        pts.extend([m - width * t, m, m + width * t])
    return pts
