"""Self-consistent floating thermoelectric probes on a biased chain.

Each probe must draw zero particle and zero energy current, which fixes
its chemical potential and temperature. The 2N conditions are solved by
a damped Newton iteration in the unknowns (mu_P, log T_P): transmissions
depend only on the device and couplings, so they are tabulated once on a
fixed quadrature grid and every Newton step just re-weights them with
fresh Fermi factors. Jacobian entries are the corresponding
Onsager-type integrals with df/dmu and df/dlogT weights.

Currents follow the transport-module conventions: residuals are the
currents from each probe INTO the device, (1/h) sum_beta T_nb (f_n -
f_b); entropy currents are reported INTO each reservoir.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fermi
from .errors import ModelError, SolverError
from .greens import surface_g
from .model import DeviceModel, SemiInfiniteChain, WideBand

ONE_OVER_H = 1.0 / (2.0 * np.pi)


@dataclass(frozen=True)
class ChainSetup:
    """Parameters of the probed chain extracted from a DeviceModel."""

    n_probes: int
    t0: float
    gamma_p: float
    temp0: float
    mu_a: float
    mu_b: float


def chain_setup(model: DeviceModel) -> ChainSetup:
    leads = [r for r in model.reservoirs if isinstance(r.kind, SemiInfiniteChain)]
    probes = [r for r in model.reservoirs if isinstance(r.kind, WideBand)]
    if len(leads) != 2 or not probes:
        raise ModelError("probe solver expects two chain leads and N probes")
    gammas = {p.kind.gammas[0] for p in probes}
    if len(gammas) != 1:
        raise ModelError("probe couplings must be uniform")
    a, b = leads
    if a.temp != b.temp:
        raise ModelError("source and drain must share a temperature")
    return ChainSetup(
        n_probes=len(probes),
        t0=a.kind.t0_lead,
        gamma_p=gammas.pop(),
        temp0=a.temp,
        mu_a=a.mu,
        mu_b=b.mu,
    )


@dataclass
class ProbeGrid:
    """Energy nodes, weights and tabulated transmissions.

    t_pp[k, n, m] is the probe-to-probe transmission at node k; t_pa and
    t_pb couple probes to the leads, t_ab the leads to each other.
    """

    setup: ChainSetup
    eps: np.ndarray
    w: np.ndarray
    t_pp: np.ndarray
    t_pa: np.ndarray
    t_pb: np.ndarray
    t_ab: np.ndarray
    temp_hi: float

    @property
    def row_sums(self) -> np.ndarray:
        """sum_beta T_{P_n beta} at each node (leads plus other probes)."""
        return self.t_pa + self.t_pb + self.t_pp.sum(axis=2) - np.einsum(
            "knn->kn", self.t_pp
        )


def _gl_panels(lo: float, hi: float, fine_lo: float, fine_hi: float,
               fine_width: float, grow: float = 1.7, order: int = 16):
    """Composite Gauss-Legendre nodes: uniform panels over the Fermi
    window, geometrically growing panels on the tails."""
    pts = [fine_lo]
    n_fine = max(4, int(np.ceil((fine_hi - fine_lo) / fine_width)))
    pts.extend(np.linspace(fine_lo, fine_hi, n_fine + 1)[1:].tolist())
    width = fine_width * grow
    x = fine_hi
    while x < hi:
        x = min(x + width, hi)
        pts.append(x)
        width *= grow
    width = fine_width * grow
    x = fine_lo
    head = []
    while x > lo:
        x = max(x - width, lo)
        head.append(x)
        width *= grow
    pts = head[::-1] + pts
    xg, wg = np.polynomial.legendre.leggauss(order)
    eps, w = [], []
    for a, b in zip(pts[:-1], pts[1:]):
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        eps.append(mid + half * xg)
        w.append(half * wg)
    return np.concatenate(eps), np.concatenate(w)


def build_probe_grid(model: DeviceModel, temp_hi: float | None = None) -> ProbeGrid:
    """Tabulate transmissions on a grid resolving every Fermi edge.

    temp_hi bounds the hottest probe temperature the grid must resolve;
    the default allows Joule heating up to the bias scale.
    """
    su = chain_setup(model)
    n = su.n_probes
    if temp_hi is None:
        temp_hi = su.temp0 + 0.75 * abs(su.mu_a - su.mu_b) + 4.0 * su.temp0
    mu_lo, mu_hi = min(su.mu_a, su.mu_b), max(su.mu_a, su.mu_b)
    band = 2.0 * abs(su.t0)
    lo = max(mu_lo - 45.0 * temp_hi, -band * (1 - 1e-9))
    hi = min(mu_hi + 45.0 * temp_hi, band * (1 - 1e-9))
    eps, w = _gl_panels(lo, hi, mu_lo - 10.0 * su.temp0, mu_hi + 10.0 * su.temp0,
                        fine_width=4.0 * su.temp0)

    h = model.hamiltonian().real
    gam_lead = -2.0 * np.imag(su.t0**2 * surface_g(eps, su.t0))
    mats = -np.broadcast_to(h, (eps.size, n, n)).astype(complex).copy()
    idx = np.arange(n)
    sig = np.zeros((eps.size, n), dtype=complex)
    sig[:, 0] += su.t0**2 * surface_g(eps, su.t0)
    sig[:, n - 1] += su.t0**2 * surface_g(eps, su.t0)
    sig -= 0.5j * su.gamma_p
    mats[:, idx, idx] += eps[:, None] - sig
    g = np.linalg.inv(mats)
    absg2 = np.abs(g) ** 2
    t_pp = su.gamma_p**2 * absg2
    t_pa = su.gamma_p * gam_lead[:, None] * absg2[:, :, 0]
    t_pb = su.gamma_p * gam_lead[:, None] * absg2[:, :, n - 1]
    t_ab = gam_lead**2 * absg2[:, 0, n - 1]
    return ProbeGrid(setup=su, eps=eps, w=w, t_pp=t_pp, t_pa=t_pa, t_pb=t_pb,
                     t_ab=t_ab, temp_hi=temp_hi)


@dataclass
class ProbeState:
    """Floating-probe potentials and temperatures plus solve diagnostics."""

    mu_p: np.ndarray
    temp_p: np.ndarray
    residual_norm: float
    iterations: int
    converged: bool
    homotopy_stages_used: int = 0


def _residual_jacobian(grid: ProbeGrid, mu_p, temp_p, want_jacobian=True):
    su = grid.setup
    eps, w = grid.eps, grid.w
    f_a = fermi.occupation(eps, su.mu_a, su.temp0)
    f_b = fermi.occupation(eps, su.mu_b, su.temp0)
    f_p = fermi.occupation(eps[:, None], mu_p[None, :], temp_p[None, :])
    # current from probe n into the device, nu = 0 and 1
    drive = (grid.t_pa * (f_p - f_a[:, None])
             + grid.t_pb * (f_p - f_b[:, None])
             + np.einsum("knm,kn->kn", grid.t_pp, f_p)
             - np.einsum("knm,km->kn", grid.t_pp, f_p))
    r0 = ONE_OVER_H * np.einsum("k,kn->n", w, drive)
    r1 = ONE_OVER_H * np.einsum("k,k,kn->n", w, eps, drive)
    res = np.concatenate([r0, r1])
    if not want_jacobian:
        return res, None
    x = (eps[:, None] - mu_p[None, :]) / temp_p[None, :]
    fp_prod = f_p * fermi.occupation(-x * temp_p[None, :], 0.0, temp_p[None, :])
    dmu = fp_prod / temp_p[None, :]            # df/dmu
    dlt = fp_prod * x                          # df/dlogT
    rows = grid.row_sums
    n = su.n_probes
    jac = np.empty((2 * n, 2 * n))
    for nu in (0, 1):
        we = w * eps**nu
        off_mu = -ONE_OVER_H * np.einsum("k,knm,km->nm", we, grid.t_pp, dmu)
        off_lt = -ONE_OVER_H * np.einsum("k,knm,km->nm", we, grid.t_pp, dlt)
        diag_mu = ONE_OVER_H * np.einsum("k,kn,kn->n", we, rows, dmu)
        diag_lt = ONE_OVER_H * np.einsum("k,kn,kn->n", we, rows, dlt)
        off_mu[np.arange(n), np.arange(n)] = diag_mu
        off_lt[np.arange(n), np.arange(n)] = diag_lt
        jac[nu * n:(nu + 1) * n, :n] = off_mu
        jac[nu * n:(nu + 1) * n, n:] = off_lt
    return res, jac


def _newton(grid: ProbeGrid, mu0, lt0, tol, max_iter, max_backtrack=30):
    mu_p = mu0.copy()
    log_t = lt0.copy()
    res, jac = _residual_jacobian(grid, mu_p, np.exp(log_t))
    norm = np.abs(res).max()
    for it in range(1, max_iter + 1):
        if norm < tol:
            return mu_p, log_t, norm, it - 1, True
        try:
            step = np.linalg.solve(jac, -res)
        except np.linalg.LinAlgError:
            return mu_p, log_t, norm, it - 1, False
        scale = 1.0
        sq0 = float(res @ res)
        for _ in range(max_backtrack):
            mu_try = mu_p + scale * step[: len(mu_p)]
            lt_try = log_t + scale * step[len(mu_p):]
            res_try, jac_try = _residual_jacobian(grid, mu_try, np.exp(lt_try))
            if float(res_try @ res_try) < sq0 or np.abs(res_try).max() < tol:
                mu_p, log_t, res, jac = mu_try, lt_try, res_try, jac_try
                norm = np.abs(res).max()
                break
            scale *= 0.5
        else:
            return mu_p, log_t, norm, it, False
    return mu_p, log_t, norm, max_iter, norm < tol


def solve_floating(
    model: DeviceModel,
    tol: float = 1e-10,
    max_iter: int = 60,
    homotopy_stages: int = 4,
    grid: ProbeGrid | None = None,
    init: ProbeState | None = None,
) -> ProbeState:
    """Find probe potentials/temperatures with zero particle and energy
    currents at every probe.

    Starts from a linear potential drop at the lead temperature; if the
    direct Newton solve stalls, the bias is ramped up in homotopy stages
    from equilibrium. Raises SolverError (carrying the best state) when
    both fail.
    """
    su = chain_setup(model)
    n = su.n_probes
    if su.gamma_p == 0.0:
        # decoupled probes carry no current for any assignment
        return ProbeState(
            mu_p=np.full(n, 0.5 * (su.mu_a + su.mu_b)),
            temp_p=np.full(n, su.temp0),
            residual_norm=0.0,
            iterations=0,
            converged=True,
        )
    if grid is None:
        grid = build_probe_grid(model)
    if init is not None:
        mu0 = init.mu_p.copy()
        lt0 = np.log(init.temp_p)
    else:
        frac = (np.arange(n) + 1.0) / (n + 1.0)
        mu0 = su.mu_a + (su.mu_b - su.mu_a) * frac
        lt0 = np.full(n, np.log(su.temp0))

    mu_p, log_t, norm, iters, ok = _newton(grid, mu0, lt0, tol, max_iter)
    stages_used = 0
    if not ok:
        # homotopy in the bias from equilibrium
        mu_mid = 0.5 * (su.mu_a + su.mu_b)
        mu_p = np.full(n, mu_mid)
        log_t = np.full(n, np.log(su.temp0))
        total_iters = iters
        for k in range(1, homotopy_stages + 1):
            lam = k / homotopy_stages
            sub = ChainSetup(
                n_probes=n, t0=su.t0, gamma_p=su.gamma_p, temp0=su.temp0,
                mu_a=mu_mid + lam * (su.mu_a - mu_mid),
                mu_b=mu_mid + lam * (su.mu_b - mu_mid),
            )
            sub_grid = ProbeGrid(setup=sub, eps=grid.eps, w=grid.w,
                                 t_pp=grid.t_pp, t_pa=grid.t_pa,
                                 t_pb=grid.t_pb, t_ab=grid.t_ab,
                                 temp_hi=grid.temp_hi)
            mu_p, log_t, norm, iters, ok = _newton(sub_grid, mu_p, log_t, tol, max_iter)
            total_iters += iters
            stages_used = k
            if not ok:
                break
        iters = total_iters
    temp_p = np.exp(log_t)
    if not np.all(np.isfinite(temp_p)) or np.any(temp_p <= 0.0):
        raise SolverError(
            "probe temperatures left the physical domain",
            state=ProbeState(mu_p, temp_p, norm, iters, False, stages_used),
        )
    state = ProbeState(mu_p=mu_p, temp_p=temp_p, residual_norm=float(norm),
                       iterations=iters, converged=bool(ok),
                       homotopy_stages_used=stages_used)
    if not ok:
        raise SolverError(
            "floating conditions did not converge", state=state,
            residual=float(norm), tol=tol,
        )
    if temp_p.max() > 0.8 * grid.temp_hi:
        # grid did not resolve this much probe heating; widen and redo
        wider = build_probe_grid(model, temp_hi=2.5 * grid.temp_hi)
        return solve_floating(model, tol, max_iter, homotopy_stages,
                              grid=wider, init=state)
    return state


def probe_currents(grid: ProbeGrid, state: ProbeState):
    """Diagnostics at a solved state: lead currents, entropy flows, and
    the entropy-production summary."""
    su = grid.setup
    eps, w = grid.eps, grid.w
    f_a = fermi.occupation(eps, su.mu_a, su.temp0)
    f_b = fermi.occupation(eps, su.mu_b, su.temp0)
    f_p = fermi.occupation(eps[:, None], state.mu_p[None, :], state.temp_p[None, :])
    s_a = fermi.entropy_per_state(eps, su.mu_a, su.temp0)
    s_b = fermi.entropy_per_state(eps, su.mu_b, su.temp0)
    s_p = fermi.entropy_per_state(eps[:, None], state.mu_p[None, :],
                                  state.temp_p[None, :])

    # into-device currents of lead a, nu = 0, 1
    drive_a = (grid.t_ab * (f_a - f_b)
               + np.einsum("kn,kn->k", grid.t_pa, f_a[:, None] - f_p))
    i_a0 = ONE_OVER_H * float(w @ drive_a)
    i_a1 = ONE_OVER_H * float((w * eps) @ drive_a)
    drive_b = (grid.t_ab * (f_b - f_a)
               + np.einsum("kn,kn->k", grid.t_pb, f_b[:, None] - f_p))
    i_b0 = ONE_OVER_H * float(w @ drive_b)
    i_b1 = ONE_OVER_H * float((w * eps) @ drive_b)
    # residual probe currents (into device)
    drive_p = (grid.t_pa * (f_p - f_a[:, None])
               + grid.t_pb * (f_p - f_b[:, None])
               + np.einsum("knm,kn->kn", grid.t_pp, f_p)
               - np.einsum("knm,km->kn", grid.t_pp, f_p))
    i_p0 = ONE_OVER_H * np.einsum("k,kn->n", w, drive_p)
    i_p1 = ONE_OVER_H * np.einsum("k,k,kn->n", w, eps, drive_p)

    # entropy currents INTO each reservoir
    ent_p = (grid.t_pa * (s_a[:, None] - s_p)
             + grid.t_pb * (s_b[:, None] - s_p)
             + np.einsum("knm,km->kn", grid.t_pp, s_p)
             - np.einsum("knm,kn->kn", grid.t_pp, s_p))
    i_s_p = ONE_OVER_H * np.einsum("k,kn->n", w, ent_p)
    ent_a = (grid.t_ab * (s_b - s_a)
             + np.einsum("kn,kn->k", grid.t_pa, s_p - s_a[:, None]))
    i_s_a = ONE_OVER_H * float(w @ ent_a)
    ent_b = (grid.t_ab * (s_a - s_b)
             + np.einsum("kn,kn->k", grid.t_pb, s_p - s_b[:, None]))
    i_s_b = ONE_OVER_H * float(w @ ent_b)

    s_dot_p = -float(i_s_p.sum())
    # Joule rate P/T0 with I_1 the particle current into the source lead
    p_over_t0 = (-i_a0) * (su.mu_b - su.mu_a) / su.temp0
    return {
        "i_a": (i_a0, i_a1),
        "i_b": (i_b0, i_b1),
        "i_p0": i_p0,
        "i_p1": i_p1,
        "i_s_probes": i_s_p,
        "i_s_a": i_s_a,
        "i_s_b": i_s_b,
        "s_dot_p": s_dot_p,
        "p_over_t0": p_over_t0,
        "ratio": s_dot_p / p_over_t0 if p_over_t0 != 0.0 else np.nan,
        "conservation_n": i_a0 + i_b0 + float(i_p0.sum()),
        "conservation_e": i_a1 + i_b1 + float(i_p1.sum()),
    }
