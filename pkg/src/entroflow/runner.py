"""Experiment orchestration and deterministic file emission.

Every run writes CSVs (17 significant digits, LF endings, UTF-8) plus a
manifest.json echoing the config; repeated runs of the same config on
the same platform produce byte-identical CSVs. Failures move whatever
was already written into a quarantine subdirectory so partial output is
never mistaken for a finished run.
"""

from __future__ import annotations

import json
import os
import shutil
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .drive import DriveProtocol, run_drive
from .errors import EntroflowError
from .model import build_probed_chain, build_ring
from .probes import build_probe_grid, probe_currents, solve_floating
from .ring import bond_currents, total_circulating
from .units import KB_EV


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")
    return path


def write_manifest(out_dir, config: ExperimentConfig, outputs, wall_time):
    path = os.path.join(out_dir, "manifest.json")
    payload = {
        "engine": "entroflow",
        "version": __version__,
        "experiment": config.experiment,
        "energy_unit": config.units.energy_unit,
        "config": config.raw,
        "outputs": [os.path.basename(p) for p in outputs],
        "wall_time_s": round(wall_time, 3),
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def parallel_map(fn, items, workers: int = 1):
    """Order-preserving map, optionally across processes."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# -- drive ------------------------------------------------------------

def _drive_point(args):
    cfg_tuple, temp = args
    (eps_start, eps_end, V, t0, mu, m_sites, m_max, conv_tol,
     rel_tol, abs_tol, max_panels) = cfg_tuple
    proto = DriveProtocol(eps_start, eps_end, V, t0, temp, mu,
                          m_sites=m_sites, m_max=m_max, conv_tol=conv_tol,
                          rel_tol=rel_tol, abs_tol=abs_tol,
                          max_panels=max_panels)
    res = run_drive(proto)
    return (temp, res.dE_R, res.dN_R, res.dOmega_R, res.dS_correct, res.dS_conv)


def _heat_point(args):
    cfg_tuple, temp, mu = args
    (eps_start, eps_end, V, t0, _, m_sites, m_max, conv_tol,
     rel_tol, abs_tol, max_panels) = cfg_tuple
    proto = DriveProtocol(eps_start, eps_end, V, t0, temp, mu,
                          m_sites=m_sites, m_max=m_max, conv_tol=conv_tol,
                          rel_tol=rel_tol, abs_tol=abs_tol,
                          max_panels=max_panels)
    res = run_drive(proto)
    return (temp, mu, res.q_diff)


def run_drive_experiment(config: ExperimentConfig, out_dir, workers=1):
    cfg_tuple = (config.eps_start, config.eps_end, config.V, config.t0,
                 config.mu, config.m_sites, config.m_max, config.conv_tol,
                 config.rel_tol, config.abs_tol, config.max_panels)
    rows = parallel_map(_drive_point, [(cfg_tuple, t) for t in config.temps],
                        workers)
    f1 = write_csv(
        os.path.join(out_dir, "drive_vs_T.csv"),
        ["T", "dE_R", "dN_R", "dOmega_R", "dS_correct", "dS_conv"],
        rows,
    )
    heat_items = [(cfg_tuple, t, mu) for mu in config.heat_mus
                  for t in config.heat_temps]
    heat_rows = parallel_map(_heat_point, heat_items, workers)
    f2 = write_csv(os.path.join(out_dir, "heat_diff.csv"),
                   ["T", "mu", "Q_diff"], heat_rows)
    return [f1, f2]


# -- ring -------------------------------------------------------------

def _ring_model(config: ExperimentConfig, temp):
    return build_ring(config.n, config.t_hop, config.flux,
                      config.surface_gamma, temp, config.mu)


def _ring_field(config: ExperimentConfig, temp):
    from .ring import ring_grid
    model = _ring_model(config, temp)
    grid = ring_grid(model, temp, config.mu, rel_tol=config.rel_tol,
                     abs_tol=config.abs_tol, max_panels=config.max_panels)
    return bond_currents(model, grid=grid)


def run_ring_experiment(config: ExperimentConfig, out_dir, workers=1):
    fld = _ring_field(config, config.temp)
    bond_rows = [
        (k, i, j, fld.j_n[k], fld.j_e[k], fld.j_omega[k], fld.j_s[k],
         fld.j_s_conv[k])
        for k, (i, j) in enumerate(fld.edges)
    ]
    f1 = write_csv(
        os.path.join(out_dir, "ring_bonds.csv"),
        ["bond_index", "site_i", "site_j", "j_n", "j_e", "j_omega", "j_s",
         "j_s_conv"],
        bond_rows,
    )
    rows = parallel_map(_RingPoint(config), config.temps, workers)
    f2 = write_csv(os.path.join(out_dir, "ring_total_vs_T.csv"),
                   ["T", "I_S_total", "I_S_conv_total"], rows)
    return [f1, f2]


class _RingPoint:
    """Picklable ring sweep worker."""

    def __init__(self, config):
        self.config = config

    def __call__(self, temp):
        fld = _ring_field(self.config, temp)
        i_s, _ = total_circulating(fld.j_s)
        i_c, _ = total_circulating(fld.j_s_conv)
        return (temp, i_s, i_c)


# -- probes -----------------------------------------------------------

class _SweepPoint:
    def __init__(self, config):
        self.c = config

    def __call__(self, item):
        n, gamma_p = item
        c = self.c
        model = build_probed_chain(n, c.t0, gamma_p, c.temp0,
                                   c.bias / 2.0, -c.bias / 2.0)
        grid = build_probe_grid(model)
        state = solve_floating(model, tol=c.probe_tol,
                               max_iter=c.probe_max_iter,
                               homotopy_stages=c.homotopy_stages, grid=grid)
        cur = probe_currents(grid, state)
        return (n, gamma_p, cur["s_dot_p"], cur["p_over_t0"], cur["ratio"])


def run_probes_experiment(config: ExperimentConfig, out_dir, workers=1):
    c = config
    # measured potential/temperature profile at the reference coupling
    model = build_probed_chain(c.profile_n, c.t0, c.profile_gamma, c.temp0,
                               c.bias / 2.0, -c.bias / 2.0)
    grid = build_probe_grid(model)
    state = solve_floating(model, tol=c.probe_tol, max_iter=c.probe_max_iter,
                           homotopy_stages=c.homotopy_stages, grid=grid)
    kelvin = (1.0 / KB_EV) if c.units.energy_unit == "eV" else 1.0
    prof_rows = [
        (n + 1, c.profile_gamma, state.mu_p[n], state.temp_p[n],
         state.temp_p[n] * kelvin)
        for n in range(c.profile_n)
    ]
    f1 = write_csv(
        os.path.join(out_dir, "probe_profile.csv"),
        ["n", "gamma_p", "mu_P", "T_P", "T_P_kelvin"],
        prof_rows,
    )
    items = [(n, g) for g in c.sweep_gamma for n in c.sweep_n]
    rows = parallel_map(_SweepPoint(c), items, workers)
    f2 = write_csv(os.path.join(out_dir, "crossover.csv"),
                   ["N", "gamma_p", "S_dot_P", "P_over_T0", "ratio"], rows)
    return [f1, f2]


_RUNNERS = {
    "drive": run_drive_experiment,
    "ring": run_ring_experiment,
    "probes": run_probes_experiment,
}


def run_experiment(config: ExperimentConfig, out_dir, workers=1,
                   plots=True):
    """Run one experiment end to end; returns the list of written files."""
    os.makedirs(out_dir, exist_ok=True)
    start = time.time()
    try:
        if config.experiment == "verify":
            from .verify import run_verify
            outputs, ok = run_verify(config, out_dir, workers=workers)
            if not ok:
                raise EntroflowError("verification suite failed")
        else:
            outputs = _RUNNERS[config.experiment](config, out_dir, workers)
    except Exception:
        _quarantine(out_dir)
        raise
    if plots:
        from . import plots as plot_mod
        outputs += plot_mod.render_experiment(config.experiment, out_dir)
    outputs.append(write_manifest(out_dir, config, outputs,
                                  time.time() - start))
    return outputs


def _quarantine(out_dir):
    names = [n for n in sorted(os.listdir(out_dir))
             if n.endswith(".csv") or n == "manifest.json"]
    if not names:
        return
    qdir = os.path.join(out_dir, "quarantine")
    os.makedirs(qdir, exist_ok=True)
    for name in names:
        shutil.move(os.path.join(out_dir, name), os.path.join(qdir, name))
