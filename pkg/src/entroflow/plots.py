"""Static figures rendered from the emitted CSVs.

Purely presentational: every plot is regenerated from the delimited
output, never from in-memory state, so figures always match the data
files sitting next to them. Vector output (SVG) only.
"""

from __future__ import annotations

import csv
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

plt.rcParams.update({
    "figure.figsize": (5.2, 3.6),
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "savefig.bbox": "tight",
})


def _read_csv(path):
    with open(path, "r", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(x) for x in row] for row in reader]
    cols = {name: np.array([r[k] for r in rows]) for k, name in enumerate(header)}
    return cols


def render_drive(out_dir):
    written = []
    path = os.path.join(out_dir, "drive_vs_T.csv")
    if os.path.exists(path):
        d = _read_csv(path)
        fig, ax = plt.subplots()
        ax.loglog(d["T"], np.abs(d["dS_correct"]), "o-", color="crimson",
                  label="corrected")
        ax.loglog(d["T"], np.abs(d["dS_conv"]), "s-", color="royalblue",
                  label="conventional")
        ax.set_xlabel("kB T (energy units)")
        ax.set_ylabel("|dS_R| (kB)")
        ax.set_title("Reservoir entropy change under quasi-static drive")
        ax.legend()
        out = os.path.join(out_dir, "drive_vs_T.svg")
        fig.savefig(out)
        plt.close(fig)
        written.append(out)
    path = os.path.join(out_dir, "heat_diff.csv")
    if os.path.exists(path):
        d = _read_csv(path)
        fig, ax = plt.subplots()
        for mu in sorted(set(d["mu"])):
            sel = d["mu"] == mu
            ax.semilogx(d["T"][sel], d["Q_diff"][sel], "o-",
                        label=f"mu = {mu:g}")
        ax.set_xlabel("kB T (energy units)")
        ax.set_ylabel("Q_conv - Q")
        ax.set_title("Conventional vs corrected heat")
        ax.legend()
        out = os.path.join(out_dir, "heat_diff.svg")
        fig.savefig(out)
        plt.close(fig)
        written.append(out)
    return written


def render_ring(out_dir):
    written = []
    path = os.path.join(out_dir, "ring_total_vs_T.csv")
    if os.path.exists(path):
        d = _read_csv(path)
        fig, ax = plt.subplots()
        ax.loglog(d["T"], np.abs(d["I_S_total"]), "o-", color="crimson",
                  label="corrected")
        ax.loglog(d["T"], np.abs(d["I_S_conv_total"]), "s-", color="royalblue",
                  label="conventional")
        ax.set_xlabel("kB T (energy units)")
        ax.set_ylabel("|circulating entropy current| (kB/h)")
        ax.set_title("Persistent entropy current vs temperature")
        ax.legend()
        out = os.path.join(out_dir, "ring_total_vs_T.svg")
        fig.savefig(out)
        plt.close(fig)
        written.append(out)
    path = os.path.join(out_dir, "ring_bonds.csv")
    if os.path.exists(path):
        d = _read_csv(path)
        fig, ax = plt.subplots()
        idx = d["bond_index"]
        for key, marker in (("j_n", "o"), ("j_e", "s"), ("j_omega", "^"),
                            ("j_s", "v"), ("j_s_conv", "x")):
            ax.plot(idx, d[key], marker + "-", label=key)
        ax.set_xlabel("bond index")
        ax.set_ylabel("bond current")
        ax.set_title("Ring bond currents by channel")
        ax.legend(ncol=2)
        out = os.path.join(out_dir, "ring_bonds.svg")
        fig.savefig(out)
        plt.close(fig)
        written.append(out)
    return written


def render_probes(out_dir):
    written = []
    path = os.path.join(out_dir, "probe_profile.csv")
    if os.path.exists(path):
        d = _read_csv(path)
        fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True,
                                       figsize=(5.2, 5.0))
        ax1.plot(d["n"], d["mu_P"], "o-", color="seagreen")
        ax1.set_ylabel("mu_P (energy units)")
        ax1.set_title("Floating-probe potentials and temperatures")
        ax2.plot(d["n"], d["T_P_kelvin"], "o-", color="darkorange")
        ax2.set_ylabel("T_P (K)")
        ax2.set_xlabel("probe index")
        out = os.path.join(out_dir, "probe_profile.svg")
        fig.savefig(out)
        plt.close(fig)
        written.append(out)
    path = os.path.join(out_dir, "crossover.csv")
    if os.path.exists(path):
        d = _read_csv(path)
        fig, ax = plt.subplots()
        for g in sorted(set(d["gamma_p"])):
            sel = d["gamma_p"] == g
            ax.semilogx(d["N"][sel], d["ratio"][sel], "o-",
                        label=f"gamma_p = {g:g}")
        ax.axhline(1.0, color="gray", lw=0.8, ls="--")
        ax.set_xlabel("number of probes N")
        ax.set_ylabel("S_dot_P / (P/T0)")
        ax.set_title("Measurement entropy vs Joule heating")
        ax.legend()
        out = os.path.join(out_dir, "crossover.svg")
        fig.savefig(out)
        plt.close(fig)
        written.append(out)
    return written


_RENDERERS = {
    "drive": render_drive,
    "ring": render_ring,
    "probes": render_probes,
}


def render_experiment(experiment, out_dir):
    if experiment == "verify":
        written = []
        for sub, fn in _RENDERERS.items():
            subdir = os.path.join(out_dir, sub)
            if os.path.isdir(subdir):
                written += fn(subdir)
        return written
    return _RENDERERS[experiment](out_dir)
