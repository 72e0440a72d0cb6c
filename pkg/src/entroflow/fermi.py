"""Reservoir statistical weight functions and their derivatives.

All routines take the temperature as a thermal energy (kB*T in energy
units, kB = 1) and are vectorized over the energy argument. The forms
are overflow-safe for |eps - mu| / T up to ~1e4.

Channel weights are the scalar functions that multiply the reservoir
broadening when building weighted spectral matrices:

==========  =============================================
channel     weight w(eps)
==========  =============================================
``n``       f(eps)                   particle occupation
``e``       eps * f(eps)             energy-weighted
``omega``   T * ln p(eps)            free energy per state
``s``       -[f ln f + p ln p]       entropy per state
==========  =============================================

with p = 1 - f the hole occupation. They obey the pointwise identity
T*s = (eps - mu)*f - w_omega, which is what turns the energy/particle
bookkeeping of heat flow into an entropy flow consistent with the
3rd Law.
"""

from __future__ import annotations

import numpy as np

CHANNELS = ("n", "e", "omega", "s")


def _softplus(x):
    """log(1 + exp(x)) without overflow."""
    x = np.asarray(x, dtype=float)
    out = np.where(x > 36.0, x, np.log1p(np.exp(np.minimum(x, 36.0))))
    return out


def occupation(eps, mu, temp):
    """Fermi-Dirac occupation f(eps)."""
    x = (np.asarray(eps, dtype=float) - mu) / temp
    # sigmoid(-x), evaluated on the stable branch
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = np.exp(-x[pos]) / (1.0 + np.exp(-x[pos]))
    out[~pos] = 1.0 / (1.0 + np.exp(x[~pos]))
    return out


def hole_occupation(eps, mu, temp):
    """p = 1 - f, computed without cancellation."""
    return occupation(2.0 * mu - np.asarray(eps, dtype=float), mu, temp)


def log_hole_occupation(eps, mu, temp):
    """ln p(eps) = -ln(1 + exp(-(eps-mu)/T)), stable in both tails."""
    x = (np.asarray(eps, dtype=float) - mu) / temp
    return -_softplus(-x)


def grand_potential_per_state(eps, mu, temp):
    """Free energy per orbital, w(eps) = T ln p(eps) <= 0."""
    return temp * log_hole_occupation(eps, mu, temp)


def entropy_per_state(eps, mu, temp):
    """s(eps) = -[f ln f + p ln p] in units of kB; s >= 0."""
    x = (np.asarray(eps, dtype=float) - mu) / temp
    f = occupation(eps, mu, temp)
    p = hole_occupation(eps, mu, temp)
    # ln f = -softplus(x), ln p = -softplus(-x)
    return f * _softplus(x) + p * _softplus(-x)


def occupation_dmu(eps, mu, temp):
    """d f / d mu = f*p / T."""
    f = occupation(eps, mu, temp)
    p = hole_occupation(eps, mu, temp)
    return f * p / temp


def occupation_dtemp(eps, mu, temp):
    """d f / d T = f*p*(eps-mu) / T^2."""
    x = (np.asarray(eps, dtype=float) - mu) / temp
    f = occupation(eps, mu, temp)
    p = hole_occupation(eps, mu, temp)
    return f * p * x / temp


def channel_weight(channel, eps, mu, temp):
    """Weight function w(eps) for one of the four transport channels."""
    eps = np.asarray(eps, dtype=float)
    if channel == "n":
        return occupation(eps, mu, temp)
    if channel == "e":
        return eps * occupation(eps, mu, temp)
    if channel == "omega":
        return grand_potential_per_state(eps, mu, temp)
    if channel == "s":
        return entropy_per_state(eps, mu, temp)
    raise ValueError(f"unknown channel {channel!r}; expected one of {CHANNELS}")
