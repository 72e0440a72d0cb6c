"""Quantum transport currents of particles, energy, entropy and free
energy in tight-binding open systems.

The package computes multi-terminal Landauer-Buttiker observables with
the free-energy channel that keeps entropy flow consistent with the
3rd Law, alongside the conventional bookkeeping for comparison: steady
bond-current fields on flux-threaded rings, quasi-static driving of a
resonant level, and self-consistent floating thermoelectric probes on a
biased wire.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    ConvergenceError,
    EntroflowError,
    ModelError,
    QuadratureError,
    SingularityError,
    SolverError,
)
from .model import (
    DeviceModel,
    FluxSpec,
    ReservoirAttachment,
    SemiInfiniteChain,
    WideBand,
    build_probed_chain,
    build_ring,
    build_rlm,
)
from .greens import (
    ChannelWeight,
    GreensState,
    assemble_greens,
    surface_g,
    weighted_matrix,
)
from .quadrature import EnergyGrid, energy_grid, integrate
from .transport import (
    TransmissionMatrix,
    entropy_current,
    joule_entropy_rate,
    probe_entropy_production,
    reservoir_current,
    transmission,
    transmission_matrix,
)
from .probes import ProbeState, build_probe_grid, probe_currents, solve_floating
from .ring import (
    BondCurrentField,
    EigenstateSet,
    bond_currents,
    divergence_check,
    dmu_entropy_current,
    eigenstate_entropy_current,
    eigenstate_set,
    total_circulating,
)
from .drive import DriveProtocol, DriveResult, omega_flow_rate, run_drive
from .oracle import (
    CorrelationMatrix,
    equilibrium_correlations,
    evolve_correlations,
    ramp_reservoir_deltas,
)
from .units import KB_EV, UnitSystem

__all__ = [
    "__version__",
    "KB_EV",
    "UnitSystem",
    "DeviceModel",
    "FluxSpec",
    "ReservoirAttachment",
    "SemiInfiniteChain",
    "WideBand",
    "build_rlm",
    "build_ring",
    "build_probed_chain",
    "GreensState",
    "ChannelWeight",
    "surface_g",
    "assemble_greens",
    "weighted_matrix",
    "EnergyGrid",
    "energy_grid",
    "integrate",
    "transmission",
    "transmission_matrix",
    "TransmissionMatrix",
    "reservoir_current",
    "entropy_current",
    "probe_entropy_production",
    "joule_entropy_rate",
    "ProbeState",
    "build_probe_grid",
    "solve_floating",
    "probe_currents",
    "BondCurrentField",
    "EigenstateSet",
    "bond_currents",
    "divergence_check",
    "eigenstate_set",
    "eigenstate_entropy_current",
    "dmu_entropy_current",
    "total_circulating",
    "DriveProtocol",
    "DriveResult",
    "omega_flow_rate",
    "run_drive",
    "CorrelationMatrix",
    "equilibrium_correlations",
    "evolve_correlations",
    "ramp_reservoir_deltas",
    "EntroflowError",
    "ConfigError",
    "ModelError",
    "SingularityError",
    "QuadratureError",
    "SolverError",
    "ConvergenceError",
]
