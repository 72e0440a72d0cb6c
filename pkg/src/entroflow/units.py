"""Physical constants and unit handling.

The engine works in natural units: hbar = kB = 1, with all energies measured
in a single reference energy unit (eV or a dimensionless hopping scale).
Temperatures inside the engine are therefore thermal energies kB*T.
Currents carry a 1/h = 1/(2*pi) prefactor in these units; energy-like
currents come out in energy_unit/h and entropy currents in kB/h.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError

#: Boltzmann constant in eV per kelvin (CODATA 2018, exact).
KB_EV = 8.617333262e-5

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class UnitSystem:
    """Reference units for configs; immutable, safe to share."""

    energy_unit: str        # "eV" or "t0"
    kB: float               # Boltzmann constant in energy_unit per kelvin
    hbar: float = 1.0
    h: float = TWO_PI
    flux_quantum: float = 1.0   # flux is always measured in units of phi0

    @classmethod
    def electron_volt(cls) -> "UnitSystem":
        return cls(energy_unit="eV", kB=KB_EV)

    @classmethod
    def natural(cls) -> "UnitSystem":
        """Dimensionless t0-units: kB absorbed into the temperature."""
        return cls(energy_unit="t0", kB=1.0)

    @classmethod
    def from_config(cls, energy: str) -> "UnitSystem":
        if energy == "eV":
            return cls.electron_volt()
        if energy == "t0":
            return cls.natural()
        raise ConfigError("unknown energy unit", key="units.energy", value=energy)

    def thermal_energy(self, temperature_kelvin: float) -> float:
        """kB*T in energy units; inverse of :meth:`kelvin`."""
        return self.kB * temperature_kelvin

    def kelvin(self, thermal_energy: float) -> float:
        return thermal_energy / self.kB

    def to_natural(self, value: float, unit: str) -> float:
        """Convert a config quantity to engine units.

        Supported unit tags: "eV", "K", "phi0", "dimensionless".
        """
        if unit == "eV":
            if self.energy_unit != "eV":
                raise ConfigError(
                    "eV value given but units.energy is not eV", key="units.energy"
                )
            return value
        if unit == "K":
            if self.energy_unit != "eV":
                raise ConfigError(
                    "kelvin temperatures need units.energy = eV", key="units.energy"
                )
            return self.thermal_energy(value)
        if unit in ("phi0", "dimensionless"):
            return value
        raise ConfigError("unknown unit tag", key="units", value=unit)
