"""Fixed CODATA constants used by the micromagnetic solver."""

from dataclasses import dataclass

from scipy import constants as _c


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = _c.hbar
    mu0: float = _c.mu_0
    e_charge: float = _c.e
    mu_B: float = _c.physical_constants["Bohr magneton"][0]

    @property
    def gamma(self):
        """Electron gyromagnetic ratio 2*mu_B*mu0/hbar, in m/(A s) (fields in A/m)."""
        return 2.0 * self.mu_B * self.mu0 / self.hbar


CONSTANTS = PhysicalConstants()
