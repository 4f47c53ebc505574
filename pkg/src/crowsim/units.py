"""Physical constants and unit conversions used throughout the package.

Conventions: wavelengths in nm, device lengths in µm, temperatures in °C,
times in seconds unless a name says otherwise (``_ps`` suffixes), loss in dB.
"""

import numpy as np

C_VACUUM = 2.99792458e8  # m/s, exact

PS = 1e-12
NS = 1e-9


def wavelength_nm_to_angular(wavelength_nm):
    """Angular frequency (rad/s) of a vacuum wavelength given in nm."""
    return 2.0 * np.pi * C_VACUUM / (np.asarray(wavelength_nm) * 1e-9)


def angular_to_wavelength_nm(omega):
    """Vacuum wavelength (nm) of an angular frequency given in rad/s."""
    return 2.0 * np.pi * C_VACUUM / np.asarray(omega) * 1e9


def attenuation_db_to_transmission(loss_db: float) -> float:
    """Power transmission factor for a positive insertion loss in dB."""
    return 10.0 ** (-loss_db / 10.0)
