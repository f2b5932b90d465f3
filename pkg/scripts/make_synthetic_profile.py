"""Generate the packaged SYNTHETIC Raman cross-section profile.

The shape is a silica-like Raman gain curve (sum of Gaussians, odd in the
frequency shift) weighted by phonon occupation: n + 1 on the Stokes side and
n on the anti-Stokes side. The absolute scale is arbitrary; link models
calibrate it against a measured operating point.

    python3 scripts/make_synthetic_profile.py src/qkdwdm/data/raman_synthetic_1550.csv
"""

import argparse

import numpy as np

from qkdwdm import units
from qkdwdm.config import RamanProfile, dump_raman_profile

PUMP_NM = 1550.0
TEMPERATURE_K = 293.0
# (centre THz, width THz, relative amplitude)
LINES = ((12.6, 2.6, 1.0), (14.6, 1.1, 0.35), (7.0, 2.5, 0.28), (3.0, 1.6, 0.05))
REFERENCE_NM = 1547.0  # anti-Stokes point used to set the overall scale
REFERENCE_RHO = 3.0e-9


def gain(shift_thz):
    s = np.asarray(shift_thz, dtype=float)
    g = np.zeros_like(s)
    for c, w, a in LINES:
        g += a * (np.exp(-((s - c) / w) ** 2) - np.exp(-((s + c) / w) ** 2))
    return g


def spontaneous(wavelength_nm):
    f_pump = units.wavelength_nm_to_hz(PUMP_NM)
    shift_hz = f_pump - units.wavelength_nm_to_hz(np.asarray(wavelength_nm))
    a = np.abs(shift_hz)
    n = 1.0 / np.expm1(units.H * a / (units.K_B * TEMPERATURE_K))
    occ = np.where(shift_hz > 0, n + 1.0, n)
    return gain(a / 1e12) * occ


def grid():
    fine = np.round(np.arange(1540.0, 1560.0 + 1e-9, 0.1), 1)
    fine = fine[np.abs(fine - PUMP_NM) > 0.05]
    coarse = np.arange(1400.0, 1761.0, 1.0)
    coarse = coarse[(coarse < 1540.0) | (coarse > 1560.0)]
    return np.unique(np.concatenate([coarse, fine]))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out")
    args = ap.parse_args()
    w = grid()
    rho = spontaneous(w)
    rho *= REFERENCE_RHO / spontaneous(REFERENCE_NM)
    profile = RamanProfile(PUMP_NM, TEMPERATURE_K, tuple(zip(w.tolist(), rho.tolist())))
    dump_raman_profile(profile, args.out, comments=(
        "SYNTHETIC effective Raman cross-section, not measured data.",
        "Shape: odd Gaussian gain lines times phonon occupation; scale is arbitrary.",
        "Generated by scripts/make_synthetic_profile.py",
    ))


if __name__ == "__main__":
    main()
