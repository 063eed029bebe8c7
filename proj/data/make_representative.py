#!/usr/bin/env python3
"""Regenerates the representative normative gait curves under data/.

Hand-picked knots follow the published normative shapes for level walking
(heel-strike at 0 %, toe-off near 63 %). A shape-preserving (PCHIP)
interpolant through the knots is smoothed into a periodic curve by a
least-squares fit of an 8-harmonic Fourier series, the usual compact
representation of averaged gait data. The curves are representative, not a
digitization of any specific subject; body mass is fixed at 75 kg.
"""
import numpy as np
from scipy.interpolate import PchipInterpolator

MASS_KG = 75.0
N = 1001

# (percent gait cycle, dorsiflexion-positive angle [deg], plantarflexor-positive moment [N·m/kg])
ANKLE_ANGLE = [(0, 0.0), (7, -5.0), (15, -1.0), (30, 6.0), (43, 10.0), (50, 7.0),
               (57, -3.0), (64.5, -18.0), (70, -12.0), (78, -2.0), (87, 1.0),
               (95, 0.5), (100, 0.0)]
ANKLE_MOMENT = [(0, 0.0), (4, -0.15), (10, 0.05), (20, 0.45), (30, 0.80),
                (40, 1.15), (48, 1.50), (52, 1.45), (57, 0.90), (62, 0.15),
                (66, 0.0), (100, 0.0)]

# (percent gait cycle, flexion-positive angle [deg], extensor-positive moment [N·m/kg])
KNEE_ANGLE = [(0, 3.0), (6, 10.0), (15, 18.0), (28, 10.0), (40, 4.5), (48, 7.0),
              (55, 18.0), (62, 38.0), (73, 62.0), (85, 35.0), (95, 2.0), (100, 3.0)]
KNEE_MOMENT = [(0, 0.0), (3, -0.2), (12, 0.75), (15, 0.6), (25, 0.1), (40, -0.30),
               (50, -0.15), (56, 0.10), (62, 0.05), (75, -0.05), (90, -0.25), (100, 0.0)]


HARMONICS = 8


def curve(knots, pct):
    x, y = zip(*knots)
    dense = np.linspace(0.0, 100.0, 4001)
    raw = PchipInterpolator(x, y)(dense)
    w = 2.0 * np.pi * dense / 100.0
    basis = [np.ones_like(w)]
    for h in range(1, HARMONICS + 1):
        basis += [np.cos(h * w), np.sin(h * w)]
    coef, *_ = np.linalg.lstsq(np.stack(basis, axis=1), raw, rcond=None)
    w = 2.0 * np.pi * pct / 100.0
    out = coef[0] * np.ones_like(w)
    for h in range(1, HARMONICS + 1):
        out += coef[2 * h - 1] * np.cos(h * w) + coef[2 * h] * np.sin(h * w)
    return out


def write(path, angle_knots, moment_knots, header_note):
    pct = np.linspace(0.0, 100.0, N)
    angle = np.deg2rad(curve(angle_knots, pct))
    torque = curve(moment_knots, pct) * MASS_KG
    with open(path, "w") as f:
        f.write("# " + header_note + "\n")
        f.write("phase_pct,angle_rad,torque_nm\n")
        for p, a, t in zip(pct, angle, torque):
            f.write(f"{p:.1f},{a:.9f},{t:.9f}\n")


if __name__ == "__main__":
    write("ankle_representative.csv", ANKLE_ANGLE, ANKLE_MOMENT,
          "representative normative ankle curve (75 kg); angle dorsiflexion+; torque plantarflexor+")
    write("knee_representative.csv", KNEE_ANGLE, KNEE_MOMENT,
          "representative normative knee curve (75 kg); angle flexion+; torque extensor+")
