#!/usr/bin/env python3
"""Regenerate the frozen electrode coordinate and neighbor literals in
src/szdetect/montage.py.

Builds unit-sphere 10-20 positions from the construction rules (equatorial
10% ring, sagittal midline arc, spherical midpoints for F3/F4/P3/P4 and
C3/C4) and prints the COORDINATES and NEIGHBORS dictionaries. Distance ties
are broken by position in the montage electrode list.
"""

import numpy as np

ORDER = [
    "Fp1", "Fp2", "F3", "F4", "C3", "C4", "P3", "P4", "O1", "O2",
    "F7", "F8", "T3", "T4", "T5", "T6", "Fz", "Cz", "Pz",
]


def slerp_mid(a, b):
    m = a + b
    return m / np.linalg.norm(m)


def build_coords():
    coords = {}
    ring = {
        "Fp2": 18, "F8": 54, "T4": 90, "T6": 126, "O2": 162,
        "Fp1": -18, "F7": -54, "T3": -90, "T5": -126, "O1": -162,
    }
    for name, azimuth_deg in ring.items():
        a = np.deg2rad(azimuth_deg)
        coords[name] = np.array([np.sin(a), np.cos(a), 0.0])
    for name, arc_deg in {"Fz": 54, "Cz": 90, "Pz": 126}.items():
        r = np.deg2rad(arc_deg)
        coords[name] = np.array([0.0, np.cos(r), np.sin(r)])
    coords["C3"] = slerp_mid(coords["T3"], coords["Cz"])
    coords["C4"] = slerp_mid(coords["T4"], coords["Cz"])
    coords["F3"] = slerp_mid(coords["F7"], coords["Fz"])
    coords["F4"] = slerp_mid(coords["F8"], coords["Fz"])
    coords["P3"] = slerp_mid(coords["T5"], coords["Pz"])
    coords["P4"] = slerp_mid(coords["T6"], coords["Pz"])
    return coords


def main():
    coords = build_coords()
    print("COORDINATES = {")
    for e in ORDER:
        x, y, z = coords[e]
        print(f'    "{e}": ({x:+.6f}, {y:+.6f}, {z:+.6f}),')
    print("}")
    print()
    print("NEIGHBORS = {")
    for e in ORDER:
        ranked = sorted(
            (round(float(np.linalg.norm(coords[e] - coords[o])), 5), i, o)
            for i, o in enumerate(ORDER)
            if o != e
        )
        print(f'    "{e}": ("{ranked[0][2]}", "{ranked[1][2]}"),')
    print("}")


if __name__ == "__main__":
    main()
