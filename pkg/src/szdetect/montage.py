"""Longitudinal bipolar montage: imputation of missing electrodes and
referential-to-bipolar conversion.

The 18 derivations run down the standard front-to-back chains. Missing
montage electrodes are filled with the mean of their two spatially nearest
electrodes, looked up in a table frozen from unit-sphere 10-20 coordinates
(regenerate with tools/build_neighbor_table.py).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import MissingElectrode, Unrecoverable
from .recording import Recording

# the 18 longitudinal bipolar derivations, chain order
DERIVATIONS: tuple[tuple[str, str], ...] = (
    ("Fp2", "F4"), ("F4", "C4"), ("C4", "P4"), ("P4", "O2"),
    ("Fp1", "F3"), ("F3", "C3"), ("C3", "P3"), ("P3", "O1"),
    ("Fp2", "F8"), ("F8", "T4"), ("T4", "T6"), ("T6", "O2"),
    ("Fp1", "F7"), ("F7", "T3"), ("T3", "T5"), ("T5", "O1"),
    ("Fz", "Cz"), ("Cz", "Pz"),
)

MONTAGE_ELECTRODES: tuple[str, ...] = (
    "Fp1", "Fp2", "F3", "F4", "C3", "C4", "P3", "P4", "O1", "O2",
    "F7", "F8", "T3", "T4", "T5", "T6", "Fz", "Cz", "Pz",
)

# Unit-sphere positions built from the 10-20 construction: the 10% head ring,
# the sagittal midline arc, and spherical midpoints for the parasagittal row.
# x = right ear, y = nasion, z = vertex.
COORDINATES: dict[str, tuple[float, float, float]] = {
    "Fp1": (-0.309017, +0.951057, +0.000000),
    "Fp2": (+0.309017, +0.951057, +0.000000),
    "F3": (-0.493176, +0.716627, +0.493176),
    "F4": (+0.493176, +0.716627, +0.493176),
    "C3": (-0.707107, +0.000000, +0.707107),
    "C4": (+0.707107, +0.000000, +0.707107),
    "P3": (-0.493176, -0.716627, +0.493176),
    "P4": (+0.493176, -0.716627, +0.493176),
    "O1": (-0.309017, -0.951057, +0.000000),
    "O2": (+0.309017, -0.951057, +0.000000),
    "F7": (-0.809017, +0.587785, +0.000000),
    "F8": (+0.809017, +0.587785, +0.000000),
    "T3": (-1.000000, +0.000000, +0.000000),
    "T4": (+1.000000, +0.000000, +0.000000),
    "T5": (-0.809017, -0.587785, +0.000000),
    "T6": (+0.809017, -0.587785, +0.000000),
    "Fz": (+0.000000, +0.587785, +0.809017),
    "Cz": (+0.000000, +0.000000, +1.000000),
    "Pz": (+0.000000, -0.587785, +0.809017),
}

# electrode -> (nearest, second nearest) among the montage electrodes;
# distances rounded to 1e-5 (above the 6-decimal coordinate quantization,
# far below real gaps) so the construction's exact geometric ties resolve
# by MONTAGE_ELECTRODES order
NEIGHBORS: dict[str, tuple[str, str]] = {
    "Fp1": ("F3", "Fp2"),
    "Fp2": ("F4", "Fp1"),
    "F3": ("Fp1", "F7"),
    "F4": ("Fp2", "F8"),
    "C3": ("T3", "Cz"),
    "C4": ("T4", "Cz"),
    "P3": ("O1", "T5"),
    "P4": ("O2", "T6"),
    "O1": ("P3", "O2"),
    "O2": ("P4", "O1"),
    "F7": ("F3", "Fp1"),
    "F8": ("F4", "Fp2"),
    "T3": ("F7", "T5"),
    "T4": ("F8", "T6"),
    "T5": ("P3", "O1"),
    "T6": ("P4", "O2"),
    "Fz": ("F3", "F4"),
    "Cz": ("Fz", "Pz"),
    "Pz": ("P3", "P4"),
}


def compute_neighbor_table(
    coords: dict[str, tuple[float, float, float]] | None = None,
    order: tuple[str, ...] = MONTAGE_ELECTRODES,
) -> dict[str, tuple[str, str]]:
    """Recompute the (nearest, second-nearest) table from coordinates.

    This is the generator behind the frozen NEIGHBORS literal; tests compare
    it against an independent brute-force pass.
    """
    coords = coords or COORDINATES
    table = {}
    for e in order:
        p = np.array(coords[e])
        ranked = sorted(
            (round(float(np.linalg.norm(p - np.array(coords[o]))), 5), i, o)
            for i, o in enumerate(order)
            if o != e
        )
        table[e] = (ranked[0][2], ranked[1][2])
    return table


@dataclass(frozen=True)
class MontageSpec:
    """The 18 bipolar derivations and the imputation neighbor table."""

    derivations: tuple[tuple[str, str], ...] = DERIVATIONS
    nearest_neighbors: dict[str, tuple[str, str]] = field(default_factory=lambda: dict(NEIGHBORS))

    def electrodes(self) -> tuple[str, ...]:
        seen: list[str] = []
        for a, b in self.derivations:
            for e in (a, b):
                if e not in seen:
                    seen.append(e)
        return tuple(seen)

    def derivation_labels(self) -> list[str]:
        return [f"{a}-{b}" for a, b in self.derivations]


def impute_missing(rec: Recording, spec: MontageSpec | None = None) -> Recording:
    """Fill montage electrodes absent from `rec` with their neighbor mean.

    Each missing electrode becomes the elementwise mean of its two nearest
    electrodes from the table; both must be present in the recording.
    Present channels are returned untouched.

    Raises:
        Unrecoverable: a missing electrode's nearest neighbors are missing too.
    """
    spec = spec or MontageSpec()
    have = set(rec.channel_labels)
    needed = [e for e in spec.electrodes() if e not in have]
    if not needed:
        return rec

    labels = list(rec.channel_labels)
    rows = [rec.samples]
    for e in needed:
        n1, n2 = spec.nearest_neighbors[e]
        if n1 not in have or n2 not in have:
            raise Unrecoverable(
                f"cannot impute {e}: nearest neighbors {n1}/{n2} not recorded"
            )
        rows.append(0.5 * (rec.channel(n1) + rec.channel(n2))[None, :])
        labels.append(e)
    return Recording(
        id=rec.id,
        patient_id=rec.patient_id,
        channel_labels=labels,
        fs=rec.fs,
        samples=np.concatenate(rows, axis=0),
    )


def to_bipolar(rec: Recording, spec: MontageSpec | None = None) -> Recording:
    """Convert a referential recording to the 18-channel bipolar montage.

    Output channel i is anode_i - cathode_i samplewise, in derivation order.

    Raises:
        MissingElectrode: a derivation electrode is absent (impute first).
    """
    spec = spec or MontageSpec()
    missing = [e for e in spec.electrodes() if e not in rec.channel_labels]
    if missing:
        raise MissingElectrode(f"electrodes missing from recording: {missing}")
    index = {label: i for i, label in enumerate(rec.channel_labels)}
    anodes = [index[a] for a, _ in spec.derivations]
    cathodes = [index[b] for _, b in spec.derivations]
    samples = rec.samples[anodes] - rec.samples[cathodes]
    return Recording(
        id=rec.id,
        patient_id=rec.patient_id,
        channel_labels=spec.derivation_labels(),
        fs=rec.fs,
        samples=samples,
    )
