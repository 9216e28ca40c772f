import numpy as np
import pytest

from szdetect.errors import MissingElectrode, Unrecoverable
from szdetect.montage import (
    COORDINATES,
    DERIVATIONS,
    MONTAGE_ELECTRODES,
    NEIGHBORS,
    MontageSpec,
    compute_neighbor_table,
    impute_missing,
    to_bipolar,
)
from szdetect.recording import Recording

FOOTNOTE_ORDER = [
    ("Fp2", "F4"), ("F4", "C4"), ("C4", "P4"), ("P4", "O2"),
    ("Fp1", "F3"), ("F3", "C3"), ("C3", "P3"), ("P3", "O1"),
    ("Fp2", "F8"), ("F8", "T4"), ("T4", "T6"), ("T6", "O2"),
    ("Fp1", "F7"), ("F7", "T3"), ("T3", "T5"), ("T5", "O1"),
    ("Fz", "Cz"), ("Cz", "Pz"),
]


def make_referential(values: dict[str, float], n=64, fs=128.0, drop=()):
    labels = [e for e in MONTAGE_ELECTRODES if e not in drop]
    samples = np.stack([np.full(n, values.get(e, 0.0)) for e in labels])
    return Recording("m", "p", labels, fs, samples)


class TestSpecConstants:
    def test_exactly_18_pairs_in_order(self):
        assert DERIVATIONS == tuple(FOOTNOTE_ORDER)
        assert len(DERIVATIONS) == 18

    def test_coordinates_on_unit_sphere(self):
        for e, xyz in COORDINATES.items():
            assert np.linalg.norm(xyz) == pytest.approx(1.0, abs=1e-6), e

    def test_neighbor_table_matches_brute_force(self):
        # independent pass: pairwise distances + stable sort on (distance, index)
        order = MONTAGE_ELECTRODES
        pts = np.array([COORDINATES[e] for e in order])
        for i, e in enumerate(order):
            d = np.sqrt(((pts - pts[i]) ** 2).sum(axis=1))
            d[i] = np.inf
            ranked = sorted(range(len(order)), key=lambda j: (round(d[j], 5), j))
            assert NEIGHBORS[e] == (order[ranked[0]], order[ranked[1]]), e

    def test_frozen_table_matches_generator(self):
        assert compute_neighbor_table() == NEIGHBORS

    def test_never_self_neighbor(self):
        for e, (n1, n2) in NEIGHBORS.items():
            assert e not in (n1, n2)
            assert n1 != n2


class TestImputation:
    def test_no_missing_is_identity(self, rng):
        rec = Recording(
            "m", "p", list(MONTAGE_ELECTRODES), 128.0,
            rng.standard_normal((19, 64)),
        )
        out = impute_missing(rec)
        assert out is rec

    def test_missing_f4_mean_of_neighbors(self):
        n1, n2 = NEIGHBORS["F4"]
        rec = make_referential({n1: 2.0, n2: 4.0}, drop=("F4",))
        out = impute_missing(rec)
        assert np.allclose(out.channel("F4"), 3.0)

    def test_present_channels_untouched(self, rng):
        data = rng.standard_normal((18, 64))
        labels = [e for e in MONTAGE_ELECTRODES if e != "F4"]
        rec = Recording("m", "p", labels, 128.0, data)
        out = impute_missing(rec)
        for i, label in enumerate(labels):
            assert np.array_equal(out.channel(label), data[i])

    def test_unrecoverable_when_neighbors_missing(self):
        n1, n2 = NEIGHBORS["F4"]
        rec = make_referential({}, drop=("F4", n1, n2))
        with pytest.raises(Unrecoverable):
            impute_missing(rec)


class TestBipolar:
    def test_constant_difference(self):
        rec = make_referential({"Fp2": 5.0, "F4": 2.0})
        out = to_bipolar(rec)
        assert np.allclose(out.samples[0], 3.0)  # Fp2-F4 is the first derivation
        assert out.channel_labels[0] == "Fp2-F4"

    def test_common_mode_cancels(self, rng):
        common = rng.standard_normal(64)
        samples = np.tile(common, (19, 1))
        rec = Recording("m", "p", list(MONTAGE_ELECTRODES), 128.0, samples)
        out = to_bipolar(rec)
        assert np.max(np.abs(out.samples)) == 0.0

    def test_matches_subtraction_oracle(self, rng):
        rec = Recording(
            "m", "p", list(MONTAGE_ELECTRODES), 128.0, rng.standard_normal((19, 257))
        )
        out = to_bipolar(rec)
        for i, (a, b) in enumerate(DERIVATIONS):
            expected = np.empty(rec.n_samples)
            for s in range(rec.n_samples):  # explicit per-sample loop
                expected[s] = rec.channel(a)[s] - rec.channel(b)[s]
            assert np.array_equal(out.samples[i], expected)

    def test_antisymmetry(self, rng):
        rec = Recording(
            "m", "p", list(MONTAGE_ELECTRODES), 128.0, rng.standard_normal((19, 64))
        )
        spec = MontageSpec()
        flipped = MontageSpec(
            derivations=tuple((b, a) for a, b in spec.derivations),
            nearest_neighbors=spec.nearest_neighbors,
        )
        assert np.array_equal(to_bipolar(rec, spec).samples, -to_bipolar(rec, flipped).samples)

    def test_missing_electrode_raises(self):
        rec = make_referential({}, drop=("Cz",))
        with pytest.raises(MissingElectrode):
            to_bipolar(rec)

    def test_output_channel_count_and_order(self, rng):
        rec = Recording(
            "m", "p", list(MONTAGE_ELECTRODES), 128.0, rng.standard_normal((19, 64))
        )
        out = to_bipolar(rec)
        assert out.n_channels == 18
        assert out.channel_labels == [f"{a}-{b}" for a, b in FOOTNOTE_ORDER]
