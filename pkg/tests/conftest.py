import numpy as np
import pytest

from szdetect.model import ConvSpec, ModelConfig
from szdetect.montage import MONTAGE_ELECTRODES
from szdetect.recording import Recording
from szdetect.windowing import WindowSpec


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_cfg():
    """Smallest config with meaningful structure, for gradient-level tests."""
    return ModelConfig(
        n_channels=3,
        patch_len=8,
        embed_dim=8,
        conv_spec=ConvSpec((3, 3), (2, 3)),
        n_encoder_layers=2,
        n_heads=2,
        ffn_dim=16,
        dropout_rate=0.0,
        cross_channel_heads=2,
        window=WindowSpec(0.25, 0.5, 0.25),
    )


@pytest.fixture
def small_cfg():
    """Whole-second windows so sliding inference applies; still quick."""
    return ModelConfig(
        n_channels=3,
        patch_len=64,
        embed_dim=16,
        conv_spec=ConvSpec((3, 3), (2, 2)),
        n_encoder_layers=1,
        n_heads=2,
        ffn_dim=32,
        dropout_rate=0.0,
        cross_channel_heads=2,
        window=WindowSpec(2.0, 8.0, 2.0),
    )


def make_recording(rng, n_channels=3, duration_s=30.0, fs=128.0, rec_id="rec0", patient="pat0"):
    n = int(round(duration_s * fs))
    labels = [f"ch{i}" for i in range(n_channels)]
    return Recording(rec_id, patient, labels, fs, rng.standard_normal((n_channels, n)))


def make_referential(rng, duration_s=30.0, fs=256.0, rec_id="ref0", patient="pat0"):
    n = int(round(duration_s * fs))
    return Recording(
        rec_id,
        patient,
        list(MONTAGE_ELECTRODES),
        fs,
        10.0 * rng.standard_normal((len(MONTAGE_ELECTRODES), n)),
    )
