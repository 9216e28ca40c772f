"""EEG seizure detection with context-window transformers.

Core namespaces: recording/edf (ingestion), montage/filters/preprocess
(standardization), windowing (segments and the balanced sampler), model
(the classifier with analytic gradients), training, inference (sliding
windows, overlap averaging, ensembling), scoring, and synth (synthetic
corpora for end-to-end verification).
"""

__version__ = "0.1.0"

from .inference import (
    EventList,
    ProbabilityTrace,
    binarize_and_extract,
    ensemble,
    run_ensemble_configs,
    sliding_infer,
)
from .model import ConvSpec, ModelConfig, backward, forward, grad_check, init_params, param_count
from .montage import DERIVATIONS, MontageSpec, impute_missing, to_bipolar
from .preprocess import PreprocessConfig, preprocess_pipeline
from .recording import AnnotationSet, Event, Recording, read_annotations, read_raw, write_raw
from .scoring import ScoreReport, aggregate, score_events, score_recording, score_samples
from .synth import SyntheticSpec, generate_corpus
from .training import TrainConfig, train_run
from .windowing import Segment, WindowSpec, extract_segment, label_target

__all__ = [
    "AnnotationSet",
    "ConvSpec",
    "DERIVATIONS",
    "Event",
    "EventList",
    "ModelConfig",
    "MontageSpec",
    "PreprocessConfig",
    "ProbabilityTrace",
    "Recording",
    "ScoreReport",
    "Segment",
    "SyntheticSpec",
    "TrainConfig",
    "WindowSpec",
    "aggregate",
    "backward",
    "binarize_and_extract",
    "ensemble",
    "extract_segment",
    "forward",
    "generate_corpus",
    "grad_check",
    "impute_missing",
    "init_params",
    "label_target",
    "param_count",
    "preprocess_pipeline",
    "read_annotations",
    "read_raw",
    "run_ensemble_configs",
    "score_events",
    "score_recording",
    "score_samples",
    "sliding_infer",
    "to_bipolar",
    "train_run",
    "write_raw",
]
