"""Inference throughput benchmark on one hour of EEG.

Times the sliding-window pass (the headline number, excluding disk I/O) and
the preprocessing stage separately, and reports the real-time factor.
"""

from __future__ import annotations

import time
from contextlib import nullcontext

from .inference import sliding_infer, window_starts
from .model import ModelConfig, Params
from .preprocess import PreprocessConfig, preprocess_pipeline
from .recording import Recording


def _thread_limit(threads: int | None):
    if threads is None:
        return nullcontext()
    try:
        from threadpoolctl import threadpool_limits

        return threadpool_limits(limits=threads)
    except ImportError:
        return nullcontext()


def run_benchmark(
    rec: Recording,
    params: Params,
    cfg: ModelConfig,
    stride_s: int = 2,
    threads: int | None = None,
    batch_size: int = 96,
    preprocess_cfg: PreprocessConfig | None = None,
) -> dict:
    """Benchmark inference over `rec`; preprocesses first when `rec` is not
    already in the 18-channel 128 Hz montage."""
    preprocess_seconds = 0.0
    if not (rec.fs == 128.0 and rec.n_channels == cfg.n_channels):
        t0 = time.perf_counter()
        rec = preprocess_pipeline(rec, preprocess_cfg or PreprocessConfig())
        preprocess_seconds = time.perf_counter() - t0

    target_s = int(round(cfg.window.target_s))
    starts = window_starts(rec.duration_s, target_s, stride_s)

    with _thread_limit(threads):
        t0 = time.perf_counter()
        sliding_infer(rec, params, cfg, stride_s=stride_s, batch_size=batch_size)
        infer_seconds = time.perf_counter() - t0

    return {
        "duration_s": rec.duration_s,
        "windows": len(starts),
        "stride_s": stride_s,
        "threads": threads,
        "infer_seconds": round(infer_seconds, 3),
        "preprocess_seconds": round(preprocess_seconds, 3),
        "total_seconds": round(infer_seconds + preprocess_seconds, 3),
        "real_time_factor": round(rec.duration_s / infer_seconds, 2),
    }
