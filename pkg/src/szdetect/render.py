"""SVG timeline of model predictions versus reference seizures.

One horizontal lane per patient; a patient's recordings are laid end to end
and stretched to the plot width. Reference seizures are drawn green when
detected and orange when missed; false predictions are black; the detected
hypothesis extent is highlighted above the lane. Only rect, line, and text
elements are emitted.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .recording import Event

DETECTED = "#2e9e4f"
MISSED = "#e08a2e"
FALSE = "#111111"
HIGHLIGHT = "#9fd8ae"

_LANE_H = 34
_PLOT_W = 960
_MARGIN_L = 90
_MARGIN_R = 20
_MARGIN_T = 24


@dataclass
class RenderRow:
    recording_id: str
    patient_id: str
    duration_s: float
    hyp_events: list[Event]
    ref_events: list[Event]


def _overlaps(a_lo, a_hi, b_lo, b_hi) -> bool:
    return a_lo < b_hi and b_lo < a_hi


def render_timeline(
    rows: list[RenderRow],
    out_path: str | Path,
    pre_s: float = 30.0,
    post_s: float = 60.0,
    min_mark_px: float = 2.0,
) -> None:
    """Write the timeline SVG; matching uses the event-scoring tolerances."""
    patients: dict[str, list[RenderRow]] = {}
    for row in rows:
        patients.setdefault(row.patient_id, []).append(row)
    lanes = sorted(patients)

    height = _MARGIN_T + _LANE_H * len(lanes) + 10
    width = _MARGIN_L + _PLOT_W + _MARGIN_R
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
        f'<text x="{_MARGIN_L}" y="14" font-family="sans-serif" font-size="11" '
        f'fill="#333">detected (green) / missed (orange) / false prediction (black)</text>',
    ]

    for lane_i, pid in enumerate(lanes):
        y0 = _MARGIN_T + lane_i * _LANE_H
        y_mid = y0 + _LANE_H // 2
        recs = sorted(patients[pid], key=lambda r: r.recording_id)
        total = sum(r.duration_s for r in recs)
        scale = _PLOT_W / max(total, 1e-9)
        parts.append(
            f'<text x="6" y="{y_mid + 4}" font-family="sans-serif" font-size="12" '
            f'fill="#000">{pid}</text>'
        )
        parts.append(
            f'<line x1="{_MARGIN_L}" y1="{y_mid}" x2="{_MARGIN_L + _PLOT_W}" y2="{y_mid}" '
            f'stroke="#cccccc" stroke-width="1"/>'
        )
        offset = 0.0
        for rec in recs:
            x_of = lambda t: _MARGIN_L + (offset + t) * scale  # noqa: E731
            w_of = lambda a, b: max((b - a) * scale, min_mark_px)  # noqa: E731
            for ref in rec.ref_events:
                hit = any(
                    _overlaps(h.onset_s, h.end_s, ref.onset_s - pre_s, ref.end_s + post_s)
                    for h in rec.hyp_events
                )
                color = DETECTED if hit else MISSED
                parts.append(
                    f'<rect x="{x_of(ref.onset_s):.2f}" y="{y_mid - 7}" '
                    f'width="{w_of(ref.onset_s, ref.end_s):.2f}" height="14" fill="{color}"/>'
                )
            for hyp in rec.hyp_events:
                hit = any(
                    _overlaps(hyp.onset_s, hyp.end_s, r.onset_s - pre_s, r.end_s + post_s)
                    for r in rec.ref_events
                )
                if hit:  # highlight the predicted extent above the lane
                    parts.append(
                        f'<rect x="{x_of(hyp.onset_s):.2f}" y="{y_mid - 13}" '
                        f'width="{w_of(hyp.onset_s, hyp.end_s):.2f}" height="5" '
                        f'fill="{HIGHLIGHT}"/>'
                    )
                else:
                    parts.append(
                        f'<rect x="{x_of(hyp.onset_s):.2f}" y="{y_mid - 5}" '
                        f'width="{w_of(hyp.onset_s, hyp.end_s):.2f}" height="10" fill="{FALSE}"/>'
                    )
            # recording boundary tick
            offset += rec.duration_s
            parts.append(
                f'<line x1="{_MARGIN_L + offset * scale:.2f}" y1="{y0 + 4}" '
                f'x2="{_MARGIN_L + offset * scale:.2f}" y2="{y0 + _LANE_H - 4}" '
                f'stroke="#eeeeee" stroke-width="1"/>'
            )
    parts.append("</svg>")
    Path(out_path).write_text("\n".join(parts), encoding="utf-8")
