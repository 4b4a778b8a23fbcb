"""
Performance profiles over benchmark records.

Purpose: For each solver label s, p_s(tau) is the fraction of instances that
s solves within a factor tau of the fastest label on that instance. Times are
counted in whole units of ``resolution_ms`` with zero lifted to one unit;
unsolved runs count as infinitely slow and ties credit every tied label.
"""
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import ConfigError, MismatchedInstanceSetsError
from .records import BenchRecord

TAU_STEP = 0.5
DEFAULT_RESOLUTION_MS = 1000
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf")


@dataclass(frozen=True)
class ProfileTable:
    """``values[k, s]`` is p_s at ``taus[k]``; ``ratios[i, s]`` is the ratio on instance i."""
    labels: Tuple[str, ...]
    instances: Tuple[str, ...]
    taus: np.ndarray
    values: np.ndarray
    ratios: np.ndarray

    def p(self, label: str, tau: float) -> float:
        s = self.labels.index(label)
        return float(np.mean(self.ratios[:, s] <= tau))

    def series(self, label: str) -> List[float]:
        return [float(v) for v in self.values[:, self.labels.index(label)]]


def _group(records: Iterable[BenchRecord], by: str) -> Dict[str, Dict[str, BenchRecord]]:
    groups: Dict[str, Dict[str, BenchRecord]] = {}
    for r in records:
        per_label = groups.setdefault(r.label(by), {})
        if r.instance_id in per_label:
            raise MismatchedInstanceSetsError(f"{r.label(by)} has two records for instance {r.instance_id}")
        per_label[r.instance_id] = r
    return groups


def _check_sets(groups: Dict[str, Dict[str, BenchRecord]]) -> List[str]:
    reference_label = next(iter(groups))
    reference = set(groups[reference_label])
    for label, per_label in groups.items():
        ids = set(per_label)
        if ids != reference:
            missing = sorted(reference - ids)[:3]
            extra = sorted(ids - reference)[:3]
            raise MismatchedInstanceSetsError(
                f"{label} and {reference_label} cover different instances "
                f"(missing {missing or 'none'}, extra {extra or 'none'})")
    return sorted(reference)


def unit_times(records: Sequence[BenchRecord], resolution_ms: int = DEFAULT_RESOLUTION_MS) -> np.ndarray:
    """Solve times in whole resolution units (at least one), infinity when unsolved."""
    times = np.array([max(r.time_ms // resolution_ms, 1) for r in records], dtype=float)
    solved = np.array([r.solved for r in records], dtype=bool)
    return np.where(solved, times, np.inf)


def performance_profile(records: Iterable[BenchRecord], labels: Optional[Sequence[str]] = None,
                        by: str = "label", resolution_ms: int = DEFAULT_RESOLUTION_MS) -> ProfileTable:
    """
    Profile of the labels in ``labels`` (default: every label present).

    Labels are grouped by ``by`` (see BenchRecord.label) and must cover the
    same instances. The tau grid runs 1, 1.5, 2, ... up to the largest finite
    ratio, after which every p_s is constant.
    """
    if resolution_ms <= 0:
        raise ConfigError(f"resolution must be positive, got {resolution_ms}")
    groups = _group(records, by)
    if labels is not None:
        absent = [label for label in labels if label not in groups]
        if absent:
            raise MismatchedInstanceSetsError(f"no records for {', '.join(absent)}")
        groups = {label: groups[label] for label in labels}
    if not groups:
        raise ConfigError("no records to profile")
    instances = _check_sets(groups)
    names = tuple(groups)

    times = np.column_stack([unit_times([groups[s][i] for i in instances], resolution_ms) for s in names])
    best = times.min(axis=1, keepdims=True)
    with np.errstate(invalid="ignore"):
        ratios = np.where(np.isfinite(best), times / best, np.inf)
    finite = ratios[np.isfinite(ratios)]
    top = float(finite.max()) if finite.size else 1.0
    steps = int(np.ceil((top - 1.0) / TAU_STEP))
    taus = 1.0 + TAU_STEP * np.arange(steps + 1)
    values = (ratios[None, :, :] <= taus[:, None, None]).mean(axis=1)
    return ProfileTable(names, tuple(instances), taus, values, ratios)


def _fmt(x: float) -> str:
    return format(float(x), "g")


def emit_profile_csv(table: ProfileTable) -> str:
    lines = [",".join(("tau",) + table.labels)]
    for k, tau in enumerate(table.taus):
        lines.append(",".join([_fmt(tau)] + [_fmt(v) for v in table.values[k]]))
    return "\n".join(lines) + "\n"


def emit_svg(table: ProfileTable, width: int = 640, height: int = 400, margin: int = 48) -> str:
    """Step plot of every p_s over the tau grid, one polyline per label."""
    tau_max = float(table.taus[-1]) + TAU_STEP
    plot_w, plot_h = width - 2 * margin, height - 2 * margin

    def x(tau: float) -> float:
        return margin + plot_w * (tau - 1.0) / (tau_max - 1.0)

    def y(p: float) -> float:
        return margin + plot_h * (1.0 - p)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{margin}" y1="{y(0):.1f}" x2="{width - margin}" y2="{y(0):.1f}" stroke="black"/>',
        f'<line x1="{margin}" y1="{y(0):.1f}" x2="{margin}" y2="{y(1):.1f}" stroke="black"/>',
        f'<text x="{width / 2:.1f}" y="{height - 12}" text-anchor="middle" font-size="12">tau</text>',
        f'<text x="12" y="{height / 2:.1f}" font-size="12" transform="rotate(-90 12 {height / 2:.1f})">p(tau)</text>',
    ]
    for s, label in enumerate(table.labels):
        points = []
        previous = None
        for k, tau in enumerate(table.taus):
            p = float(table.values[k, s])
            if previous is not None:
                points.append(f"{x(tau):.1f},{y(previous):.1f}")
            points.append(f"{x(tau):.1f},{y(p):.1f}")
            previous = p
        points.append(f"{x(tau_max):.1f},{y(previous):.1f}")
        color = PALETTE[s % len(PALETTE)]
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{" ".join(points)}"/>')
        out.append(f'<text x="{width - margin + 4}" y="{margin + 14 * (s + 1)}" font-size="11" '
                   f'fill="{color}">{_escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
