"""Collocation sets."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, Sequence, Tuple

import numpy as np

SPACINGS = ("linear", "logarithmic")


@dataclass(frozen=True)
class SampleSpec:
    label: str
    intervals: Tuple[Tuple[float, float], ...]
    count: int
    spacing: str = "linear"

    def __post_init__(self):
        object.__setattr__(self, "intervals", tuple((float(lo), float(hi)) for lo, hi in self.intervals))


@dataclass(frozen=True)
class SampleSet:
    label: str
    intervals: Tuple[Tuple[float, float], ...]
    count: int
    spacing: str
    points: np.ndarray = field(repr=False, compare=False)

    def __len__(self) -> int:
        return self.count


def allocate_counts(lengths: Sequence[float], total: int) -> list:
    """Largest-remainder split of ``total`` proportional to ``lengths``; ties go left."""
    lengths = np.asarray(lengths, dtype=np.float64)
    share = total * lengths / lengths.sum()
    counts = np.floor(share).astype(int)
    rem = share - counts
    order = sorted(range(len(lengths)), key=lambda i: (-round(rem[i], 12), i))
    for i in order[: total - counts.sum()]:
        counts[i] += 1
    return [int(c) for c in counts]


def generate_samples(spec: SampleSpec) -> SampleSet:
    if spec.spacing not in SPACINGS:
        raise ValueError(f"unknown spacing {spec.spacing!r}")
    if not spec.intervals:
        raise ValueError(f"sample set {spec.label} has no intervals")
    prev_hi = -np.inf
    for lo, hi in spec.intervals:
        if not hi > lo:
            raise ValueError(f"sample set {spec.label}: interval [{lo}, {hi}] is empty")
        if lo <= prev_hi:
            raise ValueError(f"sample set {spec.label}: intervals overlap or are unsorted")
        if spec.spacing == "logarithmic" and lo <= 0:
            raise ValueError(f"sample set {spec.label}: logarithmic spacing needs lo > 0, got {lo}")
        prev_hi = hi
    if spec.count < 2 * len(spec.intervals):
        raise ValueError(f"sample set {spec.label}: need at least two points per interval")

    if spec.spacing == "linear":
        lengths = [hi - lo for lo, hi in spec.intervals]
    else:
        lengths = [np.log(hi / lo) for lo, hi in spec.intervals]
    # Every interval owns its two endpoints; only the interior points are
    # split by length, which keeps the spacing close to uniform across intervals.
    k = len(spec.intervals)
    counts = [g + 2 for g in allocate_counts(lengths, spec.count - 2 * k)] if k > 1 else [spec.count]
    grid = np.linspace if spec.spacing == "linear" else np.geomspace
    pieces = []
    for (lo, hi), n in zip(spec.intervals, counts):
        pts = grid(lo, hi, n)
        pts[0], pts[-1] = lo, hi
        pieces.append(pts)
    points = np.concatenate(pieces)
    return SampleSet(spec.label, spec.intervals, spec.count, spec.spacing, points)


def write_samples_csv(path, sets: Iterable[SampleSet]) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label", "point"])
        for s in sets:
            for x in s.points:
                w.writerow([s.label, f"{x:.17g}"])


def read_samples_csv(path) -> Dict[str, np.ndarray]:
    out: Dict[str, list] = {}
    with open(Path(path), newline="") as fh:
        for row in csv.DictReader(fh):
            out.setdefault(row["label"], []).append(float(row["point"]))
    return {k: np.array(v) for k, v in out.items()}
