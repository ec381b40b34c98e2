"""Detection masks and precision/recall evaluation per splice size.

Pixels are pooled across all images of a size stratum before the threshold
sweep, so each stratum yields one curve and one area.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from argus_forge.image import Image
from argus_forge.masked_models.checkpoint import dumps_json

MAX_THRESHOLDS = 4096


class UndefinedRecall(ValueError):
    pass


def detect(info_map: np.ndarray, threshold: float) -> np.ndarray:
    """Binary mask of pixels whose information strictly exceeds ``threshold``."""
    return np.asarray(info_map) > threshold


@dataclass
class PRCurve:
    thresholds: np.ndarray
    precision: np.ndarray
    recall: np.ndarray
    auc: float
    prevalence: float

    @property
    def points(self) -> list[tuple[float, float, float]]:
        return list(zip(self.thresholds.tolist(), self.precision.tolist(), self.recall.tolist()))

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["threshold", "precision", "recall"])
            for t, p, r in self.points:
                w.writerow([repr(float(t)), repr(float(p)), repr(float(r))])


def _threshold_grid(scores: np.ndarray, max_thresholds: int) -> np.ndarray:
    uniq = np.unique(scores)
    if uniq.size > max_thresholds:
        idx = np.unique(np.rint(np.linspace(0, uniq.size - 1, max_thresholds)).astype(np.int64))
        uniq = uniq[idx]
    return np.concatenate([uniq[::-1], [-np.inf]])


def pr_curve(
    pairs: Iterable[tuple[np.ndarray, np.ndarray]],
    max_thresholds: int = MAX_THRESHOLDS,
) -> PRCurve:
    """Pooled precision/recall curve of ``(score map, ground-truth mask)`` pairs.

    Thresholds run from the highest pooled score down to ``-inf``, where every
    pixel is flagged. Precision is 1 at a threshold that flags nothing. The
    area is the trapezoidal integral over recall of the operating points that
    flag at least one pixel; the curve starts at recall 0 with the precision
    of its first such point.
    """
    scores, labels = [], []
    for m, gt in pairs:
        m, gt = np.asarray(m, dtype=np.float64), np.asarray(gt, dtype=bool)
        if m.shape != gt.shape:
            raise ValueError(f"map shape {m.shape} != mask shape {gt.shape}")
        scores.append(m.ravel())
        labels.append(gt.ravel())
    if not scores:
        raise UndefinedRecall("no maps given")
    s = np.concatenate(scores)
    y = np.concatenate(labels)
    if not np.all(np.isfinite(s)):
        raise ValueError("score maps must be finite")
    n_pos = int(y.sum())
    if n_pos == 0:
        raise UndefinedRecall("ground truth has no positive pixels; recall is undefined")

    order = np.argsort(s, kind="stable")
    s_sorted = s[order]
    cum_pos = np.concatenate([[0], np.cumsum(y[order])])
    thresholds = _threshold_grid(s, max_thresholds)
    below = np.searchsorted(s_sorted, thresholds, side="right")
    flagged = s.size - below
    tp = n_pos - cum_pos[below]
    with np.errstate(invalid="ignore", divide="ignore"):
        precision = np.where(flagged > 0, tp / np.maximum(flagged, 1), 1.0)
    recall = tp / n_pos

    live = flagged > 0
    xs = np.concatenate([[0.0], recall[live]])
    ys = np.concatenate([[precision[live][0]], precision[live]])
    auc = float(np.clip(np.trapezoid(ys, xs), 0.0, 1.0))
    return PRCurve(thresholds, precision, recall, auc, n_pos / s.size)


@dataclass
class SizeReport:
    per_size: dict[int, float]
    curves: dict[int, PRCurve] = field(default_factory=dict, repr=False)
    counts: dict[int, int] = field(default_factory=dict)
    prevalence: dict[int, float] = field(default_factory=dict)
    label: str = "Generative Ensemble"

    @property
    def average(self) -> float:
        if not self.per_size:
            return float("nan")
        return float(np.mean([self.per_size[s] for s in sorted(self.per_size)]))

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "auc": {str(s): self.per_size[s] for s in sorted(self.per_size)},
            "average": self.average,
            "counts": {str(s): self.counts[s] for s in sorted(self.counts)},
            "prevalence": {str(s): self.prevalence[s] for s in sorted(self.prevalence)},
        }

    def to_table(self) -> str:
        """Plain-text table: one row, AUC in percent per size plus the average."""
        sizes = sorted(self.per_size)
        head = ["Method"] + [f"P/R_{s}" for s in sizes] + ["Average"]
        row = [self.label] + [f"{100 * self.per_size[s]:.1f}" for s in sizes] + [f"{100 * self.average:.1f}"]
        widths = [max(len(a), len(b)) for a, b in zip(head, row)]
        fmt = lambda cells: "  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(cells, widths)))
        rule = "-" * len(fmt(head))
        return "\n".join([fmt(head), rule, fmt(row)]) + "\n"

    def write(self, out_dir: str | Path, plot: bool = True) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_bytes(dumps_json(self.to_dict()))
        (out / "report.txt").write_text(self.to_table())
        for s, curve in sorted(self.curves.items()):
            curve.write_csv(out / f"pr_{s}.csv")
        if plot and self.curves:
            plot_curves(self.curves, out / "pr_curves.png")


def plot_curves(curves: dict[int, PRCurve], path: str | Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 4), dpi=100)
    for s, c in sorted(curves.items()):
        ax.plot(c.recall, c.precision, label=f"{s}x{s}  AUC {100 * c.auc:.1f}")
    ax.set_xlabel("recall")
    ax.set_ylabel("precision")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1.02)
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="png", metadata={"Software": None})
    plt.close(fig)


def evaluate_maps(
    records: Sequence[tuple[int, np.ndarray, np.ndarray]],
    sizes: Sequence[int] | None = None,
    label: str = "Generative Ensemble",
) -> SizeReport:
    """Report from ``(object_size, score map, mask)`` triples.

    Sizes listed in ``sizes`` without records are left out of the report
    (and the average) with a warning.
    """
    by_size: dict[int, list] = {}
    for size, m, gt in records:
        by_size.setdefault(int(size), []).append((m, gt))
    wanted = sorted(set(sizes or []) | set(by_size))
    report = SizeReport({}, label=label)
    for s in wanted:
        if s not in by_size:
            warnings.warn(f"no test records of size {s}; stratum omitted from the report")
            continue
        curve = pr_curve(by_size[s])
        report.per_size[s] = curve.auc
        report.curves[s] = curve
        report.counts[s] = len(by_size[s])
        report.prevalence[s] = curve.prevalence
    return report


def evaluate_by_size(
    manifest,
    map_fn: Callable[[dict, Image], np.ndarray],
    label: str = "Generative Ensemble",
) -> SizeReport:
    """Evaluate every spliced test record of ``manifest``.

    ``map_fn(entry, image)`` returns the score map of one record, e.g. an
    ensemble information map or a map read from disk.
    """
    records = []
    for entry in manifest.test:
        if entry.get("object_size") is None:
            continue
        image = manifest.load_image(entry)
        records.append((entry["object_size"], map_fn(entry, image), manifest.load_mask(entry)))
    return evaluate_maps(records, manifest.sizes(), label)


def ensemble_map_fn(spec, jobs: int = 1):
    """``map_fn`` computing ensemble information maps for :func:`evaluate_by_size`."""
    from argus_forge.ensemble import ensemble_information_map

    return lambda entry, image: ensemble_information_map(spec, image, jobs)


def load_report(path: str | Path) -> dict:
    return json.loads(Path(path).read_text())
