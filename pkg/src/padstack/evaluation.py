"""Biometric evaluation: ROC, AUC, EER with threshold, and HTER.

Score polarity is fixed project-wide: higher score = more attack-like, and
a sample is predicted "attack" when its score >= threshold. Under that rule

    FAR(t) = attacks accepted as live / total attacks   (score < t)
    FRR(t) = live rejected as attack / total live       (score >= t)

so FAR grows and FRR shrinks as the threshold rises. The cross-dataset
protocol picks the EER threshold on the pooled source test scores and
reports HTER/FAR/FRR plus AUC and the ROC on the unseen target set.

Empirical FAR/FRR are step functions with no exact crossing, so the EER
threshold minimizes |FAR - FRR| over midpoints between adjacent distinct
scores (plus one candidate below and above all scores), breaking ties
toward the smallest threshold; EER is (FAR + FRR) / 2 there.
"""

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import ensemble as ensemble_mod
from .errors import InvalidInputError

REPORT_FORMAT_VERSION = 1
ROC_TABLE_FORMAT_VERSION = 1


class ScoreEntry(NamedTuple):
    video_id: str
    score: float
    label: int      # 0 = live, 1 = attack


@dataclass
class ScoreSet:
    entries: list[ScoreEntry]
    provenance: str = ""

    def __post_init__(self):
        scores = np.array([e.score for e in self.entries], dtype=np.float64)
        if scores.size and not np.all(np.isfinite(scores)):
            raise InvalidInputError(f"score set {self.provenance!r} has non-finite scores")
        for e in self.entries:
            if e.label not in (0, 1):
                raise InvalidInputError(f"entry {e.video_id!r} has label {e.label}")

    def split(self):
        """(live scores, attack scores) as float64 arrays."""
        live = np.array([e.score for e in self.entries if e.label == 0], dtype=np.float64)
        attack = np.array([e.score for e in self.entries if e.label == 1], dtype=np.float64)
        return live, attack


def _require_both_classes(scores: ScoreSet):
    live, attack = scores.split()
    if live.size == 0 or attack.size == 0:
        raise InvalidInputError(
            f"score set {scores.provenance!r} needs both classes: "
            f"{live.size} live, {attack.size} attack"
        )
    return live, attack


@dataclass
class RocCurve:
    """Step-function ROC from a full threshold sweep, (0,0) through (1,1)."""

    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray


class HterMetrics(NamedTuple):
    far: float
    frr: float
    hter: float


def roc_curve(scores: ScoreSet) -> RocCurve:
    """Sweep all distinct scores as thresholds, ties grouped."""
    live, attack = _require_both_classes(scores)
    thresholds = np.unique(np.concatenate([live, attack]))[::-1]
    live_sorted = np.sort(live)
    attack_sorted = np.sort(attack)
    # counts of scores >= t, per class
    fpr = (live.size - np.searchsorted(live_sorted, thresholds, side="left")) / live.size
    tpr = (attack.size - np.searchsorted(attack_sorted, thresholds, side="left")) / attack.size
    fpr = np.concatenate([[0.0], fpr])
    tpr = np.concatenate([[0.0], tpr])
    thresholds = np.concatenate([[np.inf], thresholds])
    return RocCurve(fpr, tpr, thresholds)


def auc(curve: RocCurve) -> float:
    """Trapezoidal area under the ROC curve."""
    return float(np.trapezoid(curve.tpr, curve.fpr))


def far_frr(scores: ScoreSet, threshold: float) -> tuple[float, float]:
    """Error rates at one threshold under the attack-positive rule."""
    live, attack = _require_both_classes(scores)
    if not np.isfinite(threshold):
        raise InvalidInputError(f"threshold must be finite, got {threshold}")
    far = float(np.mean(attack < threshold))
    frr = float(np.mean(live >= threshold))
    return far, frr


def eer(scores: ScoreSet) -> tuple[float, float]:
    """(EER, threshold) minimizing |FAR - FRR|; smallest threshold on ties."""
    live, attack = _require_both_classes(scores)
    distinct = np.unique(np.concatenate([live, attack]))
    candidates = np.concatenate([
        [distinct[0] - 0.5],
        (distinct[:-1] + distinct[1:]) / 2.0,
        [distinct[-1] + 0.5],
    ])
    best_gap = np.inf
    best_threshold = candidates[0]
    best_rates = (0.0, 1.0)
    for t in candidates:
        far = float(np.mean(attack < t))
        frr = float(np.mean(live >= t))
        gap = abs(far - frr)
        if gap < best_gap:
            best_gap = gap
            best_threshold = float(t)
            best_rates = (far, frr)
    value = (best_rates[0] + best_rates[1]) / 2.0
    if value > 0.5:
        warnings.warn(
            f"degenerate score ordering in {scores.provenance!r}: "
            f"EER {value:.3f} exceeds 0.5 (scores rank attacks below live)",
            stacklevel=2,
        )
    return value, best_threshold


def hter(scores: ScoreSet, threshold: float) -> HterMetrics:
    """FAR, FRR, and their average at a fixed threshold."""
    far, frr = far_frr(scores, threshold)
    return HterMetrics(far, frr, (far + frr) / 2.0)


@dataclass
class EvalReport:
    """One protocol run: EER/threshold from source, HTER/AUC/ROC on target."""

    protocol: str
    eer: float
    eer_threshold: float
    far: float
    frr: float
    hter: float
    auc: float
    roc: RocCurve
    n_source: int = 0
    n_target: int = 0


def score_sequences(ens, seqs, provenance: str = "") -> ScoreSet:
    entries = [ScoreEntry(s.video_id, ensemble_mod.predict(ens, s), s.label)
               for s in seqs]
    return ScoreSet(entries, provenance)


def cross_dataset_eval(ens, source_test, target_test,
                       protocol_name: str = "") -> EvalReport:
    """EER threshold on pooled source test data, HTER/AUC/ROC on the target."""
    source_ids = {s.video_id for s in source_test}
    overlap = source_ids & {s.video_id for s in target_test}
    if overlap:
        raise InvalidInputError(
            f"source and target test sets overlap: {sorted(overlap)[:5]}"
        )
    source_scores = score_sequences(ens, source_test, "source-test")
    target_scores = score_sequences(ens, target_test, "target-test")
    eer_value, threshold = eer(source_scores)
    metrics = hter(target_scores, threshold)
    curve = roc_curve(target_scores)
    return EvalReport(
        protocol=protocol_name,
        eer=eer_value,
        eer_threshold=threshold,
        far=metrics.far,
        frr=metrics.frr,
        hter=metrics.hter,
        auc=auc(curve),
        roc=curve,
        n_source=len(source_test),
        n_target=len(target_test),
    )


def format_report(report: EvalReport) -> str:
    lines = [
        f"format_version: {REPORT_FORMAT_VERSION}",
        f"protocol: {report.protocol}",
        f"n_source_test: {report.n_source}",
        f"n_target_test: {report.n_target}",
        f"eer: {report.eer:.6f}",
        f"eer_threshold: {report.eer_threshold:.6f}",
        f"far: {report.far:.6f}",
        f"frr: {report.frr:.6f}",
        f"hter: {report.hter:.6f}",
        f"auc: {report.auc:.6f}",
    ]
    return "\n".join(lines) + "\n"


def write_report(report: EvalReport, path) -> None:
    with open(path, "w") as fh:
        fh.write(format_report(report))


def parse_report(path) -> dict:
    values = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            key, _, raw = line.partition(":")
            values[key.strip()] = raw.strip()
    return values


def write_roc_table(curve: RocCurve, path) -> None:
    """Two-column FPR/TPR text table for external plotting."""
    with open(path, "w") as fh:
        fh.write(f"# roc-table-version: {ROC_TABLE_FORMAT_VERSION}\n")
        fh.write("fpr\ttpr\n")
        for f, t in zip(curve.fpr, curve.tpr):
            fh.write(f"{f:.9f}\t{t:.9f}\n")
