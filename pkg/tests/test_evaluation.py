"""Evaluation metrics: worked examples, exhaustive-threshold oracles, and the
cross-dataset report format."""

import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from padstack import evaluation
from padstack.errors import InvalidInputError
from padstack.evaluation import (
    EvalReport,
    RocCurve,
    ScoreEntry,
    ScoreSet,
    auc,
    cross_dataset_eval,
    eer,
    far_frr,
    format_report,
    hter,
    parse_report,
    roc_curve,
    write_report,
    write_roc_table,
)
from padstack.numerics import make_rng

import oracles


def score_set(live, attack, provenance="test"):
    entries = [ScoreEntry(f"live-{i}", float(s), 0) for i, s in enumerate(live)]
    entries += [ScoreEntry(f"attack-{i}", float(s), 1) for i, s in enumerate(attack)]
    return ScoreSet(entries, provenance)


score_lists = st.lists(
    st.floats(0, 1, allow_nan=False).map(lambda x: round(x, 2)),
    min_size=1, max_size=25,
)


# --- score sets -----------------------------------------------------------------


def test_score_set_rejects_nonfinite_scores():
    with pytest.raises(InvalidInputError):
        score_set([0.5, float("nan")], [0.7])


def test_score_set_rejects_bad_labels():
    with pytest.raises(InvalidInputError):
        ScoreSet([ScoreEntry("x", 0.5, 2)])


def test_single_class_rejected_everywhere():
    live_only = score_set([0.2, 0.4], [])
    for op in (roc_curve, eer, lambda s: far_frr(s, 0.5)):
        with pytest.raises(InvalidInputError, match="both classes"):
            op(live_only)


# --- roc curve ------------------------------------------------------------------


def test_roc_perfect_separation():
    curve = roc_curve(score_set([0.1, 0.2], [0.8, 0.9]))
    points = set(zip(curve.fpr.tolist(), curve.tpr.tolist()))
    assert {(0.0, 0.0), (0.0, 1.0), (1.0, 1.0)} <= points
    assert auc(curve) == 1.0


def test_roc_all_scores_identical():
    curve = roc_curve(score_set([0.5, 0.5], [0.5, 0.5]))
    assert curve.fpr.tolist() == [0.0, 1.0]
    assert curve.tpr.tolist() == [0.0, 1.0]


def test_roc_interleaved_example_matches_enumeration():
    live, attack = [0.4, 0.6], [0.5, 0.7]
    curve = roc_curve(score_set(live, attack))
    expected = oracles.roc_enumeration(live, attack)
    assert list(zip(curve.fpr.tolist(), curve.tpr.tolist())) == expected


@given(live=score_lists, attack=score_lists)
def test_roc_structure(live, attack):
    curve = roc_curve(score_set(live, attack))
    assert (curve.fpr[0], curve.tpr[0]) == (0.0, 0.0)
    assert (curve.fpr[-1], curve.tpr[-1]) == (1.0, 1.0)
    assert np.all(np.diff(curve.fpr) >= 0)
    assert np.all(np.diff(curve.tpr) >= 0)
    assert curve.thresholds[0] == np.inf
    assert np.all(np.diff(curve.thresholds) < 0)


# --- auc ------------------------------------------------------------------------


def test_auc_reversed_perfect_separation_is_zero():
    assert auc(roc_curve(score_set([0.8, 0.9], [0.1, 0.2]))) == 0.0


def test_auc_random_scores_near_half():
    rng = make_rng(123)
    live = rng.uniform(size=5000)
    attack = rng.uniform(size=5000)
    value = auc(roc_curve(score_set(live, attack)))
    assert abs(value - 0.5) < 0.02


@given(live=score_lists, attack=score_lists)
def test_auc_matches_both_oracles(live, attack):
    value = auc(roc_curve(score_set(live, attack)))
    assert value == pytest.approx(oracles.auc_enumeration(live, attack), abs=1e-9)
    assert value == pytest.approx(oracles.auc_pair_counting(live, attack), abs=1e-9)


@given(live=score_lists, attack=score_lists)
def test_auc_invariant_under_monotone_transforms(live, attack):
    base = auc(roc_curve(score_set(live, attack)))
    for transform in (lambda x: x ** 3 + 2.0 * x, lambda x: np.expm1(x)):
        mapped = auc(roc_curve(score_set([transform(s) for s in live],
                                         [transform(s) for s in attack])))
        assert mapped == pytest.approx(base, abs=1e-12)


# --- eer ------------------------------------------------------------------------


def test_eer_perfect_separation():
    value, threshold = eer(score_set([0.1, 0.2], [0.8, 0.9]))
    assert value == 0.0
    assert 0.2 < threshold < 0.8


def test_eer_interleaved_two_by_two():
    # live [0.1, 0.6] vs attack [0.4, 0.9]: with two samples per class the
    # rates move in halves, so the closest FAR/FRR meet is 0.5 each at the
    # midpoint threshold 0.5 (one misclassification per class).
    value, threshold = eer(score_set([0.1, 0.6], [0.4, 0.9]))
    assert threshold == pytest.approx(0.5)
    assert value == pytest.approx(0.5)
    far, frr = far_frr(score_set([0.1, 0.6], [0.4, 0.9]), threshold)
    assert (far, frr) == (0.5, 0.5)


def test_eer_flipped_labels_warns_degenerate():
    with pytest.warns(UserWarning, match="degenerate"):
        value, _ = eer(score_set([0.8, 0.9], [0.1, 0.2]))
    assert value >= 0.5


def test_eer_tie_breaks_to_smallest_threshold():
    # every candidate has |FAR - FRR| = 1, so the lowest one wins
    value, threshold = eer(score_set([0.5], [0.5]))
    assert threshold == pytest.approx(0.0)
    assert value == pytest.approx(0.5)


@given(live=score_lists, attack=score_lists)
def test_eer_matches_enumeration_oracle(live, attack):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        value, threshold = eer(score_set(live, attack))
    expected_value, expected_threshold = oracles.eer_enumeration(live, attack)
    assert value == pytest.approx(expected_value, abs=1e-9)
    assert threshold == pytest.approx(expected_threshold, abs=1e-9)


# --- far / frr / hter --------------------------------------------------------------


def test_hter_perfect_separation_zero():
    assert hter(score_set([0.1, 0.2], [0.8, 0.9]), 0.5).hter == 0.0


def test_hter_threshold_below_everything():
    metrics = hter(score_set([0.3, 0.4], [0.6, 0.7]), 0.0)
    assert metrics == (0.0, 1.0, 0.5)


def test_hter_interleaved_hand_example():
    metrics = hter(score_set([0.1, 0.6], [0.4, 0.9]), 0.5)
    assert metrics.far == 0.5
    assert metrics.frr == 0.5
    assert metrics.hter == 0.5


def test_hter_rejects_nonfinite_threshold():
    with pytest.raises(InvalidInputError):
        hter(score_set([0.1], [0.9]), float("inf"))


@given(live=score_lists, attack=score_lists,
       t=st.floats(-0.5, 1.5, allow_nan=False))
def test_rates_match_counting_oracle(live, attack, t):
    far, frr = far_frr(score_set(live, attack), t)
    expected = oracles.rates_at(live, attack, t)
    assert (far, frr) == expected
    assert 0.0 <= far <= 1.0 and 0.0 <= frr <= 1.0


@given(live=score_lists, attack=score_lists)
def test_far_nondecreasing_frr_nonincreasing_in_threshold(live, attack):
    # under the attack-positive rule, raising the threshold can only push
    # attacks below it (FAR up) and release live samples (FRR down)
    scores = score_set(live, attack)
    grid = np.linspace(-0.5, 1.5, 9)
    rates = [far_frr(scores, float(t)) for t in grid]
    fars = [r[0] for r in rates]
    frrs = [r[1] for r in rates]
    assert all(b >= a for a, b in zip(fars, fars[1:]))
    assert all(b <= a for a, b in zip(frrs, frrs[1:]))


@given(live=score_lists, attack=score_lists)
def test_hter_at_eer_threshold_equals_eer(live, attack):
    scores = score_set(live, attack)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        value, threshold = eer(scores)
    assert hter(scores, threshold).hter == pytest.approx(value, abs=1e-12)


# --- cross-dataset protocol ----------------------------------------------------------


def test_iid_source_and_target_hter_tracks_eer():
    # 500-sample sets from one distribution: the source EER threshold must
    # transfer, keeping target HTER within 0.05 of source EER
    rng = make_rng(55)

    def draw(prefix):
        live = np.clip(rng.normal(0.3, 0.1, size=250), 0, 1)
        attack = np.clip(rng.normal(0.7, 0.1, size=250), 0, 1)
        return score_set(live, attack, prefix)

    source, target = draw("src"), draw("tgt")
    value, threshold = eer(source)
    assert abs(hter(target, threshold).hter - value) <= 0.05


def test_cross_dataset_eval_rejects_overlapping_video_ids(separable_run):
    ens = separable_run.ensemble
    seqs = separable_run.target_test
    with pytest.raises(InvalidInputError, match="overlap"):
        cross_dataset_eval(ens, seqs, seqs)


def test_cross_dataset_report_consistency(separable_run):
    report = separable_run.report
    assert report.hter == (report.far + report.frr) / 2.0
    for field in ("eer", "far", "frr", "hter", "auc"):
        assert 0.0 <= getattr(report, field) <= 1.0
    assert report.n_source == len(separable_run.source_test)
    assert report.n_target == len(separable_run.target_test)


# --- report and roc table formats ------------------------------------------------------


def headline_report():
    # report-format reference values (not reproducible at desk scale)
    curve = roc_curve(score_set([0.1], [0.9]))
    return EvalReport(protocol="OCI_to_M", eer=0.0288, eer_threshold=0.5125,
                      far=0.0101, frr=0.0523, hter=0.0312, auc=0.9989,
                      roc=curve, n_source=1200, n_target=400)


def test_report_round_trip(tmp_path):
    path = tmp_path / "report.txt"
    write_report(headline_report(), path)
    parsed = parse_report(path)
    assert parsed["format_version"] == "1"
    assert parsed["protocol"] == "OCI_to_M"
    assert float(parsed["hter"]) == pytest.approx(0.0312)
    assert float(parsed["auc"]) == pytest.approx(0.9989)
    assert parsed["n_source_test"] == "1200"


def test_format_report_layout():
    text = format_report(headline_report())
    lines = text.splitlines()
    assert lines[0] == "format_version: 1"
    keys = [line.split(":")[0] for line in lines]
    assert keys == ["format_version", "protocol", "n_source_test", "n_target_test",
                    "eer", "eer_threshold", "far", "frr", "hter", "auc"]


def test_roc_table_format(tmp_path):
    curve = roc_curve(score_set([0.1, 0.4], [0.6, 0.9]))
    path = tmp_path / "roc.tsv"
    write_roc_table(curve, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "# roc-table-version: 1"
    assert lines[1] == "fpr\ttpr"
    rows = [tuple(map(float, line.split("\t"))) for line in lines[2:]]
    assert rows[0] == (0.0, 0.0)
    assert rows[-1] == (1.0, 1.0)
    assert len(rows) == len(curve.fpr)
