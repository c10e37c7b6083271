"""Scoring against ground truth, macro averaging, and grid-point selection.

The macro precision/recall implementation is cross-checked against
scikit-learn's, which serves as the independent oracle here.
"""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.metrics import precision_score, recall_score

from beliefstate.amortizer import AmortizationParams
from beliefstate.annotators import AnnotatorBank, KnnModel
from beliefstate.errors import IntegrityError, ValidationError
from beliefstate.evalkit import (
    MODE_AMORTIZED,
    MODE_ONE_SHOT,
    EvalReport,
    GroundTruth,
    TypeScores,
    annotate_episode,
    grid_search,
    macro_precision_recall,
    score,
    select_params,
)

from conftest import axis, make_episode, make_hyp, make_scene


def _bank():
    return AnnotatorBank(knn=KnnModel(examples=[(axis(0), "mug"),
                                                (axis(1), "plate")]))


def _ten_hypothesis_episode():
    """One scene, ten owned hypotheses, all truly mugs.

    Six classify correctly, two confidently wrong (plate signature), two sit
    on an axis the classifier gates out.  Expected one-shot class metrics:
    coverage 8/10, accuracy 6/8, macro precision 0.5, macro recall 0.375.
    """
    axes = [0] * 6 + [1] * 2 + [7] * 2
    hyps = [make_hyp(f"h{i}", pose=(i, 0, 0.5, 0, 0, 0), class_axis=a)
            for i, a in enumerate(axes)]
    episode = make_episode([make_scene(1.0, hyps)])
    for hyp in hyps:
        episode.associate(None, 1.0, hyp.hyp_id)
    gt = GroundTruth({(1.0, f"h{i}"): {"class": "mug"} for i in range(10)})
    return episode, gt


def test_one_shot_frozen_metrics():
    episode, gt = _ten_hypothesis_episode()
    report = score(episode, gt, AmortizationParams(1, 0.0), MODE_ONE_SHOT,
                   _bank())
    assert report.n_scored == 10
    assert report.coverage == pytest.approx(0.8)
    scores = report.per_type["class"]
    assert scores.support == 8
    assert scores.accuracy == pytest.approx(0.75)
    assert scores.precision == pytest.approx(0.5)
    assert scores.recall == pytest.approx(0.375)
    assert not scores.empty_support


def test_amortized_single_occurrence_matches_one_shot():
    episode, gt = _ten_hypothesis_episode()
    bank = _bank()
    one_shot = score(episode, gt, AmortizationParams(1, 0.0), MODE_ONE_SHOT,
                     bank)
    annotate_episode(episode, ["class"], bank)
    amortized = score(episode, gt, AmortizationParams(1, 0.6), MODE_AMORTIZED,
                      bank)
    assert amortized.per_type == one_shot.per_type
    assert amortized.coverage == one_shot.coverage
    assert amortized.n_scored == one_shot.n_scored


def _dropout_episode():
    """One object seen three times; the last sighting's descriptor is junk."""
    scenes = [make_scene(1.0, [make_hyp("h0")]),
              make_scene(2.0, [make_hyp("h0")]),
              make_scene(3.0, [make_hyp("h0", class_axis=7)])]
    episode = make_episode(scenes)
    oid = episode.associate(None, 1.0, "h0")
    episode.associate(oid, 2.0, "h0")
    episode.associate(oid, 3.0, "h0")
    gt = GroundTruth({(3.0, "h0"): {"class": "mug"}})
    return episode, gt


def test_aggregation_recovers_coverage_one_shot_loses():
    episode, gt = _dropout_episode()
    bank = _bank()
    annotate_episode(episode, ["class"], bank)
    one_shot = score(episode, gt, AmortizationParams(1, 0.0), MODE_ONE_SHOT,
                     bank)
    amortized = score(episode, gt, AmortizationParams(3, 0.6), MODE_AMORTIZED,
                      bank)
    assert one_shot.coverage == 0.0
    assert one_shot.per_type["class"].empty_support
    assert amortized.coverage == 1.0
    assert amortized.per_type["class"].accuracy == 1.0


def test_unowned_hypotheses_stay_out_of_the_universe():
    hyps = [make_hyp("h0"), make_hyp("h1", pose=(2, 0, 0.5, 0, 0, 0))]
    episode = make_episode([make_scene(1.0, hyps)])
    episode.associate(None, 1.0, "h0")
    gt = GroundTruth({(1.0, "h0"): {"class": "mug"},
                      (1.0, "h1"): {"class": "mug"}})
    report = score(episode, gt, AmortizationParams(1, 0.0), MODE_ONE_SHOT,
                   _bank())
    assert report.n_scored == 1
    assert report.coverage == 1.0


def test_coverage_counts_class_only():
    episode, _ = _dropout_episode()
    gt = GroundTruth({(3.0, "h0"): {"color": "red"}})
    report = score(episode, gt, AmortizationParams(1, 0.0), MODE_ONE_SHOT,
                   _bank())
    assert report.coverage == 0.0
    assert report.per_type["class"].empty_support
    assert report.per_type["color"].accuracy == 1.0


def test_row_is_flat_class_metrics():
    episode, gt = _ten_hypothesis_episode()
    row = score(episode, gt, AmortizationParams(1, 0.0), MODE_ONE_SHOT,
                _bank()).row()
    assert row == {"ac": 1, "cf": 0.0, "accuracy": 0.75, "precision": 0.5,
                   "recall": 0.375, "coverage": 0.8, "mode": "one_shot"}


def test_score_rejects_unknown_mode():
    episode, gt = _ten_hypothesis_episode()
    with pytest.raises(ValidationError):
        score(episode, gt, AmortizationParams(1, 0.0), "oracle", _bank())


# -- macro averaging -----------------------------------------------------------

def test_macro_precision_recall_frozen():
    pairs = [("mug", "mug")] * 6 + [("mug", "plate")] * 2
    assert macro_precision_recall(pairs) == (0.5, 0.375)
    assert macro_precision_recall([]) == (0.0, 0.0)


@settings(max_examples=300)
@given(st.lists(st.tuples(st.sampled_from("abcd"), st.sampled_from("abcd")),
                min_size=1, max_size=40))
def test_macro_averaging_matches_sklearn(pairs):
    y_true = [t for t, _ in pairs]
    y_pred = [p for _, p in pairs]
    labels = sorted(set(y_true) | set(y_pred))
    precision, recall = macro_precision_recall(pairs)
    assert precision == pytest.approx(
        precision_score(y_true, y_pred, labels=labels, average="macro",
                        zero_division=0), abs=1e-12)
    assert recall == pytest.approx(
        recall_score(y_true, y_pred, labels=labels, average="macro",
                     zero_division=0), abs=1e-12)


# -- ground truth ----------------------------------------------------------------

def test_ground_truth_rejects_unknown_symbol_type():
    with pytest.raises(ValidationError):
        GroundTruth({(1.0, "h0"): {"material": "steel"}})


def test_ground_truth_must_reference_logged_hypotheses():
    episode = make_episode([make_scene(1.0, [make_hyp("h0")])])
    with pytest.raises(IntegrityError):
        GroundTruth({(2.0, "h0"): {"class": "mug"}}).check_against(episode)
    with pytest.raises(IntegrityError):
        GroundTruth({(1.0, "hX"): {"class": "mug"}}).check_against(episode)


# -- operating point selection ------------------------------------------------

def _report(ac, cf, coverage, accuracy):
    return EvalReport(
        mode=MODE_AMORTIZED, params=AmortizationParams(ac=ac, cf=cf),
        per_type={"class": TypeScores(accuracy, 0.0, 0.0, 10, False)},
        coverage=coverage, n_scored=10)


def test_selection_minimizes_coverage_accuracy_gap_first():
    reports = [_report(20, 0.9, 0.9, 0.5),
               _report(2, 0.6, 0.8, 0.78),
               _report(1, 0.0, 0.9, 0.5)]
    assert select_params(reports) == AmortizationParams(2, 0.6)


def test_selection_then_maximizes_raw_sum():
    reports = [_report(3, 0.8, 0.8, 0.8), _report(5, 0.6, 0.7, 0.7)]
    assert select_params(reports) == AmortizationParams(5, 0.6)


def test_selection_breaks_sum_ties_towards_larger_ac():
    reports = [_report(4, 1.0, 0.8, 0.8), _report(5, 0.0, 0.7, 0.7)]
    assert select_params(reports) == AmortizationParams(5, 0.0)


def test_selection_normalized_rule_rescales_axes():
    reports = [_report(20, 0.6, 0.8, 0.8),
               _report(10, 0.8, 0.7, 0.7),
               _report(18, 0.75, 0.6, 0.6)]
    assert select_params(reports) == AmortizationParams(20, 0.6)
    assert select_params(reports, normalized=True) == AmortizationParams(
        18, 0.75)


def test_selection_requires_reports():
    with pytest.raises(ValidationError):
        select_params([])


# -- grid search -----------------------------------------------------------------

def test_grid_search_equals_independent_scoring():
    ac_values = [1, 3]
    cf_values = [0.0, 0.6]
    episode, gt = _dropout_episode()
    grid = grid_search(episode, gt, ac_values, cf_values, _bank())

    fresh_episode, fresh_gt = _dropout_episode()
    bank = _bank()
    annotate_episode(fresh_episode, ["class"], bank)
    expected = [score(fresh_episode, fresh_gt, AmortizationParams(ac, cf),
                      MODE_AMORTIZED, bank)
                for ac in ac_values for cf in cf_values]
    assert grid.reports == expected
    assert grid.selected == select_params(expected)
    assert grid.baseline.mode == MODE_ONE_SHOT
    assert grid.baseline.params == AmortizationParams(1, 0.0)
    rows = grid.rows()
    assert len(rows) == 5 and rows[-1]["mode"] == "one_shot"


def test_grid_search_rejects_empty_axes():
    episode, gt = _dropout_episode()
    with pytest.raises(ValidationError):
        grid_search(episode, gt, [], [0.5], _bank())
    with pytest.raises(ValidationError):
        grid_search(episode, gt, [1], [], _bank())
