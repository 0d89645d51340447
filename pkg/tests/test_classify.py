import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gngiemd.classify import (ConfusionMatrix, knn_classify, knn_from_distances, parse_protocol,
                              protocol_folds, run_protocol, save_confusion, vote)
from gngiemd.features import Signature


def tagged(value, label, subject, real=2):
    w = np.zeros((6, 7))
    w[:real] = value
    return Signature(w, real, label, subject)


def separable(n_labels=3, n_subjects=10, n_samples=4, jitter=0.0, seed=0):
    rng = np.random.default_rng(seed)
    return [tagged(0.2 * lab + jitter * rng.random(), lab, s)
            for lab in range(n_labels) for s in range(n_subjects) for _ in range(n_samples)]


def test_vote_majority_and_ties():
    assert vote(["a", "a", "b"], 3) == "a"
    assert vote(["c", "b", "a"], 3) == "c"
    assert vote(["b", "a", "a", "b"], 4) == "b"
    assert vote(["c", "a", "b", "a", "b"], 5) == "a"


def test_distance_ties_follow_training_order():
    assert knn_from_distances([1.0, 0.5, 0.5], ["x", "y", "z"], k=1) == "y"


def test_knn_errors():
    with pytest.raises(ValueError):
        knn_from_distances([], [], 1)
    with pytest.raises(ValueError):
        knn_from_distances([0.1], ["a"], 3)
    with pytest.raises(ValueError, match="empty"):
        knn_classify(tagged(0.1, 0, 0), [], 1)


def test_self_match_with_k1():
    train = separable(n_subjects=2, n_samples=1)
    for s in train:
        assert knn_classify(s, train, k=1) == s.label


def test_parse_protocol():
    assert parse_protocol("l-4-o") == ("l-p-o", 4)
    assert parse_protocol("l-o-o") == ("l-p-o", 1)
    assert parse_protocol("l-p-o", 3) == ("l-p-o", 3)
    assert parse_protocol("h-h") == ("h-h", 0)
    for bad in ("x-x", "l-p-o"):
        with pytest.raises(ValueError):
            parse_protocol(bad)


@pytest.mark.parametrize("protocol", ["h-h", "l-o-o", "l-2-o", "i2i"])
def test_perfect_separation(protocol):
    cm = run_protocol(separable(), protocol, seed=1)
    assert cm.mean_accuracy == 1.0 and cm.accuracy == 1.0


def test_l4o_fold_count():
    data = separable(n_labels=2, n_samples=1)
    folds = list(protocol_folds(data, "l-4-o"))
    assert len(folds) == math.comb(10, 4) == 210
    assert run_protocol(data, "l-4-o", k=1).n_folds == 210


@pytest.mark.parametrize("protocol", ["h-h", "l-o-o", "l-3-o", "i2i"])
def test_folds_are_disjoint(protocol):
    data = separable(n_samples=5)
    for train, test in protocol_folds(data, protocol, seed=3):
        assert not set(train) & set(test)
        assert train and test


def test_hh_is_stratified_and_seeded():
    data = separable(n_samples=5)
    (tr, te), = protocol_folds(data, "h-h", seed=2)
    for s in range(10):
        for lab in range(3):
            grp = [i for i, x in enumerate(data) if x.subject == s and x.label == lab]
            assert len(set(grp) & set(tr)) == 2 and len(set(grp) & set(te)) == 3
    assert list(protocol_folds(data, "h-h", seed=2)) == [(tr, te)]


def test_i2i_one_training_image_per_subject_and_class():
    data = separable(n_samples=4)
    (tr, te), = protocol_folds(data, "i2i", seed=5)
    assert len(tr) == 30 and len(te) == 90
    assert {(data[i].subject, data[i].label) for i in tr} == {(s, l) for s in range(10) for l in range(3)}


def test_protocol_partition_mismatch():
    data = separable(n_subjects=3)
    with pytest.raises(ValueError):
        list(protocol_folds(data, "l-3-o"))
    with pytest.raises(ValueError):
        list(protocol_folds([tagged(0.1, None, 0)], "h-h"))


def test_deterministic():
    data = separable(jitter=0.5, seed=4)
    a = run_protocol(data, "h-h", seed=7)
    b = run_protocol(data, "h-h", seed=7)
    assert np.array_equal(a.counts, b.counts) and a.fold_accuracies == b.fold_accuracies


def test_queries_replace_test_items():
    data = separable(n_subjects=3, n_samples=2)
    shifted = [tagged(0.2 * ((s.label + 1) % 3), s.label, s.subject) for s in data]
    cm = run_protocol(data, "l-o-o", queries=shifted)
    assert cm.accuracy == 0.0
    with pytest.raises(ValueError):
        run_protocol(data, "l-o-o", queries=shifted[:-1])


@given(st.integers(0, 1000))
def test_confusion_matrix_invariants(seed):
    data = separable(jitter=0.6, seed=seed, n_subjects=4, n_samples=2)
    cm = run_protocol(data, "l-o-o", seed=seed)
    assert np.trace(cm.counts) <= cm.total
    assert 0 <= cm.mean_accuracy <= 1
    per_class = cm.counts.sum(axis=1)
    assert per_class.tolist() == [8, 8, 8]
    assert cm.accuracy == pytest.approx(np.trace(cm.counts) / cm.total)


def test_adding_own_signature_never_hurts_k1():
    data = separable(jitter=0.6, seed=1, n_subjects=3, n_samples=2)
    t = data[0]
    others = data[1:]
    assert knn_classify(t, others + [t], k=1) == t.label


def test_csv_output(tmp_path):
    cm = ConfusionMatrix.empty([0, 1])
    cm.add([0, 0, 1], [0, 1, 1])
    cm.fold_accuracies.append(2 / 3)
    save_confusion(cm, tmp_path / "c.csv")
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0] == "true\\pred,0,1"
    assert lines[1:3] == ["0,1,1", "1,0,1"]
    assert lines[3].startswith("mean_accuracy ") and float(lines[3].split()[1]) == pytest.approx(2 / 3)
    assert cm.per_class_accuracy() == {0: 0.5, 1: 1.0}
