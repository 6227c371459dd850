import numpy as np
import pytest

from lide.corpus import SplitSpec, split
from lide.ensemble import (
    EnsembleModel,
    MetaConfig,
    combine,
    fit_stacker,
    predict_ensemble,
    stack_features,
    train_ensemble,
    train_stacker,
)
from lide.errors import LideError
from lide.features import NgramSpec
from lide.linear import fit_logreg, fit_mnb
from lide.rnn.gru import TrainConfig

FAST_META = MetaConfig(k=3, epochs=30)


def test_median_combiner_example():
    blocks = [np.array([[0.6, 0.4]]), np.array([[0.8, 0.2]]), np.array([[0.1, 0.9]])]
    assert combine(blocks, "median") == pytest.approx(np.array([[0.6, 0.4]]))


def test_median_renormalises():
    blocks = [np.array([[0.5, 0.3, 0.2]]), np.array([[0.2, 0.2, 0.6]]), np.array([[0.3, 0.6, 0.1]])]
    out = combine(blocks, "median")
    assert out.sum() == pytest.approx(1.0)
    assert out == pytest.approx(np.array([[0.3, 0.3, 0.2]]) / 0.8)


def test_weighted_combiner():
    blocks = [np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]])]
    assert combine(blocks, "weighted", weights=np.array([0.25, 0.75])) == pytest.approx(np.array([[0.25, 0.75]]))


def test_stack_features_concatenates_in_member_order(disjoint_split, mnb_small):
    train, test = disjoint_split
    lr = fit_logreg(train)
    X = stack_features([mnb_small, lr], test.texts[:4])
    assert X.shape == (4, 6)
    assert X[:, :3] == pytest.approx(mnb_small.proba(test.texts[:4]))
    assert X[:, 3:] == pytest.approx(lr.proba(test.texts[:4]))


def test_stacker_learns_to_trust_the_good_member():
    """One member always right, one adversarially wrong; check on unseen rows."""
    rng = np.random.default_rng(0)
    C, n = 3, 300
    y = rng.integers(C, size=n)
    good = np.eye(C)[y] * 0.9 + 0.1 / C
    bad = np.eye(C)[(y + 1) % C] * 0.9 + 0.1 / C
    X = np.hstack([good, bad])
    tr, te = slice(0, 200), slice(200, None)
    meta = train_stacker(X[tr], y[tr], C, FAST_META)
    acc = np.mean(np.argmax(meta.proba_rows(X[te]), axis=1) == y[te])
    good_acc = np.mean(np.argmax(good[te], axis=1) == y[te])
    assert acc >= good_acc - 0.02


def test_lambda_selection_prefers_larger_on_ties():
    # Perfectly separable: every lambda reaches accuracy 1.0.
    y = np.array([0, 1] * 20)
    X = np.eye(2)[y]
    meta = train_stacker(X, y, 2, MetaConfig(k=4, epochs=20, ladder=(1e-3, 1e-2, 0.1)))
    assert [h[0] for h in meta.history] == [1e-3, 1e-2, 0.1]
    assert meta.config.lam == 0.1


def test_stacker_over_one_perfect_member_copies_it(disjoint_split, mnb_small):
    train, test = disjoint_split
    _, held = split(train, SplitSpec(0.7, 1))
    ens = fit_stacker([mnb_small], held, FAST_META)
    assert ens.predict(test.texts) == mnb_small.predict(test.texts)


def test_member_class_mismatch_rejected(disjoint_split, mnb_small):
    train, _ = disjoint_split
    two = fit_mnb(train.with_labels(("bg", "cz")))
    with pytest.raises(LideError, match="member 1"):
        EnsembleModel([mnb_small, two], "median")


def test_duplicate_specs_rejected(disjoint_split, mnb_small):
    other = fit_mnb(disjoint_split[0])
    with pytest.raises(LideError, match="distinct"):
        EnsembleModel([mnb_small, other], "median")


def test_bad_weights(mnb_small, disjoint_split):
    lr = fit_logreg(disjoint_split[0], NgramSpec("char", 1, 2))
    with pytest.raises(LideError):
        EnsembleModel([mnb_small, lr], "weighted", weights=[0.7, 0.7])
    with pytest.raises(LideError):
        EnsembleModel([mnb_small, lr], "weighted", weights=[1.0])
    EnsembleModel([mnb_small, lr], "weighted", weights=[0.5, 0.5])


def test_train_ensemble_and_predict(disjoint_split):
    train, test = disjoint_split
    roster = (NgramSpec("char", 2, 2), NgramSpec("word", 1, 1))
    cfg = TrainConfig(epochs=4, hidden=8, embed_dim=8, dropout=0.0)
    ens = train_ensemble(train, roster, cfg, FAST_META)
    assert len(ens.members) == 2 and ens.combiner == "stacker"
    assert len(ens.cv_report) == len(FAST_META.ladder)
    label, p, members = predict_ensemble(ens, test.texts[0])
    assert label == test.labels[0]
    assert p.sum() == pytest.approx(1.0) and len(members) == 2
    acc = np.mean([a == b for a, b in zip(ens.predict(test.texts), test.labels)])
    assert acc >= 0.95
