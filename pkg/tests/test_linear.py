from fractions import Fraction

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from lide.corpus import Corpus
from lide.errors import LideError
from lide.features import SparseVector, Vocabulary
from lide.linear import (
    LogRegModel,
    LogRegConfig,
    fit_logreg,
    fit_mnb,
    logreg_objective,
    logreg_proba,
    mnb_log_posterior,
    train_logreg,
    train_mnb,
)
from oracles import (
    central_difference,
    count_rows,
    max_relative_error,
    mnb_posterior_bruteforce,
    random_mnb_instance,
)


def test_mnb_smoothed_likelihood_example():
    # class 0 saw "a a", class 1 saw "b"; vocabulary {a, b}.
    X = np.array([[2.0, 0.0], [0.0, 1.0]])
    m = train_mnb(X, [0, 1], alpha=1.0)
    assert np.exp(m.log_likelihood[0, 0]) == pytest.approx(0.75)
    assert np.exp(m.log_likelihood[1, 0]) == pytest.approx(1 / 3)
    post = np.exp(mnb_log_posterior(m, SparseVector(np.array([0]), np.array([1]))))
    # Frozen from the rational oracle: (1/2 * 3/4) / (1/2 * 3/4 + 1/2 * 1/3) = 9/13.
    expected = mnb_posterior_bruteforce([[0, 0], [1]], [0, 1], 1, 2, 2, [0])
    assert expected[0] == pytest.approx(float(Fraction(9, 13)), abs=1e-15)
    assert post[0] == pytest.approx(expected[0], abs=1e-12)


def test_mnb_all_oov_reduces_to_prior_when_oov_unseen():
    X = np.array([[0.0, 1.0], [0.0, 1.0], [0.0, 2.0]])
    m = train_mnb(X, [0, 0, 1])
    # Column 0 (OOV) is unseen in both classes, but class totals differ, so the
    # posterior follows prior times the OOV likelihood ratio.
    post = np.exp(mnb_log_posterior(m, SparseVector(np.array([0]), np.array([1]))))
    expected = mnb_posterior_bruteforce([[1], [1], [1, 1]], [0, 0, 1], 1.0, 2, 2, [0])
    assert post == pytest.approx(expected, abs=1e-12)


def test_mnb_empty_input_is_prior():
    m = train_mnb(np.eye(3), [0, 1, 1])
    post = np.exp(mnb_log_posterior(m, SparseVector(np.array([], dtype=int), np.array([], dtype=int))))
    assert post == pytest.approx([1 / 3, 2 / 3])


def test_mnb_rejects_empty_class_and_bad_alpha():
    with pytest.raises(LideError, match="class"):
        train_mnb(np.eye(2), [0, 0], n_classes=2)
    with pytest.raises(LideError):
        train_mnb(np.eye(2), [0, 1], alpha=0.0)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_mnb_matches_bruteforce(seed):
    rng = np.random.default_rng(seed)
    docs, labels, alpha, V, C, query = random_mnb_instance(rng)
    m = train_mnb(count_rows(docs, V), labels, alpha, n_classes=C)
    q = count_rows([query], V)[0]
    idx = np.flatnonzero(q)
    got = mnb_log_posterior(m, SparseVector(idx, q[idx].astype(np.int64)))
    want = np.log(mnb_posterior_bruteforce(docs, labels, alpha, V, C, query))
    assert np.max(np.abs(got - want)) <= 1e-9
    # The batched path agrees with the single-vector path.
    assert m.log_posterior_rows(sp.csr_matrix(q[None])) == pytest.approx(got[None], abs=1e-12)


def test_mnb_alpha_grows_toward_prior():
    X = np.array([[5.0, 0.0, 1.0], [0.0, 4.0, 1.0]])
    x = SparseVector(np.array([0]), np.array([2]))
    prior = np.array([0.5, 0.5])
    dists = []
    for alpha in (0.1, 1.0, 10.0, 1000.0):
        post = np.exp(mnb_log_posterior(train_mnb(X, [0, 1], alpha), x))
        dists.append(np.abs(post - prior).sum())
    assert all(a > b for a, b in zip(dists, dists[1:]))


def _lr(W, b):
    return LogRegModel(np.asarray(W, float), np.asarray(b, float), LogRegConfig(), ("x", "y"))


def test_logreg_proba_examples():
    m = _lr([[0.0], [0.0]], [np.log(2.0), 0.0])
    assert logreg_proba(m, np.array([1.0])) == pytest.approx([2 / 3, 1 / 3])
    m0 = _lr(np.zeros((2, 3)), np.zeros(2))
    assert logreg_proba(m0, np.array([1.0, 5.0, 2.0])) == pytest.approx([0.5, 0.5])


def test_logreg_proba_survives_huge_logits():
    m = _lr([[1.0], [-1.0]], [0.0, 0.0])
    p = logreg_proba(m, np.array([1e6]))
    assert np.all(np.isfinite(p)) and p[0] == pytest.approx(1.0)
    assert p.sum() == pytest.approx(1.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_logreg_gradient_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    V, C, n = int(rng.integers(1, 21)), int(rng.integers(2, 5)), int(rng.integers(1, 8))
    X = rng.poisson(1.0, size=(n, V)).astype(float)
    y = rng.integers(C, size=n)
    W, b = rng.normal(0, 0.5, size=(C, V)), rng.normal(0, 0.5, size=C)
    lam = float(rng.choice([0.0, 0.1, 1.0]))
    _, gW, gb = logreg_objective(W, b, X, y, lam)
    f = lambda: logreg_objective(W, b, X, y, lam)[0]  # noqa: E731
    assert max_relative_error(gW, central_difference(f, W, 1e-4)) < 1e-6
    assert max_relative_error(gb, central_difference(f, b, 1e-4)) < 1e-6


def test_logreg_zero_lr_keeps_uniform():
    X = np.eye(4)
    m = train_logreg(X, [0, 1, 2, 0], 3, lam=0.0, epochs=1, lr=0.0)
    assert np.all(m.W == 0) and np.all(m.b == 0)
    assert m.proba_rows(X) == pytest.approx(np.full((4, 3), 1 / 3))


def test_logreg_huge_lambda_stays_finite_and_shrinks():
    rng = np.random.default_rng(0)
    X = rng.poisson(1.0, size=(50, 10)).astype(float)
    y = rng.integers(3, size=50)
    m = train_logreg(X, y, 3, lam=1e6, epochs=3, lr=0.1)
    assert np.all(np.isfinite(m.W)) and np.all(np.isfinite(m.b))
    assert np.abs(m.W).max() < 1e-6


def test_logreg_larger_lambda_smaller_norm():
    rng = np.random.default_rng(1)
    X = rng.poisson(1.0, size=(80, 12)).astype(float)
    y = (X[:, 0] > X[:, 1]).astype(int)
    norms = [np.linalg.norm(train_logreg(X, y, 2, lam=lam, epochs=20).W) for lam in (0.0, 0.01, 0.1, 1.0)]
    assert all(a > b for a, b in zip(norms, norms[1:]))


def test_logreg_deterministic_per_seed():
    rng = np.random.default_rng(2)
    X = rng.poisson(1.0, size=(100, 8)).astype(float)
    y = rng.integers(2, size=100)
    a = train_logreg(X, y, 2, seed=5, epochs=3)
    b = train_logreg(X, y, 2, seed=5, epochs=3)
    c = train_logreg(X, y, 2, seed=6, epochs=3)
    assert np.array_equal(a.W, b.W) and np.array_equal(a.b, b.b)
    assert not np.array_equal(a.W, c.W)


def test_logreg_lazy_shrink_matches_dense_reference():
    """One epoch of the lazy-scale update equals the obvious dense loop."""
    rng = np.random.default_rng(3)
    X = rng.poisson(0.7, size=(130, 6)).astype(float)
    y = rng.integers(3, size=130)
    lr, lam, bs, seed = 0.2, 0.3, 64, 9
    got = train_logreg(X, y, 3, lam=lam, epochs=1, lr=lr, seed=seed, batch_size=bs)
    W, b = np.zeros((3, 6)), np.zeros(3)
    order = np.random.default_rng(seed).permutation(130)
    for s in range(0, 130, bs):
        idx = order[s:s + bs]
        _, gW, gb = logreg_objective(W, b, X[idx], y[idx], 0.0)
        W = (W - lr * gW) / (1 + lr * lam)
        b = b - lr * gb
    assert got.W == pytest.approx(W, abs=1e-12)
    assert got.b == pytest.approx(b, abs=1e-12)


def test_fit_on_text(disjoint_split):
    train, test = disjoint_split
    for fit in (fit_mnb, fit_logreg):
        m = fit(train)
        assert m.classes == ("bg", "cz", "es-ES")
        pred = m.predict(test.texts)
        assert np.mean([p == g for p, g in zip(pred, test.labels)]) >= 0.99


def test_logreg_history_records_valid(disjoint_split):
    train, test = disjoint_split
    m = fit_logreg(train, config=LogRegConfig(epochs=2), valid=test)
    assert [h[0] for h in m.history] == [1, 2]
    assert all(h[2] is not None for h in m.history)


def test_unseen_language_in_valid_is_dropped():
    train = Corpus.from_pairs([("aa", "bs"), ("bb", "hr")] * 3)
    valid = Corpus.from_pairs([("aa", "bs"), ("cc", "sr")])
    m = fit_logreg(train, config=LogRegConfig(epochs=1), valid=valid)
    assert m.classes == ("bs", "hr")


def test_model_without_spec_refuses_text():
    with pytest.raises(LideError):
        _lr([[0.0], [0.0]], [0.0, 0.0]).proba(["x"])


def test_vocab_oov_column_is_used():
    v = Vocabulary(["a"], [1])
    assert v.index("zzz") == 0


def test_logreg_separable_toy_fits_exactly():
    X = np.array([[2, 0, 0], [1, 0, 0], [0, 3, 0], [0, 1, 0], [0, 0, 1], [0, 0, 2]], dtype=float)
    y = np.array([0, 0, 1, 1, 2, 2])
    m = train_logreg(X, y, 3, lam=0.0, epochs=50, lr=0.5)
    assert [int(np.argmax(logreg_proba(m, x))) for x in X] == y.tolist()


def test_logreg_huge_lambda_predicts_priors():
    rng = np.random.default_rng(4)
    X = rng.poisson(1.0, size=(200, 6)).astype(float)
    y = np.array([0] * 140 + [1] * 60)
    m = train_logreg(X, y, 2, lam=1e6, epochs=30, lr=0.1)
    assert np.linalg.norm(m.W) < 1e-3
    assert logreg_proba(m, X[0]) == pytest.approx([0.7, 0.3], abs=0.05)
