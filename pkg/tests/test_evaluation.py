import io

import numpy as np
import pytest

from lide.corpus import Corpus, default_registry
from lide.errors import LideError
from lide.evaluation import (
    accuracy,
    confusion,
    evaluate_model,
    ngram_sweep,
    prefix_scan,
    write_sweep_csv,
)

REG = default_registry()


def test_accuracy_examples():
    assert accuracy(["bs", "hr"], ["bs", "hr"]) == 1.0
    assert accuracy(["bs", "bs"], ["bs", "hr"]) == 0.5
    with pytest.raises(LideError):
        accuracy([], [])
    with pytest.raises(LideError):
        accuracy(["bs"], ["bs", "hr"])


def test_confusion_cells_and_total():
    cm = confusion(["bs", "hr", "hr", "sr"], ["bs", "bs", "hr", "cz"], REG)
    assert cm.total == 4
    assert cm.cell("bs", "hr") == 1 and cm.cell("cz", "sr") == 1
    assert cm.accuracy() == 0.5
    assert cm.counts.sum(axis=1)[REG.codes.index("bs")] == 2


def test_group_collapse():
    cm = confusion(["bs", "hr", "sk"], ["hr", "sr", "cz"], REG, collapse_groups=True)
    assert cm.labels == REG.group_names
    assert cm.accuracy() == 1.0
    cm2 = confusion(["bs", "bg"], ["hr", "hr"], REG, collapse_groups=True)
    assert cm2.errors() == 1


def test_unknown_label():
    with pytest.raises(LideError, match="'xx'"):
        confusion(["xx"], ["bs"], REG)


def test_confusion_csv():
    cm = confusion(["bs"], ["hr"], REG, labels=("bs", "hr"))
    f = io.StringIO()
    cm.write_csv(f)
    assert f.getvalue() == "gold\\predicted,bs,hr\nbs,0,0\nhr,1,0\n"


def test_evaluate_model_ignores_other_labels(mnb_small, disjoint_split):
    _, test = disjoint_split
    extra = Corpus(test.sentences + Corpus.from_pairs([("zzz", "xx")]).sentences, test.registry)
    acc, preds = evaluate_model(mnb_small, extra)
    assert len(preds) == len(test)
    assert acc == 1.0


def test_ngram_sweep(disjoint_split):
    train, test = disjoint_split
    rows = ngram_sweep(train, test, "mnb", "char", [1, 2, 3])
    assert [r.n for r in rows] == [1, 2, 3]
    assert [r.spec for r in rows] == ["char:1-1:restricted", "char:1-2:restricted", "char:1-3:restricted"]
    assert all(0 <= r.accuracy <= 1 for r in rows)
    f = io.StringIO()
    write_sweep_csv(rows, f)
    assert f.getvalue().splitlines()[0] == "n,spec,accuracy"
    with pytest.raises(LideError):
        ngram_sweep(train, test, "svm", "char", [1])


def test_prefix_scan_shape(mnb_small, disjoint_split):
    sentence = disjoint_split[1].texts[0]
    traj = prefix_scan(mnb_small, sentence)
    assert len(traj) == len(sentence.split())
    assert traj.steps[-1].prefix == sentence.rstrip()
    assert traj.steps[-1].label == mnb_small.predict([sentence])[0]
    for s in traj.steps:
        assert s.proba.sum() == pytest.approx(1.0)


def test_prefix_scan_single_word_and_empty(mnb_small):
    assert len(prefix_scan(mnb_small, "  word  ")) == 1
    with pytest.raises(LideError):
        prefix_scan(mnb_small, "   ")


def test_prefix_scan_switches_and_tsv(mnb_small, disjoint_split):
    train, _ = disjoint_split
    # Start in one language and finish in another.
    a = next(s.text for s in train if s.label == "bg").split()[0]
    b = next(s.text for s in train if s.label == "cz")
    traj = prefix_scan(mnb_small, a + " " + b + " " + b)
    assert traj.labels()[0] == "bg" and traj.labels()[-1] == "cz"
    assert traj.switches()
    f = io.StringIO()
    traj.write_tsv(f)
    lines = f.getvalue().splitlines()
    assert len(lines) == len(traj)
    k, prefix, label, probs = lines[0].split("\t")
    assert k == "1" and label == "bg" and len(probs.split(",")) == 3
    assert np.isclose(sum(map(float, probs.split(","))), 1.0)
