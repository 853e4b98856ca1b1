"""Smoke test for the hategraph Python bindings.

Build and install first:
    pip install --no-build-isolation -e crates/python
Then run:
    python python/smoke_test.py
"""

import json
import math
import random
import tempfile
from pathlib import Path

import hategraph


def check(cond, msg):
    if not cond:
        raise AssertionError(msg)
    print(f"ok   {msg}")


def test_preprocess():
    text = "RT @user: Check http://t.co/x &amp; THIS out!!"
    cleaned = hategraph.clean_tweet(text)
    check("http" not in cleaned and "@user" not in cleaned, "clean_tweet strips urls and mentions")
    tokens, canonical = hategraph.normalize(text)
    check("this" not in tokens and "check" in tokens, "normalize removes stopwords")
    check(canonical == " ".join(tokens), "canonical form joins tokens")


def test_graphs():
    g = hategraph.NGramGraph("abcd", n=3, window=3)
    check(g.edge_count == 1 and g.weight("abc", "bcd") == 2.0, "abcd yields one doubled edge")
    a = hategraph.NGramGraph("hello world")
    vs, ss, nvs = hategraph.similarity(a, a)
    check(math.isclose(vs, 1.0) and math.isclose(ss, 1.0) and math.isclose(nvs, 1.0), "self similarity is 1")
    b = hategraph.NGramGraph("hello there")
    vs, ss, nvs = a.similarity(b)
    check(0.0 <= vs <= ss <= 1.0, "0 <= VS <= SS <= 1")
    check(math.isclose(nvs, vs / ss), "NVS = VS / SS")
    m = hategraph.NGramGraph.merge([a, a])
    check(m.edges() == a.edges(), "merging identical graphs is the identity")


def test_metrics():
    s = hategraph.scores([[1, 0], [1, 2]])
    check(abs(s["micro_f"] - 0.75) < 1e-12, "micro F of [[1,0],[1,2]]")
    check(abs(s["macro_f"] - 11 / 15) < 1e-12, "macro F of [[1,0],[1,2]]")
    cm = hategraph.confusion([0, 0, 1, 1], [0, 1, 1, 1], 2)
    check(cm == [[1, 1], [0, 2]], "confusion tally")
    base = hategraph.majority_baseline([24463, 14548])
    check(abs(base["macro_f"] - 0.3854) < 1e-3, "majority baseline macro F")


def test_distributions():
    q = hategraph.studentized_range_quantile(0.95, 3, 10.0)
    check(abs(q - 3.877) < 0.01, f"q(0.95, 3, 10) = {q:.4f}")
    p = hategraph.f_upper_tail(13.5, 1.0, 4.0)
    try:
        from scipy import stats

        check(abs(p - stats.f.sf(13.5, 1, 4)) < 1e-9, "F tail agrees with scipy")
        ref = stats.studentized_range.cdf(3.5, 4, 12)
        check(abs(hategraph.studentized_range_cdf(3.5, 4, 12.0) - ref) < 1e-6, "studentized range CDF agrees with scipy")
    except ImportError:
        check(abs(p - 0.0213) < 1e-3, "F tail p-value")


def test_classifier():
    rng = random.Random(0)
    x = [[rng.gauss(0, 1) + 3 * c, rng.gauss(0, 1)] for c in (0, 1) for _ in range(40)]
    y = ["neg"] * 40 + ["pos"] * 40
    for alg in ["NB", "LR", "KNN", "RF", "MLP"]:
        params = {"trees": 20} if alg == "RF" else None
        clf = hategraph.Classifier.train(x, y, algorithm=alg, seed=1, params=params)
        pred = clf.predict_batch(x)
        acc = sum(p == t for p, t in zip(pred, y)) / len(y)
        check(acc > 0.9, f"{alg} training accuracy {acc:.2f}")
        again = hategraph.Classifier.from_json(clf.to_json())
        check(again.predict_batch(x) == pred, f"{alg} survives a JSON round trip")
        check(abs(sum(clf.class_scores(x[0])) - 1.0) < 1e-9, f"{alg} class scores sum to 1")


def test_runner():
    rng = random.Random(3)
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        with open(tmp / "hsol.csv", "w") as f:
            f.write(",count,class,tweet\n")
            for i in range(20):
                cls = 0 if i % 2 == 0 else 2
                letters = "abcde" if cls == 0 else "vwxyz"
                words = ["".join(rng.choice(letters) for _ in range(5)) for _ in range(6)]
                f.write(f"{i},3,{cls},{' '.join(words)}\n")
        cfg = {
            "task": "binary-combined",
            "datasets": {"hsol": {"path": "hsol.csv"}},
            "features": ["ngg"],
            "classifiers": [{"algorithm": "LR"}],
            "folds": 2,
        }
        (tmp / "cfg.json").write_text(json.dumps(cfg))
        resolved = json.loads(hategraph.validate_config(str(tmp / "cfg.json")))
        check(resolved["folds"] == 2, "validate_config resolves the config")
        out = hategraph.run_experiment(str(tmp / "cfg.json"), out=str(tmp / "out"))
        check(out["records"] == 2 and out["failed"] == 0, "run_experiment writes one record per fold")
        names = sorted(p.name for p in (tmp / "out").iterdir())
        check(names == ["manifest.json", "results.csv", "significance.md"], "output directory layout")
        try:
            bad = dict(cfg, folds=1)
            (tmp / "bad.json").write_text(json.dumps(bad))
            hategraph.validate_config(str(tmp / "bad.json"))
            check(False, "k=1 rejected")
        except ValueError as e:
            check("folds" in str(e), "k=1 rejected")


if __name__ == "__main__":
    test_preprocess()
    test_graphs()
    test_metrics()
    test_distributions()
    test_classifier()
    test_runner()
    print("all smoke tests passed")
