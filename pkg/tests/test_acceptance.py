"""Acceptance suite: one test per release criterion, with pinned tolerances
and runtime budgets. Run with `pytest tests/test_acceptance.py -v -s` to see
the per-criterion pass lines.
"""
import json
import math
import time
from contextlib import contextmanager

import numpy as np
import pytest

from sensedrift import cli
from sensedrift.bundle import EmbeddingMatrix
from sensedrift.clustering import (
    AffinityConfig,
    KMeansConfig,
    joint_cluster,
    kmeans,
)
from sensedrift.evaluation import evaluate, spearman
from sensedrift.measures import ChangeScore, jsd, max_square, prt, usage_distribution
from sensedrift.numerics import cosine_distance
from sensedrift.synth import DriftSpec, SenseSpec, analytic_jsd, analytic_ms, generate

from helpers import make_matrix, write_test_bundle
from test_clustering import best_bipartition
from test_evaluation import classical_spearman
from test_measures import jsd_reference


@contextmanager
def criterion(name, budget_seconds):
    start = time.perf_counter()
    yield
    elapsed = time.perf_counter() - start
    assert elapsed < budget_seconds, (
        f"{name}: {elapsed:.1f}s exceeded the {budget_seconds}s budget"
    )
    print(f"\n[PASS] {name} ({elapsed:.1f}s < {budget_seconds}s)")


def drift_spec(seed):
    """3 senses, separation 40 sigma, n=500 per period, weights flip 0.8<->0.1."""
    return DriftSpec(
        lemma="w",
        senses=tuple(
            SenseSpec(mean=m, sigma=1.0)
            for m in [(0.0, 0.0, 0.0, 0.0), (40.0, 0.0, 0.0, 0.0), (0.0, 40.0, 0.0, 0.0)]
        ),
        weights_earlier=(0.8, 0.1, 0.1),
        weights_later=(0.1, 0.1, 0.8),
        n_per_period=500,
        seed=seed,
    )


def test_criterion_formula_suite():
    """Measure-formula reference points at 1e-9."""
    with criterion("formula suite", 1.0):
        tol = 1e-9
        # prototype distance
        assert cosine_distance([3.0, 4.0], [3.0, 4.0]) == pytest.approx(0.0, abs=tol)
        assert cosine_distance([1.0, 0.0], [0.0, 1.0]) == pytest.approx(1.0, abs=tol)
        rows = [[1.0, 2.0], [3.0, 4.0]]
        assert prt(make_matrix("w", "a", rows), make_matrix("w", "b", rows)).value == pytest.approx(0.0, abs=tol)
        # usage distribution
        assert usage_distribution([0, 0, 1, 2], 3).tolist() == [0.5, 0.25, 0.25]
        # divergence
        assert jsd([1.0, 0.0], [0.0, 1.0]) == pytest.approx(1.0, abs=tol)
        assert jsd([0.25, 0.75], [0.25, 0.75]) == pytest.approx(0.0, abs=tol)
        # max square
        assert max_square([0.5, 0.5], [1.0, 0.0]) == pytest.approx(0.25, abs=tol)
        assert max_square([1.0, 0.0], [0.0, 1.0]) == pytest.approx(1.0, abs=tol)


def test_criterion_definitional_oracles():
    """jsd and spearman against straight-from-definition implementations."""
    with criterion("definitional oracles", 10.0):
        rng = np.random.default_rng(101)
        for _ in range(1000):
            k = int(rng.integers(2, 9))
            p = rng.dirichlet(np.ones(k))
            q = rng.dirichlet(np.ones(k))
            assert jsd(p, q) == pytest.approx(
                jsd_reference(p.tolist(), q.tolist()), abs=1e-12
            )
        for _ in range(1000):
            n = int(rng.integers(3, 51))
            x = rng.normal(size=n)
            y = rng.normal(size=n)
            rho, _ = spearman(x, y, permutations=1)
            assert rho == pytest.approx(classical_spearman(x, y), abs=1e-9)


def test_criterion_clustering_optimality():
    """Best-of-32 k-means equals the exhaustive bipartition optimum, n <= 8."""
    with criterion("clustering optimality", 30.0):
        rng = np.random.default_rng(202)
        for trial in range(200):
            n = int(rng.integers(2, 9))
            points = rng.normal(size=(n, 2)) * float(rng.uniform(0.5, 5.0))
            expected, _ = best_bipartition(points)
            got = kmeans(points, KMeansConfig(k=2, restarts=32, seed=trial)).inertia
            assert got == pytest.approx(expected, rel=1e-9, abs=1e-12)


def test_criterion_planted_drift_end_to_end():
    """kmeans recovers the analytic scores, AP recovers the sense count."""
    with criterion("planted drift end-to-end", 120.0):
        kmeans_ok = 0
        affinity_ok = 0
        ap_config = AffinityConfig(max_iterations=300, convergence_iterations=15)
        for seed in range(100):
            spec = drift_spec(seed)
            earlier, later = generate(spec, ("t0", "t1"))

            jc = joint_cluster(earlier, later, "kmeans", KMeansConfig(k=3, seed=seed))
            p = usage_distribution(jc.labels_earlier, jc.k)
            q = usage_distribution(jc.labels_later, jc.k)
            if (
                abs(jsd(p, q) - analytic_jsd(spec)) <= 0.05
                and abs(max_square(p, q) - analytic_ms(spec)) <= 0.05
            ):
                kmeans_ok += 1

            ja = joint_cluster(earlier, later, "affinity", ap_config)
            if ja.k == 3:
                affinity_ok += 1
        assert analytic_ms(drift_spec(0)) == pytest.approx(0.49, abs=1e-12)
        print(f"\n  kmeans within 0.05: {kmeans_ok}/100, affinity k=3: {affinity_ok}/100")
        assert kmeans_ok >= 95
        assert affinity_ok >= 90


def engineered_rho_049():
    """Rank vectors with spearman rho exactly 0.49 (n=25, sum d^2 = 1326)."""
    x = list(range(1, 26))
    y = list(range(1, 26))
    for i, j in [(0, 24), (1, 10), (11, 13), (14, 15), (16, 17)]:
        y[i], y[j] = y[j], y[i]
    d2 = sum((a - b) ** 2 for a, b in zip(x, y))
    assert d2 == 1326 and 1 - 6 * d2 / (25 * (25 ** 2 - 1)) == 0.49
    return x, y


def test_criterion_evaluation_arithmetic():
    """Engineered rho reproduced at 1e-9; stars follow the permutation test."""
    with criterion("evaluation arithmetic", 60.0):
        x, y = engineered_rho_049()
        scores = [ChangeScore(f"w{i:02d}", "prt", ("a", "b"), float(v)) for i, v in enumerate(x)]
        gold_rows = [
            f"w{i:02d}\t{v}\t{1.0 + (i % 4) * 0.5}\t1.0" for i, v in enumerate(y)
        ]
        import sensedrift.evaluation as ev
        gold = [
            ev.GoldRecord(r.split("\t")[0], float(r.split("\t")[1]),
                          float(r.split("\t")[2]), 1.0)
            for r in gold_rows
        ]
        results = evaluate(scores, gold, 0.05, permutations=20_000, seed=0)
        delta = next(r for r in results if r.gold_measure == "delta-later")
        assert delta.rho == pytest.approx(0.49, abs=1e-9)
        assert delta.significant == (delta.p_value < 0.05)
        assert delta.significant  # true rho 0.49 at n=25 sits well under alpha

        # exact 2/n! stars at small n
        for n, expect_star in ((5, True), (3, False)):
            rho, p = spearman(list(range(n)), list(range(n)))
            assert rho == pytest.approx(1.0)
            assert p == pytest.approx(2.0 / math.factorial(n), abs=1e-15)
            assert (p < 0.05) == expect_star

        # compare inversion: spearman(x, 1 - y) == -spearman(x, y)
        rng = np.random.default_rng(404)
        for _ in range(100):
            n = int(rng.integers(5, 40))
            a = rng.normal(size=n)
            b = rng.normal(size=n)
            forward, _ = spearman(a, b, permutations=1)
            inverted, _ = spearman(a, 1.0 - b, permutations=1)
            assert inverted == pytest.approx(-forward, abs=1e-12)


@pytest.fixture
def synth_cli_bundle(tmp_path):
    payload = {
        "periods": ["t0", "t1"],
        "seed": 9,
        "words": [
            {
                "lemma": f"w{i}",
                "n_per_period": 40,
                "senses": [
                    {"mean": [0, 0, 0], "sigma": 1.0},
                    {"mean": [30, 0, 0], "sigma": 1.0},
                ],
                "weights_earlier": [0.9, 0.1],
                "weights_later": [round(0.9 - 0.2 * i, 2), round(0.1 + 0.2 * i, 2)],
            }
            for i in range(4)
        ],
    }
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps(payload))
    bundle = tmp_path / "bundle"
    assert cli.main(["synth", str(spec), str(bundle)]) == 0
    assert cli.main(["validate", str(bundle)]) == 0
    return bundle


def test_criterion_determinism(synth_cli_bundle, tmp_path):
    """score + evaluate bytes are fixed by the seed, jobs > 1 included."""
    with criterion("determinism", 120.0):
        outputs = []
        for jobs, tag in (("1", "run1"), ("1", "run2"), ("3", "jobs3")):
            scores = tmp_path / f"scores-{tag}.tsv"
            report = tmp_path / f"report-{tag}.tsv"
            log = tmp_path / f"log-{tag}.txt"
            assert cli.main([
                "--seed", "123", "--jobs", jobs,
                "score", "--bundle", str(synth_cli_bundle),
                "--earlier", "t0", "--later", "t1",
                "--k", "2", "--restarts", "6",
                "-o", str(scores), "--log-file", str(log),
            ]) == 0
            assert cli.main([
                "--seed", "123",
                "evaluate", "--scores", str(scores),
                "--gold", str(synth_cli_bundle / "gold.tsv"),
                "--permutations", "2000", "-o", str(report),
            ]) == 0
            outputs.append((scores.read_bytes(), report.read_bytes(), log.read_bytes()))
        assert outputs[0] == outputs[1] == outputs[2]


def test_criterion_sampling_cap(tmp_path):
    """A 12000-usage word is clustered on exactly 10000 rows."""
    with criterion("sampling cap", 120.0):
        rng = np.random.default_rng(777)
        big = rng.normal(size=(12_000, 4)).astype(np.float32)
        big[:6000, 0] += 25.0  # two senses so clustering has structure
        small = rng.normal(size=(200, 4)).astype(np.float32)
        write_test_bundle(
            tmp_path / "b",
            [EmbeddingMatrix("big", "t0", big), EmbeddingMatrix("big", "t1", small)],
            periods=["t0", "t1"],
        )
        out = tmp_path / "scores.tsv"
        log = tmp_path / "log.txt"
        assert cli.main([
            "score", "--bundle", str(tmp_path / "b"),
            "--earlier", "t0", "--later", "t1",
            "--methods", "kmeans-jsd", "--k", "2", "--restarts", "4",
            "-o", str(out), "--log-file", str(log),
        ]) == 0
        log_text = log.read_text()
        assert "[sample] lemma=big period=t0 usages=12000 kept=10000" in log_text
        assert "[cluster] lemma=big method=kmeans n_earlier=10000 n_later=200" in log_text
        assert len(out.read_text().splitlines()) == 2  # header + the scored word
