"""Acceptance suite: one test per primary criterion, at stated tolerances.

Each test prints a PASS line with its runtime (visible under `pytest -s`)
and asserts its runtime budget.  Run with:  pytest tests/test_acceptance.py -v -s
"""

import hashlib
import json
import statistics
import time
from contextlib import contextmanager

import numpy as np

from imprintlab import formats
from imprintlab.cli import main
from imprintlab.diagnostics import pca
from imprintlab.evaluation import EpisodeSpec, run_episodes, sample_episode
from imprintlab.formats import ClassifierHead
from imprintlab.head import cosine_similarity, logits, predict
from imprintlab.imprinting import (
    ImprintMethod,
    ReferenceProfile,
    add_class_done,
    build_reference_profile,
    qi_modify_head,
    quantile_normalize,
)
from imprintlab.synth import SynthKind, SynthPreset, generate

from conftest import f32_values, random_embeddings, random_head


@contextmanager
def budget(name: str, seconds: float):
    start = time.perf_counter()
    try:
        yield
    except Exception:
        print(f"FAIL {name}")
        raise
    elapsed = time.perf_counter() - start
    print(f"PASS {name} ({elapsed:.2f}s, budget {seconds:.0f}s)")
    assert elapsed < seconds, f"{name} exceeded its {seconds}s budget ({elapsed:.2f}s)"


def test_quantile_normalization_exactness():
    with budget("quantile-normalization exactness (1000 pairs)", 5.0):
        rng = np.random.default_rng(101)
        dims = [2, 3, 17, 768]
        for i in range(1000):
            m = dims[i % len(dims)]
            ref = np.sort(rng.standard_normal(m))[::-1]
            profile = ReferenceProfile(sorted_weights=ref, median_bias=0.0,
                                       source_dims=(1, m))
            x = f32_values(rng, m)
            out = quantile_normalize(x, profile)

            # multiset equality, exact
            assert np.array_equal(np.sort(out)[::-1], ref)
            # rank order preserved: walking x's (value, index) order down the
            # profile reproduces the output exactly
            order = np.argsort(-x, kind="stable")
            assert np.array_equal(out[order], ref)
            # monotone-transform invariance, bitwise
            assert np.array_equal(quantile_normalize(4.0 * x, profile), out)
            assert np.array_equal(quantile_normalize(x ** 3, profile), out)
            # idempotence, bitwise (reference values are distinct a.s.)
            assert np.array_equal(quantile_normalize(out, profile), out)


def test_reference_profile_oracle():
    with budget("reference-profile oracle (200 heads)", 5.0):
        hand = ClassifierHead(weights=np.asarray([[4.0, 3.0], [2.0, 1.0]]),
                              bias=np.asarray([1.0, 3.0]), class_names=("a", "b"))
        profile = build_reference_profile(hand)
        assert profile.sorted_weights.tolist() == [3.5, 1.5]
        assert profile.median_bias == 2.0

        rng = np.random.default_rng(202)
        for _ in range(200):
            n = int(rng.integers(1, 51))
            m = int(rng.integers(1, 65))
            head = random_head(rng, n, m)
            got = build_reference_profile(head)
            flat = sorted((float(v) for v in head.weights.reshape(-1)), reverse=True)
            want = [statistics.median(flat[r * n:(r + 1) * n]) for r in range(m)]
            assert got.sorted_weights.tolist() == want
            assert got.median_bias == statistics.median(float(b) for b in head.bias)


def test_done_non_interference():
    with budget("done non-interference (8 additions, 100 queries)", 5.0):
        rng = np.random.default_rng(303)
        for _ in range(5):
            n = int(rng.integers(3, 41))
            m = int(rng.integers(4, 97))
            head = random_head(rng, n, m)
            profile = build_reference_profile(head)
            grown = head
            for k in range(8):
                grown = add_class_done(grown, f32_values(rng, m), f"new{k}",
                                       profile=profile)
            assert grown.weights[:n].tobytes() == head.weights.tobytes()
            assert grown.bias[:n].tobytes() == head.bias.tobytes()
            for _ in range(100):
                x = f32_values(rng, m)
                assert logits(grown, x)[:n].tobytes() == logits(head, x).tobytes()


def test_qi_head_contract():
    with budget("qi-head contract (1000 queries)", 5.0):
        rng = np.random.default_rng(404)
        head = qi_modify_head(random_head(rng, 30, 64))
        norms = np.sqrt((head.weights ** 2).sum(axis=1))
        assert np.max(np.abs(norms - 1.0)) < 1e-6
        assert np.all(head.bias == 0.0)
        for _ in range(1000):
            x = f32_values(rng, 64)
            cos = [cosine_similarity(x, head.weights[i]) for i in range(30)]
            assert predict(head, x) == int(np.argmax(cos))


def test_interference_reproduction(tmp_path):
    with budget("interference reproduction (cnn-like vs vit-like, 20 seeds)", 60.0):
        reports = {}
        for preset in ("cnn-like", "vit-like"):
            out = tmp_path / f"{preset}.json"
            rc = main(["interfere", "--preset", preset, "--new-classes", "8",
                       "--shots", "10", "--seeds", "20", "--report", str(out)])
            assert rc == 0
            reports[preset] = json.loads(out.read_text())["median"]

        cnn = reports["cnn-like"]
        assert cnn["qi_interference"] >= 5.0 * cnn["done_interference"]
        # guard against a vacuous pass with both medians at zero
        assert cnn["qi_interference"] >= 0.05

        vit = reports["vit-like"]
        assert vit["done_interference"] <= 2.0 * vit["qi_interference"]
        assert vit["qi_interference"] <= 2.0 * vit["done_interference"]


def test_k_shot_trend():
    with budget("k-shot trend (vit-like, 20 seeds, both methods)", 60.0):
        for method in ImprintMethod:
            acc = {1: [], 10: []}
            for seed in range(20):
                preset = SynthPreset(kind=SynthKind.VIT_LIKE, seed=seed)
                _, train, _ = generate(preset)
                for shots in (1, 10):
                    spec = EpisodeSpec(ways=5, shots=shots, queries_per_class=15,
                                       episodes=5, seed=seed, method=method)
                    acc[shots].append(run_episodes(train, None, spec).mean_accuracy)
            assert np.mean(acc[10]) >= np.mean(acc[1]), method


def test_episode_determinism_and_oracle(tmp_path):
    with budget("episode determinism + cosine-prototype oracle (50 episodes)", 30.0):
        pool_dir = tmp_path / "pool"
        assert main(["synth", "--preset", "vit-like", "--classes", "10",
                     "--dim", "48", "--per-class", "20", "--seed", "3",
                     "--out-dir", str(pool_dir)]) == 0
        args = ["episode", "--pool", str(pool_dir / "train.emb"),
                "--ways", "5", "--shots", "1", "--queries", "15",
                "--episodes", "50", "--seed", "42", "--method", "qi"]
        r1, r2 = tmp_path / "r1.json", tmp_path / "r2.json"
        assert main(args + ["--report", str(r1)]) == 0
        assert main(args + ["--report", str(r2)]) == 0
        d1 = hashlib.sha256(r1.read_bytes()).hexdigest()
        d2 = hashlib.sha256(r2.read_bytes()).hexdigest()
        assert d1 == d2

        pool = formats.read_embeddings((pool_dir / "train.emb").read_bytes())
        spec = EpisodeSpec(ways=5, shots=1, queries_per_class=15, episodes=50,
                           seed=42, method=ImprintMethod.QI)
        summary = run_episodes(pool, None, spec)
        body = json.loads(r1.read_text())
        for record, row in zip(summary.records, body["episodes"]):
            sample = sample_episode(pool, spec, record.index)
            protos = []
            for rows in sample.support_rows:
                vecs = [pool.rows[i] / np.linalg.norm(pool.rows[i]) for i in rows]
                protos.append(np.mean(vecs, axis=0))
            correct = 0
            for pos, rows in enumerate(sample.query_rows):
                for i in rows:
                    x = pool.rows[i]
                    cos = [float(x @ p) / (np.linalg.norm(x) * np.linalg.norm(p))
                           for p in protos]
                    correct += int(max(range(5), key=lambda k: (cos[k], -k)) == pos)
            assert record.correct == correct == row["correct"]


def test_pca_contract():
    with budget("pca orthonormality/reconstruction/oracle (20 matrices)", 10.0):
        rng = np.random.default_rng(505)
        for trial in range(20):
            r = int(rng.integers(4, 24))
            m = int(rng.integers(3, 16))
            rows = rng.standard_normal((r, m))
            k = min(r, m)
            result = pca(rows, k)

            gram = result.components @ result.components.T
            assert np.max(np.abs(gram - np.eye(k))) < 1e-8

            rebuilt = result.projections @ result.components + result.mean_row
            assert np.max(np.abs(rebuilt - rows)) < 1e-8

            xc = rows - rows.mean(axis=0)
            evals = np.linalg.eigvalsh(xc.T @ xc / (r - 1))[::-1]
            got = result.explained_variance
            assert np.max(np.abs(got - np.maximum(evals[:k], 0.0))) < 1e-8


def test_format_roundtrip_500():
    with budget("format round-trip (500 random values)", 5.0):
        rng = np.random.default_rng(606)
        for _ in range(250):
            emb = random_embeddings(rng, int(rng.integers(1, 9)),
                                    int(rng.integers(1, 12)), int(rng.integers(1, 4)))
            back = formats.read_embeddings(formats.write_embeddings(emb))
            assert back.rows.tobytes() == emb.rows.tobytes()
            assert back.labels.tolist() == emb.labels.tolist()
            assert back.class_names == emb.class_names
        for _ in range(250):
            head = random_head(rng, int(rng.integers(1, 9)), int(rng.integers(1, 12)))
            back = formats.read_head(formats.write_head(head))
            assert back.weights.tobytes() == head.weights.tobytes()
            assert back.bias.tobytes() == head.bias.tobytes()
            assert back.class_names == head.class_names
