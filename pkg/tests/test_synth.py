import numpy as np
import pytest

from imprintlab import errors
from imprintlab.diagnostics import moments
from imprintlab.head import predict_batch
from imprintlab.synth import (
    SynthKind,
    SynthPreset,
    generate,
    interference_experiment,
    multi_seed_interference,
)


def small(kind, **kw):
    defaults = dict(num_classes=10, dim=64, samples_per_class=12, seed=5)
    defaults.update(kw)
    return SynthPreset(kind=kind, **defaults)


def test_deterministic_under_seed():
    p = small(SynthKind.CNN_LIKE)
    h1, tr1, te1 = generate(p)
    h2, tr2, te2 = generate(p)
    assert h1.weights.tobytes() == h2.weights.tobytes()
    assert h1.bias.tobytes() == h2.bias.tobytes()
    assert tr1.rows.tobytes() == tr2.rows.tobytes()
    assert te1.rows.tobytes() == te2.rows.tobytes()


def test_spread_to_zero_gives_perfect_test_accuracy():
    p = small(SynthKind.CNN_LIKE, cluster_spread=1e-3)
    head, train, test = generate(p)
    preds = predict_batch(head, test.rows)
    assert float(np.mean(preds == test.labels)) == 1.0


def test_cnn_like_distribution_shapes():
    p = SynthPreset(kind=SynthKind.CNN_LIKE, num_classes=20, dim=256,
                    samples_per_class=20, seed=1)
    head, train, _ = generate(p)
    x_skew = moments(train.rows).skewness
    w_skew = moments(head.weights).skewness
    assert x_skew > 1.0
    assert abs(w_skew) < 0.3


def test_vit_like_shapes_match():
    p = SynthPreset(kind=SynthKind.VIT_LIKE, num_classes=20, dim=256,
                    samples_per_class=20, seed=1)
    head, train, _ = generate(p)
    gap = abs(moments(train.rows).skewness - moments(head.weights).skewness)
    assert gap < 0.3


def test_generated_head_self_accuracy_floor():
    for kind in SynthKind:
        for seed in range(3):
            p = small(kind, seed=seed)
            head, train, _ = generate(p)
            own = train.rows[train.labels < p.num_classes]
            labels = train.labels[train.labels < p.num_classes]
            acc = float(np.mean(predict_batch(head, own) == labels))
            assert acc >= 0.9


def test_unsatisfiable_spread_raises():
    with pytest.raises(errors.UnsatisfiableSpecError):
        generate(small(SynthKind.CNN_LIKE, cluster_spread=100.0))


def test_holdout_classes_extend_embeddings_not_head():
    p = small(SynthKind.VIT_LIKE)
    head, train, test = generate(p, holdout_classes=3)
    assert head.num_classes == 10
    assert train.num_classes == 13
    assert set(train.labels.tolist()) == set(range(13))
    assert train.class_names == test.class_names


def test_original_rows_untouched_by_experiment():
    p = small(SynthKind.CNN_LIKE)
    head, _, _ = generate(p, holdout_classes=2)
    report = interference_experiment(p, new_classes=2, shots=3)
    # the experiment regenerates the same universe internally; its done-path
    # head must keep the original rows bit-identical, which evaluate already
    # saw; here we re-run the construction to assert it directly
    from imprintlab.imprinting import add_class_done, build_reference_profile
    _, train, _ = generate(p, holdout_classes=2)
    profile = build_reference_profile(head)
    out = head
    for c in (10, 11):
        rows = np.flatnonzero(train.labels == c)[:3]
        vec = np.mean([train.rows[i] for i in rows], axis=0)
        out = add_class_done(out, vec, train.class_names[c], profile=profile)
    assert out.weights[:10].tobytes() == head.weights.tobytes()
    assert out.bias[:10].tobytes() == head.bias.tobytes()
    assert report.done.interference_fraction >= 0.0


def test_no_new_classes_no_interference():
    p = small(SynthKind.CNN_LIKE)
    report = interference_experiment(p, new_classes=0, shots=1)
    assert report.done.interference_fraction == 0.0
    assert report.qi.interference_fraction == 0.0
    assert report.done.new_class_accuracy is None


def test_interference_ordering_smoke():
    # the acceptance suite runs the full 20-seed version; 3 seeds here
    out = multi_seed_interference(
        SynthPreset(kind=SynthKind.CNN_LIKE, seed=0), new_classes=8, shots=10,
        seeds=3,
    )
    assert out["median"]["qi_interference"] >= 5 * out["median"]["done_interference"]
    assert out["median"]["qi_interference"] > 0.05


def test_vit_like_interference_small_both_ways():
    out = multi_seed_interference(
        SynthPreset(kind=SynthKind.VIT_LIKE, seed=0), new_classes=8, shots=10,
        seeds=3,
    )
    done_med = out["median"]["done_interference"]
    qi_med = out["median"]["qi_interference"]
    assert done_med <= 2 * qi_med and qi_med <= 2 * done_med
    assert qi_med < 0.05 and done_med < 0.05
