"""Command-line entry point.

Subcommands: profile, imprint, eval, episode, pca, hist, synth, interfere.
Usage errors exit 2 (argparse), data/validation errors exit 1 with the error
type on stderr, success exits 0.  Outputs are written atomically (temp file
then rename) and identical inputs + flags + seed produce byte-identical
output files.  IMPRINTLAB_THREADS caps numeric-library parallelism and must
be honored before numpy loads, so the heavy imports happen inside main().
"""

from __future__ import annotations

import argparse
import os
import sys


def _setup_threads():
    cap = os.environ.get("IMPRINTLAB_THREADS")
    if not cap:
        return
    for var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, cap)


def _write_atomic(path: str, data) -> None:
    tmp = path + ".tmp"
    mode = "wb" if isinstance(data, bytes) else "w"
    with open(tmp, mode) as f:
        f.write(data)
    os.replace(tmp, path)


def _read_any(path: str):
    """Load either container by magic; fall back to CSV for embeddings."""
    from . import formats
    from .errors import BadMagicError

    with open(path, "rb") as f:
        data = f.read()
    if data[:4] == b"EMB1":
        return formats.read_embeddings(data)
    if data[:4] == b"HED1":
        return formats.read_head(data)
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError:
        raise BadMagicError(f"{path}: unrecognized container")
    if text.startswith("label,"):
        return formats.read_embeddings_csv(text)
    raise BadMagicError(f"{path}: unrecognized container")


def _read_embeddings(path: str):
    from .errors import BadMagicError
    from .formats import EmbeddingSet

    obj = _read_any(path)
    if not isinstance(obj, EmbeddingSet):
        raise BadMagicError(f"{path}: expected an embedding set")
    return obj


def _read_head(path: str):
    from .errors import BadMagicError
    from .formats import ClassifierHead

    obj = _read_any(path)
    if not isinstance(obj, ClassifierHead):
        raise BadMagicError(f"{path}: expected a classifier head")
    return obj


def _profile_to_json(profile) -> dict:
    return {
        "schema": 1,
        "source_dims": list(profile.source_dims),
        "median_bias": profile.median_bias,
        "sorted_weights": profile.sorted_weights.tolist(),
    }


def _profile_from_json(path: str):
    import json

    from .errors import InvariantViolationError
    from .imprinting import ReferenceProfile

    try:
        with open(path) as f:
            raw = json.load(f)
        return ReferenceProfile(
            sorted_weights=raw["sorted_weights"],
            median_bias=float(raw["median_bias"]),
            source_dims=tuple(raw["source_dims"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InvariantViolationError(f"{path}: malformed profile JSON ({exc})")


def _cmd_profile(args) -> int:
    from . import jsonio
    from .imprinting import build_reference_profile

    head = _read_head(args.head)
    profile = build_reference_profile(head)
    _write_atomic(args.out, jsonio.dump_text(_profile_to_json(profile)))
    return 0


def _cmd_imprint(args) -> int:
    import numpy as np

    from . import formats
    from .errors import (
        InsufficientSamplesError,
        InvariantViolationError,
        UnmappableLabelError,
    )
    from .imprinting import (
        ImprintMethod,
        add_class_done,
        add_class_qi,
        aggregate_shots,
        build_reference_profile,
        qi_modify_head,
    )

    head = _read_head(args.head)
    support = _read_embeddings(args.support)
    method = ImprintMethod.parse(args.method)
    names = [n for n in args.class_name.split(",") if n]
    if not names:
        raise InvariantViolationError("--class-name must name at least one class")

    def shots_for(name: str):
        if name not in support.class_names:
            raise UnmappableLabelError(f"class {name!r} not present in {args.support}")
        class_id = support.class_names.index(name)
        rows = np.flatnonzero(support.labels == class_id)
        if rows.shape[0] < args.shots:
            raise InsufficientSamplesError(
                f"class {name!r} has {rows.shape[0]} support rows, needs {args.shots}"
            )
        # first K samples of the class in file order
        return [support.rows[i] for i in rows[: args.shots]]

    if method is ImprintMethod.QI:
        out = head if head.is_qi_modified else qi_modify_head(head)
        for name in names:
            out = add_class_qi(out, aggregate_shots(shots_for(name), method), name)
    else:
        profile = (
            _profile_from_json(args.profile)
            if args.profile
            else build_reference_profile(head)
        )
        out = head
        for name in names:
            out = add_class_done(
                out, aggregate_shots(shots_for(name), method), name, profile=profile
            )
    _write_atomic(args.out, formats.write_head(out))
    return 0


def _cmd_eval(args) -> int:
    from . import jsonio
    from .evaluation import evaluate

    head = _read_head(args.head)
    queries = _read_embeddings(args.queries)
    new_ids = [int(tok) for tok in args.new_classes.split(",") if tok]
    report = evaluate(head, queries, new_ids)
    _write_atomic(args.report, jsonio.dump_text(report.to_json_dict()))
    return 0


def _cmd_episode(args) -> int:
    from . import jsonio
    from .evaluation import EpisodeSpec, run_episodes
    from .imprinting import ImprintMethod

    pool = _read_embeddings(args.pool)
    base = _read_head(args.base_head) if args.base_head else None
    spec = EpisodeSpec(
        ways=args.ways,
        shots=args.shots,
        queries_per_class=args.queries,
        episodes=args.episodes,
        seed=args.seed,
        method=ImprintMethod.parse(args.method),
    )
    summary = run_episodes(pool, base, spec)
    _write_atomic(args.report, jsonio.dump_text(summary.to_json_dict()))
    return 0


def _csv_float(x: float) -> str:
    return format(float(x), ".17g")


def _cmd_pca(args) -> int:
    import io

    from .diagnostics import pca
    from .errors import BadKError

    head = _read_head(args.head)
    fit_rows = head.weights
    if args.fit_rows is not None:
        if not 2 <= args.fit_rows <= head.num_classes:
            raise BadKError(f"--fit-rows must be in [2, {head.num_classes}]")
        fit_rows = head.weights[: args.fit_rows]
    result = pca(fit_rows, args.components)
    projections = (head.weights - result.mean_row) @ result.components.T

    out = io.StringIO()
    cols = ",".join(f"pc{i + 1}" for i in range(args.components))
    out.write(f"row,name,{cols}\n")
    for i in range(head.num_classes):
        vals = ",".join(_csv_float(v) for v in projections[i])
        out.write(f"{i},{head.class_names[i]},{vals}\n")
    _write_atomic(args.out, out.getvalue())
    print(
        "explained_variance:",
        " ".join(_csv_float(v) for v in result.explained_variance),
    )
    return 0


def _cmd_hist(args) -> int:
    import io

    from .diagnostics import histogram
    from .formats import ClassifierHead

    obj = _read_any(args.input)
    values = obj.weights if isinstance(obj, ClassifierHead) else obj.rows
    edges, counts = histogram(values.reshape(-1), args.bins)
    out = io.StringIO()
    out.write("bin_lo,bin_hi,count\n")
    for i in range(len(counts)):
        out.write(
            f"{_csv_float(edges[i])},{_csv_float(edges[i + 1])},{int(counts[i])}\n"
        )
    _write_atomic(args.out, out.getvalue())
    return 0


def _cmd_synth(args) -> int:
    from . import formats, jsonio
    from .synth import SynthKind, SynthPreset, generate

    preset = SynthPreset(
        kind=SynthKind.parse(args.preset),
        num_classes=args.classes,
        dim=args.dim,
        samples_per_class=args.per_class,
        cluster_spread=args.spread,
        seed=args.seed,
    )
    head, train, test = generate(preset, holdout_classes=args.holdout_classes)
    os.makedirs(args.out_dir, exist_ok=True)
    _write_atomic(os.path.join(args.out_dir, "head.hed"), formats.write_head(head))
    _write_atomic(os.path.join(args.out_dir, "train.emb"), formats.write_embeddings(train))
    _write_atomic(os.path.join(args.out_dir, "test.emb"), formats.write_embeddings(test))
    meta = dict(preset.to_json_dict())
    meta["schema"] = 1
    meta["holdout_classes"] = args.holdout_classes
    _write_atomic(os.path.join(args.out_dir, "meta.json"), jsonio.dump_text(meta))
    return 0


def _cmd_interfere(args) -> int:
    from . import jsonio
    from .synth import SynthKind, SynthPreset, multi_seed_interference

    preset = SynthPreset(
        kind=SynthKind.parse(args.preset),
        num_classes=args.classes,
        dim=args.dim,
        samples_per_class=args.per_class,
        cluster_spread=args.spread,
        seed=args.seed,
    )
    report = multi_seed_interference(preset, args.new_classes, args.shots, args.seeds)
    _write_atomic(args.report, jsonio.dump_text(report))
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="imprintlab",
        description="Classifier-head surgery: imprint new classes without training, "
        "evaluate, benchmark, and inspect weight space.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("profile", help="distill a head into its reference profile")
    p.add_argument("--head", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_profile)

    p = sub.add_parser("imprint", help="add classes to a head from support embeddings")
    p.add_argument("--head", required=True)
    p.add_argument("--support", required=True)
    p.add_argument("--method", required=True, choices=["done", "qi"])
    p.add_argument("--class-name", required=True,
                   help="class name to add; comma-separate to add several "
                        "against one shared profile")
    p.add_argument("--shots", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--profile", default=None,
                   help="reuse a saved reference profile (done method only)")
    p.set_defaults(func=_cmd_imprint)

    p = sub.add_parser("eval", help="top-1 accuracy / interference report")
    p.add_argument("--head", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--new-classes", default="",
                   help="comma-separated head indices counted as newly added")
    p.add_argument("--report", required=True)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("episode", help="seeded N-way K-shot benchmark")
    p.add_argument("--pool", required=True)
    p.add_argument("--base-head", default=None)
    p.add_argument("--ways", type=int, default=5)
    p.add_argument("--shots", type=int, default=1)
    p.add_argument("--queries", type=int, default=15)
    p.add_argument("--episodes", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--method", required=True, choices=["done", "qi"])
    p.add_argument("--report", required=True)
    p.set_defaults(func=_cmd_episode)

    p = sub.add_parser("pca", help="project head rows onto principal axes")
    p.add_argument("--head", required=True)
    p.add_argument("--components", type=int, default=2)
    p.add_argument("--fit-rows", type=int, default=None,
                   help="fit axes on the first K rows only (default: all rows)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_pca)

    p = sub.add_parser("hist", help="value histogram of a head or embedding file")
    p.add_argument("--input", required=True)
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_hist)

    p = sub.add_parser("synth", help="generate a synthetic head + embeddings")
    p.add_argument("--preset", required=True, choices=["cnn-like", "vit-like"])
    p.add_argument("--classes", type=int, default=20)
    p.add_argument("--dim", type=int, default=256)
    p.add_argument("--per-class", type=int, default=40)
    p.add_argument("--spread", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--holdout-classes", type=int, default=0,
                   help="extra embedding-only classes for later imprinting")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("interfere",
                       help="paired imprinting-interference experiment over seeds")
    p.add_argument("--preset", required=True, choices=["cnn-like", "vit-like"])
    p.add_argument("--new-classes", type=int, default=8)
    p.add_argument("--shots", type=int, default=10)
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--classes", type=int, default=20)
    p.add_argument("--dim", type=int, default=256)
    p.add_argument("--per-class", type=int, default=40)
    p.add_argument("--spread", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", required=True)
    p.set_defaults(func=_cmd_interfere)

    return parser


def main(argv=None) -> int:
    _setup_threads()
    from .errors import ImprintLabError

    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ImprintLabError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
