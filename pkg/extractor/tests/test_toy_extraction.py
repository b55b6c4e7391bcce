import json
import struct

from imprint_extractor.backbones import ToyBackbone, load_backbone
from imprint_extractor.cli import main
from imprint_extractor.extract import (
    extract_embeddings,
    extract_embeddings_with_runtime_labels,
    extract_head,
)

from conftest import run_primary


def test_shape_contract(image_root):
    data = extract_embeddings("toy", str(image_root))
    version, s, m, c = struct.unpack("<IIII", data[4:20])
    assert (version, s, m, c) == (1, 12, ToyBackbone.FEATURE_DIM, 3)


def test_extraction_deterministic(image_root):
    a = extract_embeddings("toy", str(image_root))
    b = extract_embeddings("toy", str(image_root))
    assert a == b
    assert extract_head("toy") == extract_head("toy")


def test_files_pass_consumer_validation(image_root, tmp_path):
    emb_path = tmp_path / "x.emb"
    head_path = tmp_path / "h.hed"
    emb_path.write_bytes(extract_embeddings("toy", str(image_root)))
    head_path.write_bytes(extract_head("toy"))

    # the consumer toolkit parses both containers through its own CLI
    proc = run_primary("hist", "--input", str(emb_path), "--bins", "5",
                       "--out", str(tmp_path / "he.csv"))
    assert proc.returncode == 0, proc.stderr
    proc = run_primary("hist", "--input", str(head_path), "--bins", "5",
                       "--out", str(tmp_path / "hh.csv"))
    assert proc.returncode == 0, proc.stderr
    proc = run_primary("profile", "--head", str(head_path),
                       "--out", str(tmp_path / "p.json"))
    assert proc.returncode == 0, proc.stderr


def test_prediction_agreement_with_consumer(image_root, tmp_path):
    # rows labeled with the runtime's own top-1: consumer-side accuracy is
    # exactly the producer/consumer agreement fraction
    emb_path = tmp_path / "agreement.emb"
    head_path = tmp_path / "h.hed"
    emb_path.write_bytes(
        extract_embeddings_with_runtime_labels("toy", str(image_root))
    )
    head_path.write_bytes(extract_head("toy"))
    report_path = tmp_path / "report.json"
    proc = run_primary("eval", "--head", str(head_path),
                       "--queries", str(emb_path),
                       "--report", str(report_path))
    assert proc.returncode == 0, proc.stderr
    report = json.loads(report_path.read_text())
    assert report["accuracy"] >= 0.999


def test_extractor_cli_roundtrip(image_root, tmp_path):
    rc = main(["extract-embeddings", "--backbone", "toy",
               "--images", str(image_root), "--out", str(tmp_path / "x.emb")])
    assert rc == 0
    rc = main(["extract-head", "--backbone", "toy",
               "--out", str(tmp_path / "h.hed")])
    assert rc == 0
    assert (tmp_path / "x.emb").read_bytes()[:4] == b"EMB1"
    assert (tmp_path / "h.hed").read_bytes()[:4] == b"HED1"


def test_unknown_backbone_fails_cleanly(tmp_path, capsys):
    rc = main(["extract-head", "--backbone", "nonesuch",
               "--out", str(tmp_path / "h.hed")])
    assert rc == 1
    assert "ModelLoadFailureError" in capsys.readouterr().err


def test_imprint_pipeline_on_extracted_files(image_root, tmp_path):
    # end to end: extracted head + embeddings drive the consumer's class
    # addition, producing a grown head that still validates
    emb_path = tmp_path / "x.emb"
    head_path = tmp_path / "h.hed"
    emb_path.write_bytes(extract_embeddings("toy", str(image_root)))
    head_path.write_bytes(extract_head("toy"))
    grown = tmp_path / "grown.hed"
    proc = run_primary("imprint", "--head", str(head_path),
                       "--support", str(emb_path),
                       "--method", "done", "--class-name", "apple",
                       "--shots", "3", "--out", str(grown))
    assert proc.returncode == 0, proc.stderr
    version, n, m, flags = struct.unpack("<IIII", grown.read_bytes()[4:20])
    assert (version, n, m, flags) == (1, 11, 64, 0)


def test_toy_backbone_tap_is_rectified(image_root):
    backbone = load_backbone("toy")
    paths = sorted((image_root / "apple").glob("*.png"))
    feats = backbone.features(paths[0])
    assert feats.min() >= 0.0
    assert feats.shape == (ToyBackbone.FEATURE_DIM,)
