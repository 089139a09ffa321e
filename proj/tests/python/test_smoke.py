import json
import os
from pathlib import Path

import numpy as np
import pytest

import somlist

FIXTURES = Path(os.environ.get("SOM_FIXTURES_DIR", Path(__file__).resolve().parents[1] / "fixtures"))


def test_rle_round_trip():
    rng = np.random.default_rng(5)
    for _ in range(20):
        h, w = rng.integers(1, 40, size=2)
        mask = (rng.random((h, w)) > 0.5).astype(np.uint8)
        counts = somlist.rle_encode(mask)
        assert sum(counts) == h * w
        assert np.array_equal(somlist.rle_decode(int(h), int(w), counts), mask)
        assert somlist.rle_counts_from_string(somlist.rle_counts_to_string(counts)) == counts


def test_square_anchor_and_distance():
    mask = np.ones((9, 9), dtype=np.uint8)
    assert somlist.anchor_point(mask) == (4, 4)
    assert somlist.chebyshev_distance(mask)[4, 4] == 5
    with pytest.raises(somlist.DataError):
        somlist.anchor_point(np.zeros((3, 3), dtype=np.uint8))


def test_polygon_area():
    square = somlist.rasterize_polygon([0, 0, 4, 0, 4, 4, 0, 4], 8, 8)
    assert int(square.sum()) == 16


def test_listing_round_trip_and_scoring():
    text = somlist.format_listing([(1, "person"), (2, "cat"), (3, "dog")])
    assert text == "1. person, 2. cat, 3. dog."
    items, residual = somlist.parse_listing(text)
    assert [i for i, _ in items] == [1, 2, 3] and residual == ""
    assert somlist.detect_listing(text)
    assert not somlist.detect_listing("A plain caption.")
    gold = [(1, "person"), (2, "cat")]
    assert somlist.score_listing("1. person, 2. kitten.", gold, synonyms={"kitten": "cat"}) == (2, 2)
    assert somlist.score_listing("1. person, 2. dog.", gold) == (1, 2)
    assert somlist.aggregate_scores([(1, 1), (1, 2)]) == ("3/4", "0.7500")


def test_score_file_fixture():
    report = json.loads(somlist.score_file(FIXTURES / "scoring" / "pred.jsonl", FIXTURES / "scoring" / "gold.jsonl"))
    assert report["aggregate_exact"] == "46/75"
    assert report["aggregate_text"] == "0.6133"


def test_templates():
    templates = somlist.listing_templates()
    assert len(templates) == 40
    assert somlist.sample_template(11) == somlist.sample_template(11)


def test_tag_and_generate(tmp_path):
    res = somlist.run_tag(FIXTURES / "coco3" / "annotations.json", FIXTURES / "coco3" / "images", tmp_path / "tagged")
    assert res["exit_code"] == 0
    assert json.loads(res["summary"])["images"] == 3
    png, sidecar = somlist.tag_image(
        FIXTURES / "coco3" / "annotations.json", 1, FIXTURES / "coco3" / "images" / "scene_001.png"
    )
    assert png.startswith(b"\x89PNG")
    assert len(json.loads(sidecar)["placements"]) == 3

    gen = somlist.run_gen_listing(tmp_path / "tagged", tmp_path / "listing.jsonl")
    assert gen["exit_code"] == 0
    stats = somlist.dataset_stats(tmp_path / "listing.jsonl")
    assert stats["records"] == 3 and stats["listing_turns"] == 1


def test_mix_and_errors(tmp_path):
    manifest = json.loads(somlist.mix(FIXTURES / "mix" / "recipe.json", tmp_path / "mixed.jsonl"))
    assert manifest["total"] == 695
    assert somlist.dataset_stats(tmp_path / "mixed.jsonl")["records"] == 695
    with pytest.raises(somlist.IoError):
        somlist.probe_file(tmp_path / "missing.jsonl")
    assert somlist.probe_file(FIXTURES / "probe_corpus.jsonl") == (100, 7, "7.00")
