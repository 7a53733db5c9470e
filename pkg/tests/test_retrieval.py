import numpy as np
import pytest

from rap.errors import DimError, EmptyMaskError, RankError
from rap.resample import mask_block_majority
from rap.retrieval import (
    build_database,
    cosine_similarity,
    global_descriptor,
    load_database,
    make_record,
    masked_descriptor,
    retrieve,
    save_database,
)


def _record(rid, rng, dim=4, seed_vec=None, size=16, grid=4):
    image = rng.random((size, size)).astype(np.float32)
    mask = np.zeros((size, size), dtype=bool)
    mask[4:12, 4:12] = True
    features = rng.normal(size=(grid, grid, dim)).astype(np.float32)
    if seed_vec is not None:
        features[:] = seed_vec
    return make_record(rid, image, mask, features)


def test_global_descriptor_constant_map():
    fm = np.full((3, 5, 4), 0.7, dtype=np.float32)
    np.testing.assert_allclose(global_descriptor(fm), np.full(4, 0.7), atol=1e-7)


def test_global_descriptor_two_cells():
    fm = np.array([[[2.0], [4.0]]], dtype=np.float32)  # 1x2x1
    np.testing.assert_allclose(global_descriptor(fm), [3.0])


def test_global_descriptor_matches_bruteforce(rng):
    fm = rng.normal(size=(4, 4, 8)).astype(np.float32)
    expected = np.array(
        [fm[:, :, c].astype(np.float64).sum() / 16 for c in range(8)]
    )
    np.testing.assert_allclose(global_descriptor(fm), expected, atol=1e-6)


def test_masked_descriptor_full_mask_equals_global(rng):
    fm = rng.normal(size=(4, 4, 3)).astype(np.float32)
    mask = np.ones((16, 16), dtype=bool)
    np.testing.assert_allclose(masked_descriptor(fm, mask), global_descriptor(fm))


def test_masked_descriptor_left_half():
    fm = np.array([[[1.0], [9.0]], [[1.0], [9.0]]], dtype=np.float32)  # 2x2x1
    mask = np.zeros((2, 2), dtype=bool)
    mask[:, 0] = True
    np.testing.assert_allclose(masked_descriptor(fm, mask), [1.0])


def test_masked_descriptor_matches_cell_enumeration(rng):
    fm = rng.normal(size=(4, 4, 5)).astype(np.float32)
    mask = rng.random((20, 20)) > 0.4
    mask[0, 0] = True
    votes = mask_block_majority(mask, 4, 4)
    if votes.any():
        cells = [fm[i, j].astype(np.float64) for i in range(4) for j in range(4) if votes[i, j]]
        expected = np.mean(cells, axis=0)
    else:
        expected = global_descriptor(fm)
    np.testing.assert_allclose(masked_descriptor(fm, mask), expected, atol=1e-9)


def test_masked_descriptor_empty_mask_raises():
    fm = np.zeros((2, 2, 1), dtype=np.float32)
    with pytest.raises(EmptyMaskError):
        masked_descriptor(fm, np.zeros((4, 4), dtype=bool))


def test_masked_descriptor_no_voted_cell_falls_back_to_global(rng):
    fm = rng.normal(size=(2, 2, 3)).astype(np.float32)
    mask = np.zeros((16, 16), dtype=bool)
    mask[0, 0] = True  # single pixel never wins an 8x8 block vote
    np.testing.assert_allclose(masked_descriptor(fm, mask), global_descriptor(fm))


def test_block_majority_tie_votes_background():
    mask = np.zeros((2, 2), dtype=bool)
    mask[0, :] = True  # each 2x2 block is half foreground
    assert not mask_block_majority(mask, 1, 1)[0, 0]


def test_cosine_trivials():
    assert cosine_similarity([1, 2, 3], [1, 2, 3]) == pytest.approx(1.0)
    assert cosine_similarity([1, 0], [0, 1]) == pytest.approx(0.0)
    assert cosine_similarity([1, 1], [-1, -1]) == pytest.approx(-1.0)


def test_cosine_zero_norm_is_zero():
    assert cosine_similarity([0.0, 0.0], [1.0, 2.0]) == 0.0


def test_cosine_dim_mismatch():
    with pytest.raises(DimError):
        cosine_similarity([1.0, 2.0], [1.0, 2.0, 3.0])


def test_cosine_properties(rng):
    for _ in range(50):
        x = rng.normal(size=6)
        y = rng.normal(size=6)
        assert cosine_similarity(x, x) == pytest.approx(1.0, abs=1e-9)
        assert abs(cosine_similarity(x, y)) <= 1 + 1e-9


def test_retrieve_singleton(rng):
    db = build_database([_record("only", rng)])
    assert retrieve(db, global_descriptor(db.records[0].features), 1).selected == "only"


def test_retrieve_rank2_skips_exact_match(rng):
    base = np.zeros((2, 2, 2), dtype=np.float32)
    base[..., 0] = 1.0
    ortho = np.zeros((2, 2, 2), dtype=np.float32)
    ortho[..., 1] = 1.0
    mask = np.ones((2, 2), dtype=bool)
    img = np.zeros((2, 2), dtype=np.float32)
    db = build_database(
        [make_record("A", img, mask, base), make_record("B", img, mask, ortho)]
    )
    query = np.array([1.0, 0.0])
    assert retrieve(db, query, 1).selected == "A"
    assert retrieve(db, query, 2).selected == "B"


def test_retrieve_rank1_matches_bruteforce(rng):
    records = [_record(f"r{i}", rng) for i in range(10)]
    db = build_database(records)
    query = rng.normal(size=4)
    result = retrieve(db, query, 1, use_masked=True)
    sweep = sorted(
        ((cosine_similarity(query, r.masked_descriptor), r.id) for r in records),
        key=lambda t: (-t[0], t[1]),
    )
    assert result.selected == sweep[0][1]
    assert result.ranked_ids == [rid for _, rid in sweep]
    assert result.scores == sorted(result.scores, reverse=True)


def test_retrieve_rank_error(rng):
    db = build_database([_record("a", rng)])
    with pytest.raises(RankError):
        retrieve(db, np.ones(4), 2)


def test_retrieve_scale_invariance(rng):
    records = [_record(f"r{i}", rng) for i in range(6)]
    db = build_database(records)
    query = rng.normal(size=4)
    before = retrieve(db, query, 1).ranked_ids
    for rec in records:
        rec.masked_descriptor = rec.masked_descriptor * 37.5
        rec.descriptor = rec.descriptor * 37.5
    after = retrieve(db, query, 1).ranked_ids
    assert before == after


def test_retrieve_tie_break_by_id(rng):
    fm = np.ones((2, 2, 2), dtype=np.float32)
    mask = np.ones((2, 2), dtype=bool)
    img = np.zeros((2, 2), dtype=np.float32)
    recs = [make_record(rid, img, mask, fm) for rid in ("zeta", "alpha", "mid")]
    db = build_database(recs)
    result = retrieve(db, np.ones(2), 1)
    assert result.ranked_ids == ["alpha", "mid", "zeta"]
    assert retrieve(db, np.ones(2), 1).ranked_ids == result.ranked_ids


def test_database_save_load_roundtrip(tmp_path, rng):
    db = build_database([_record(f"r{i}", rng) for i in range(3)])
    save_database(db, tmp_path / "db")
    loaded = load_database(tmp_path / "db")
    assert [r.id for r in loaded.records] == [r.id for r in db.records]
    for a, b in zip(db.records, loaded.records):
        np.testing.assert_array_equal(a.image, b.image)
        np.testing.assert_array_equal(a.mask, b.mask)
        np.testing.assert_array_equal(a.features, b.features)
        np.testing.assert_allclose(a.masked_descriptor, b.masked_descriptor, atol=1e-7)
