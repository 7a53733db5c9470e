import numpy as np
import pytest

from rap.errors import EmptyMaskError, ZeroPrototypeError
from rap.gating import (
    GatingConfig,
    build_gating_mask,
    cluster_support,
    combined_similarity,
    similarity_map,
)
from rap.retrieval import masked_descriptor


def test_identical_features_collapse_to_one_prototype():
    fm = np.full((4, 4, 3), 0.5, dtype=np.float32)
    mask = np.ones((16, 16), dtype=bool)
    protos = cluster_support(fm, mask, clusters=3, seed=0)
    assert protos.count == 1
    np.testing.assert_allclose(protos.prototypes[0], [0.5, 0.5, 0.5], atol=1e-9)


def test_two_blobs_recovered(rng):
    fm = np.zeros((4, 4, 2), dtype=np.float32)
    fm[:2] = [5.0, 0.0] + rng.normal(0, 0.02, size=(2, 4, 2))
    fm[2:] = [0.0, 5.0] + rng.normal(0, 0.02, size=(2, 4, 2))
    mask = np.ones((8, 8), dtype=bool)
    protos = cluster_support(fm, mask, clusters=2, seed=3)
    assert protos.count == 2
    got = sorted(tuple(p) for p in protos.prototypes)
    want = sorted([(5.0, 0.0), (0.0, 5.0)])
    for g, w in zip(got, want):
        assert np.hypot(g[0] - w[0], g[1] - w[1]) < 0.1


def test_single_cluster_is_masked_descriptor(rng):
    fm = rng.normal(size=(4, 4, 3)).astype(np.float32)
    mask = np.zeros((16, 16), dtype=bool)
    mask[0:8, 0:8] = True
    protos = cluster_support(fm, mask, clusters=1, seed=0)
    np.testing.assert_allclose(protos.prototypes[0], masked_descriptor(fm, mask), atol=1e-9)


def test_cluster_determinism(rng):
    fm = rng.normal(size=(6, 6, 4)).astype(np.float32)
    mask = np.ones((24, 24), dtype=bool)
    a = cluster_support(fm, mask, clusters=4, seed=11)
    b = cluster_support(fm, mask, clusters=4, seed=11)
    assert a.count == b.count
    np.testing.assert_array_equal(a.prototypes, b.prototypes)
    np.testing.assert_array_equal(a.member_counts, b.member_counts)


def test_cluster_reduces_k_to_cell_count(rng):
    fm = rng.normal(size=(2, 2, 3)).astype(np.float32)
    mask = np.ones((4, 4), dtype=bool)  # 4 cells
    protos = cluster_support(fm, mask, clusters=9, seed=0)
    assert protos.count <= 4
    assert protos.member_counts.min() >= 1


def test_cluster_empty_downsampled_foreground():
    fm = np.zeros((2, 2, 1), dtype=np.float32)
    mask = np.zeros((16, 16), dtype=bool)
    mask[0, 0] = True  # one pixel loses every 8x8 block vote
    with pytest.raises(EmptyMaskError):
        cluster_support(fm, mask, clusters=2, seed=0)


def test_similarity_map_constant_match():
    fm = np.tile(np.array([1.0, 2.0], dtype=np.float32), (3, 3, 1))
    out = similarity_map(fm, np.array([1.0, 2.0]), 9, 9)
    np.testing.assert_allclose(out, 1.0, atol=1e-9)


def test_similarity_map_orthogonal_is_zero():
    fm = np.zeros((3, 3, 2), dtype=np.float32)
    fm[..., 0] = 2.0
    out = similarity_map(fm, np.array([0.0, 1.0]), 6, 6)
    np.testing.assert_allclose(out, 0.0, atol=1e-12)


def test_similarity_map_exact_at_anchored_pixels(rng):
    fm = rng.normal(size=(4, 4, 5)).astype(np.float32)
    proto = rng.normal(size=5)
    out = similarity_map(fm, proto, 8, 8)
    pn = proto / np.linalg.norm(proto)
    for i in range(4):
        for j in range(4):
            cell = fm[i, j].astype(np.float64)
            want = 0.0 if np.linalg.norm(cell) < 1e-12 else float(cell @ pn / np.linalg.norm(cell))
            assert out[2 * i, 2 * j] == pytest.approx(want, abs=1e-9)


def test_similarity_map_zero_prototype():
    fm = np.ones((2, 2, 2), dtype=np.float32)
    with pytest.raises(ZeroPrototypeError):
        similarity_map(fm, np.zeros(2), 4, 4)


def _protos(n, dim=2):
    from rap.gating import RegionPrototypes

    return RegionPrototypes(
        count=n, prototypes=np.ones((n, dim)), member_counts=np.ones(n, dtype=int)
    )


def test_gate_single_map_top_decile(rng):
    values = rng.permutation(400).astype(np.float64).reshape(20, 20) / 400.0
    gate = build_gating_mask([values], _protos(1), GatingConfig(1, 1, 0.9))
    assert gate.sum() == 40  # exactly the top 10% for 400 distinct values


def test_gate_mean_rank_keeps_dominant_map(rng):
    small = rng.random((10, 10)) * 0.3
    big = small + 0.5
    gate = build_gating_mask([small, big], _protos(2), GatingConfig(2, 1, 0.8))
    oracle = big > np.quantile(big, 0.8)
    np.testing.assert_array_equal(gate, oracle)


def test_gate_matches_bruteforce_oracle(rng):
    maps = [rng.random((12, 12)) for _ in range(3)]
    cfg = GatingConfig(3, 2, 0.9)
    gate = build_gating_mask(maps, _protos(3), cfg)

    means = [m.mean() for m in maps]
    kept = [maps[i] for i in sorted(range(3), key=lambda i: (-means[i], i))[:2]]
    tau = np.quantile(np.concatenate([m.ravel() for m in kept]), 0.9)
    oracle = (kept[0] > tau) | (kept[1] > tau)
    np.testing.assert_array_equal(gate, oracle)


def test_gate_monotone_in_quantile(rng):
    maps = [rng.random((16, 16)) for _ in range(4)]
    wide = build_gating_mask(maps, _protos(4), GatingConfig(4, 2, 0.5))
    narrow = build_gating_mask(maps, _protos(4), GatingConfig(4, 2, 0.95))
    assert (wide | narrow).sum() == wide.sum()  # narrow is a subset of wide


def test_gate_never_empty_on_constant_maps():
    maps = [np.full((8, 8), 0.4)]
    gate = build_gating_mask(maps, _protos(1), GatingConfig(1, 1, 0.9))
    assert gate.sum() == 1  # strict inequality empties the gate; max pixel kept


def test_combined_similarity_is_pointwise_max(rng):
    maps = [rng.random((6, 6)) for _ in range(3)]
    cfg = GatingConfig(3, 3, 0.9)
    np.testing.assert_array_equal(
        combined_similarity(maps, cfg), np.maximum.reduce(maps)
    )
