import numpy as np
import pytest

from rap.estimator import RapSegmenter
from rap.pipeline import dice
from rap.synth import generate_case


def _cases(n, cls=0, seed=7):
    out = []
    for i in range(n):
        image, mask, features, cn = generate_case(seed, cls, seed * 100003 + i * 2)
        out.append((f"{cn}{i:02d}", image, mask, features))
    return out


def test_get_set_params_roundtrip():
    est = RapSegmenter(resize=128, gating_quantile=0.85)
    params = est.get_params()
    assert params["resize"] == 128
    assert params["gating_quantile"] == 0.85
    clone = RapSegmenter(**params)
    assert clone.get_params() == params
    est.set_params(seed=3, ablation_vp=False)
    assert est.seed == 3
    assert est.ablation_vp is False


def test_set_params_rejects_unknown():
    with pytest.raises(ValueError):
        RapSegmenter().set_params(bogus=1)


def test_params_map_into_pipeline_config():
    est = RapSegmenter(resize=96, retrieval_rank=1, ablation_sg=False, chamfer_bins=4)
    cfg = est._config()
    assert cfg.resize == 96
    assert cfg.retrieval_rank == 1
    assert cfg.ablation.sg is False
    assert cfg.chamfer.bins == 4


def test_predict_before_fit_raises():
    est = RapSegmenter()
    with pytest.raises(RuntimeError):
        est.predict(np.zeros((16, 16), dtype=np.float32), np.zeros((2, 2, 2), dtype=np.float32))


def test_fit_predict_score():
    cases = _cases(3)
    est = RapSegmenter(resize=128, retrieval_rank=1, seed=0)
    assert est.fit(cases) is est
    assert est.feature_dim_ == cases[0][3].shape[2]
    cid, image, mask, features = cases[0]
    pred = est.predict(image, features)
    assert pred.shape == image.shape
    assert dice(pred, mask) >= 95.0
    assert est.score(image, features, mask) >= 95.0


def test_fit_accepts_dicts_and_records():
    cases = _cases(2)
    as_dicts = [
        {"id": cid, "image": img, "mask": m, "features": f} for cid, img, m, f in cases
    ]
    est = RapSegmenter(resize=128).fit(as_dicts)
    assert len(est.database_) == 2
    est2 = RapSegmenter(resize=128).fit(est.database_.records)
    assert len(est2.database_) == 2


def test_predict_trace_exposes_pipeline_trace():
    cases = _cases(2)
    # global-vs-global scoring pins the self case at rank 1
    est = RapSegmenter(resize=128, retrieval_rank=1, retrieval_use_masked=False).fit(cases)
    _, trace = est.predict_trace(cases[1][1], cases[1][3])
    assert trace["schema"] == "rap-trace-v1"
    assert trace["retrieved"]["id"] == cases[1][0]
