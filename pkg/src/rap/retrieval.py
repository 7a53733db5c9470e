"""Support database construction and cosine-similarity retrieval.

Each labeled support carries two descriptors: a global one (mean feature
over the whole grid) used for queries, and a masked one (mean over grid
cells the mask votes foreground) that sharpens matching when the support
annotation is available. Retrieval ranks supports by cosine similarity and
returns the record at the requested rank; rank 2 skips exact self-matches
when the query's own slice may sit in the archive.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .arrayio import read_array, write_array
from .errors import DimError, EmptyMaskError, ManifestError, RankError
from .resample import mask_block_majority
from .validation import check_descriptor, check_features, check_image, check_mask


@dataclass
class SupportRecord:
    """One archived support: image, mask, features, and both descriptors."""

    id: str
    image: np.ndarray
    mask: np.ndarray
    features: np.ndarray
    descriptor: np.ndarray = field(repr=False, default=None)
    masked_descriptor: np.ndarray = field(repr=False, default=None)


@dataclass
class SupportDatabase:
    records: list
    feature_dim: int

    def __len__(self) -> int:
        return len(self.records)

    def get(self, record_id: str) -> SupportRecord:
        for rec in self.records:
            if rec.id == record_id:
                return rec
        raise KeyError(record_id)


@dataclass
class RetrievalResult:
    ranked_ids: list
    scores: list
    selected: str


def global_descriptor(features) -> np.ndarray:
    """Per-channel mean over all grid cells."""
    f = check_features(features)
    return f.reshape(-1, f.shape[2]).mean(axis=0, dtype=np.float64)


def masked_descriptor(features, mask) -> np.ndarray:
    """Per-channel mean over grid cells whose block-majority vote is foreground.

    Falls back to the global descriptor when no cell votes foreground.
    """
    f = check_features(features)
    m = check_mask(mask)
    if not m.any():
        raise EmptyMaskError("masked_descriptor: mask has no foreground")
    votes = mask_block_majority(m, f.shape[0], f.shape[1])
    if not votes.any():
        return global_descriptor(f)
    return f[votes].mean(axis=0, dtype=np.float64)


def cosine_similarity(a, b) -> float:
    """Cosine of two descriptors; 0 when either norm is below 1e-12."""
    va = check_descriptor(a, "a")
    vb = check_descriptor(b, "b")
    if va.shape != vb.shape:
        raise DimError(f"descriptor dims differ: {va.shape[0]} vs {vb.shape[0]}")
    na = np.linalg.norm(va)
    nb = np.linalg.norm(vb)
    if na < 1e-12 or nb < 1e-12:
        return 0.0
    return float(np.dot(va, vb) / (na * nb))


def retrieve(db: SupportDatabase, query_descriptor, rank: int = 2, use_masked: bool = True) -> RetrievalResult:
    """Rank all records by cosine score (descending, ties by ascending id).

    Returns the ranking plus the record selected at the requested rank
    (1-based). Raises RankError when the database holds fewer records.
    """
    if rank < 1 or rank > len(db.records):
        raise RankError(f"rank {rank} out of range for database of {len(db.records)} records")
    qd = check_descriptor(query_descriptor, "query descriptor")
    scored = []
    for rec in db.records:
        ref = rec.masked_descriptor if use_masked else rec.descriptor
        scored.append((cosine_similarity(qd, ref), rec.id))
    scored.sort(key=lambda item: (-item[0], item[1]))
    ranked_ids = [rid for _, rid in scored]
    scores = [s for s, _ in scored]
    return RetrievalResult(ranked_ids=ranked_ids, scores=scores, selected=ranked_ids[rank - 1])


def make_record(record_id: str, image, mask, features) -> SupportRecord:
    """Validate one support and precompute both descriptors."""
    img = check_image(image)
    m = check_mask(mask)
    f = check_features(features)
    if img.shape != m.shape:
        raise DimError(f"record {record_id}: image {img.shape} vs mask {m.shape}")
    if not m.any():
        raise EmptyMaskError(f"record {record_id}: empty mask")
    return SupportRecord(
        id=record_id,
        image=img,
        mask=m,
        features=f,
        descriptor=global_descriptor(f),
        masked_descriptor=masked_descriptor(f, m),
    )


def build_database(records) -> SupportDatabase:
    """Assemble validated records into a database; ids must be unique."""
    recs = list(records)
    if not recs:
        raise ManifestError("support database needs at least one record")
    dim = recs[0].features.shape[2]
    seen = set()
    for rec in recs:
        if rec.id in seen:
            raise ManifestError(f"duplicate record id {rec.id!r}")
        seen.add(rec.id)
        if rec.features.shape[2] != dim:
            raise DimError(f"record {rec.id}: feature dim {rec.features.shape[2]} != {dim}")
    return SupportDatabase(records=recs, feature_dim=dim)


def save_database(db: SupportDatabase, out_dir) -> Path:
    """Persist a database as one RAF per array plus a db.json manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, rec in enumerate(db.records):
        names = {
            "image": f"rec_{i:04d}_image.raf",
            "mask": f"rec_{i:04d}_mask.raf",
            "features": f"rec_{i:04d}_features.raf",
        }
        write_array(rec.image, out / names["image"])
        write_array(rec.mask, out / names["mask"])
        write_array(rec.features, out / names["features"])
        entries.append({"id": rec.id, **names})
    manifest = {"feature_dim": db.feature_dim, "records": entries}
    path = out / "db.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return path


def load_database(db_dir) -> SupportDatabase:
    """Load a database directory written by save_database."""
    root = Path(db_dir)
    try:
        manifest = json.loads((root / "db.json").read_text())
    except OSError as exc:
        raise ManifestError(f"cannot read {root / 'db.json'}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{root / 'db.json'}: invalid JSON: {exc}") from exc
    try:
        entries = manifest["records"]
        records = [
            make_record(
                e["id"],
                read_array(root / e["image"]),
                read_array(root / e["mask"]),
                read_array(root / e["features"]),
            )
            for e in entries
        ]
    except KeyError as exc:
        raise ManifestError(f"db.json: missing field {exc}") from exc
    db = build_database(records)
    if db.feature_dim != manifest.get("feature_dim"):
        raise ManifestError(
            f"db.json feature_dim {manifest.get('feature_dim')} != stored {db.feature_dim}"
        )
    return db
