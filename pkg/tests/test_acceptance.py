"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -s` to see the per-criterion
lines. Criteria are property-based plus a self-contained synthetic
benchmark; nothing here depends on external data or models.
"""
import math
import sys
import time

import numpy as np
import pytest

from rap.chamfer import (
    SearchGrid,
    Transform2D,
    build_premask,
    directional_distance_transforms,
    extract_boundary_template,
    fold_angle,
    search_transform,
)
from rap.cli import main
from rap.config import apply_overrides
from rap.edge import EdgePixelSet
from rap.pipeline import dice, evaluate
from rap.prompts import PromptConfig, build_prompt_set, fps_seeds, voronoi_partition
from rap.style import dwt2, idwt2, style_adapt
from rap.synth import benchmark_config, generate_benchmark
from tests.conftest import rect_mask


@pytest.fixture
def report(capsys):
    """PASS/FAIL line per criterion, printed past pytest's capture."""

    def _report(num: int, name: str, ok: bool, detail: str = "") -> None:
        status = "PASS" if ok else "FAIL"
        suffix = f" ({detail})" if detail else ""
        with capsys.disabled():
            print(f"[acceptance {num}] {name}: {status}{suffix}")
            sys.stdout.flush()
        assert ok, f"criterion {num} failed{suffix}"

    return _report


@pytest.fixture(scope="module")
def bench20(tmp_path_factory):
    out = tmp_path_factory.mktemp("bench20")
    manifest = generate_benchmark(out, cases=20, seed=7)
    return out, manifest


def test_criterion_1_distance_transform_oracle(rng, report):
    started = time.monotonic()
    bins_cycle = (1, 4, 8)
    exact = True
    for trial in range(50):
        bins = bins_cycle[trial % 3]
        n = int(rng.integers(1, 201))
        pix = np.stack([rng.integers(0, 64, n), rng.integers(0, 64, n)], axis=1)
        edges = EdgePixelSet(pixels=pix, orientations=rng.random(n) * np.pi * 0.9999)
        fields = directional_distance_transforms(edges, 64, 64, bins)

        width = np.pi / bins
        assign = np.minimum((edges.orientations / width).astype(int), bins - 1)
        yy, xx = np.mgrid[0:64, 0:64]
        for k in range(bins):
            pts = pix[assign == k]
            if len(pts) == 0:
                want = np.full((64, 64), fields.diagonal)
            else:
                d2 = (yy[..., None] - pts[:, 1]) ** 2 + (xx[..., None] - pts[:, 0]) ** 2
                want = np.sqrt(d2.min(axis=-1).astype(np.float64))
            if not np.array_equal(fields.fields[k], want):
                exact = False
    elapsed = time.monotonic() - started
    report(1, "directional EDT equals brute force exactly", exact and elapsed < 30,
            f"50 trials, {elapsed:.1f}s")


def _radial_shape(rng, kind):
    """Radial boundary function r(phi) for an eccentric ellipse or star blob."""
    if kind == "ellipse":
        a = rng.uniform(12, 16)
        b = a * rng.uniform(0.55, 0.75)
        phi0 = rng.uniform(0, np.pi)

        def bound(phi):
            c, s = np.cos(phi - phi0), np.sin(phi - phi0)
            return a * b / np.sqrt((b * c) ** 2 + (a * s) ** 2)

        return bound
    radii = rng.uniform(10, 16, size=7)
    angles = np.sort(rng.uniform(0, 2 * np.pi, size=7))

    def bound(phi):
        return np.interp(np.mod(phi, 2 * np.pi), angles, radii, period=2 * np.pi)

    return bound


def _rasterize_radial(bound, center, scale, rotation_deg, size):
    ys, xs = np.mgrid[0:size, 0:size].astype(np.float64)
    rad = math.radians(rotation_deg)
    dx = xs - center[0]
    dy = ys - center[1]
    px = (dx * math.cos(rad) + dy * math.sin(rad)) / scale
    py = (-dx * math.sin(rad) + dy * math.cos(rad)) / scale
    return np.hypot(px, py) <= bound(np.arctan2(py, px))


def test_criterion_2_chamfer_recovery(rng, report):
    started = time.monotonic()
    size = 96
    grid = SearchGrid()
    hits = 0
    dices = []
    for trial in range(100):
        bound = _radial_shape(rng, "ellipse" if trial % 2 == 0 else "star")
        center = (size / 2, size / 2)
        support = _rasterize_radial(bound, center, 1.0, 0.0, size)
        truth = Transform2D(
            tx=float(rng.integers(-8, 9)),
            ty=float(rng.integers(-8, 9)),
            scale=float(rng.choice(grid.scales)),
            rotation=float(rng.choice(grid.rotations)),
        )
        template = extract_boundary_template(support, 128)

        rad = math.radians(truth.rotation)
        cx, cy = template.centroid
        rel = (template.points - (cx, cy)) * truth.scale
        ex = rel[:, 0] * math.cos(rad) - rel[:, 1] * math.sin(rad) + cx + truth.tx
        ey = rel[:, 0] * math.sin(rad) + rel[:, 1] * math.cos(rad) + cy + truth.ty
        edges = EdgePixelSet(
            pixels=np.stack(
                [np.floor(ex + 0.5).astype(int), np.floor(ey + 0.5).astype(int)], axis=1
            ),
            orientations=fold_angle(template.normals + rad),
        )
        fields = directional_distance_transforms(edges, size, size, 8)
        found, _ = search_transform(template, fields, np.ones((size, size), dtype=bool), grid)

        within = (
            abs(found.tx - truth.tx) <= grid.coarse_stride
            and abs(found.ty - truth.ty) <= grid.coarse_stride
            and abs(found.scale - truth.scale) <= 0.1 + 1e-9
            and abs(found.rotation - truth.rotation) <= 10 + 1e-9
        )
        hits += within

        premask = build_premask(support, found, np.ones((size, size), dtype=bool), size, size)
        gt_mask = _rasterize_radial(bound, (cx + truth.tx, cy + truth.ty), truth.scale, truth.rotation, size)
        dices.append(dice(premask, gt_mask))
    elapsed = time.monotonic() - started
    mean_dice = float(np.mean(dices))
    ok = hits >= 95 and mean_dice >= 90 and elapsed < 120
    report(2, "chamfer transform recovery", ok,
            f"{hits}/100 within one grid step, premask dice {mean_dice:.1f}, {elapsed:.1f}s")


def test_criterion_3_wavelet(rng, report):
    worst_rt = 0.0
    worst_energy = 0.0
    for _ in range(100):
        h, w = 2 * rng.integers(4, 33), 2 * rng.integers(4, 33)
        img = rng.random((h, w))
        sb = dwt2(img)
        rec = idwt2(sb, h, w)
        worst_rt = max(worst_rt, float(np.abs(rec - img).max()))
        energy = sum(float(np.sum(b**2)) for b in (sb.ll, sb.lh, sb.hl, sb.hh))
        worst_energy = max(worst_energy, abs(energy - float(np.sum(img**2))))
    img = rng.random((32, 32)).astype(np.float32)
    self_err = float(np.abs(style_adapt(img, img) - img).max())
    ok = worst_rt <= 1e-5 and worst_energy <= 1e-6 and self_err <= 1e-5
    report(3, "wavelet round-trip / energy / self style", ok,
            f"rt {worst_rt:.2e}, energy {worst_energy:.2e}, self {self_err:.2e}")


def test_criterion_4_fps_voronoi_oracles(rng, report):
    all_exact = True
    for _ in range(50):
        mask = rng.random((28, 28)) > rng.uniform(0.55, 0.8)
        if not 6 <= mask.sum() <= 500:
            mask = rect_mask(28, 5, 15, 5, 15)
        seeds = fps_seeds(mask, 6)

        rows, cols = np.nonzero(mask)
        xy = np.stack([cols, rows], axis=1).astype(float)
        centroid = xy.mean(axis=0)
        chosen = [int(np.argmin(((xy - centroid) ** 2).sum(axis=1)))]
        while len(chosen) < 6:
            mind = np.min([((xy - xy[c]) ** 2).sum(axis=1) for c in chosen], axis=0)
            chosen.append(int(np.argmax(mind)))
        expected = [(int(xy[i, 0]), int(xy[i, 1])) for i in chosen]
        if seeds != expected:
            all_exact = False

        part = voronoi_partition(mask, seeds)
        sxy = np.array(seeds, dtype=float)
        for r, c in zip(rows, cols):
            d2 = (sxy[:, 0] - c) ** 2 + (sxy[:, 1] - r) ** 2
            if part.cell_labels[r, c] != int(np.argmin(d2)):
                all_exact = False
    report(4, "FPS and Voronoi match brute force exactly", all_exact, "50 masks")


def test_criterion_5_prompt_invariants(rng, report):
    violations = 0
    for _ in range(50):
        mask = rng.random((48, 48)) > rng.uniform(0.75, 0.9)
        if mask.sum() < 2:
            mask = rect_mask(48, 20, 28, 20, 28)
        sim = rng.random((48, 48))
        try:
            ps = build_prompt_set(mask, sim, PromptConfig(band_min=2, band_max=14, margin=3))
            ps.validate(mask)
            part = voronoi_partition(mask, fps_seeds(mask, min(6, int(mask.sum()))))
            covered = (part.cell_labels >= 0) == mask
            if not covered.all():
                violations += 1
        except Exception:
            violations += 1
    report(5, "prompt bundle invariants", violations == 0, f"{violations} violations")


def test_criterion_6_dice_fixture(rng, report):
    full = np.ones((10, 10), dtype=bool)
    left = rect_mask(10, 0, 10, 0, 5)
    top = rect_mask(10, 0, 5, 0, 10)
    fixture = [
        (left, full, 2 * 50 / 150 * 100),  # 66.67 half-overlap case
        (top, top, 100.0),
        (left, rect_mask(10, 0, 10, 5, 10), 0.0),
    ]
    ok = all(abs(dice(p, g) - want) <= 0.01 for p, g, want in fixture)
    for _ in range(20):
        p = rng.random((9, 9)) > 0.5
        g = rng.random((9, 9)) > 0.5
        ok = ok and dice(p, g) == dice(g, p)
        if p.any():
            ok = ok and dice(p, p) == 100.0
    report(6, "dice harness fixture", ok)


def test_criterion_7_synthetic_benchmark(bench20, report):
    started = time.monotonic()
    _, manifest = bench20
    cfg_on = benchmark_config()
    report_on = evaluate(manifest, cfg_on, leave_one_out=True)
    cfg_off = apply_overrides(
        cfg_on, {"ablation.ocm": False, "ablation.sg": False, "ablation.vp": False}
    )
    report_off = evaluate(manifest, cfg_off, leave_one_out=True)
    elapsed = time.monotonic() - started
    ok = report_on.overall_mean >= 80.0 and report_on.overall_mean > report_off.overall_mean and elapsed < 300
    report(
        7,
        "end-to-end synthetic benchmark",
        ok,
        f"all-on {report_on.overall_mean:.2f}, all-off {report_off.overall_mean:.2f}, {elapsed:.0f}s",
    )


def test_criterion_8_determinism(bench20, capsys, rng, report):
    out, manifest = bench20
    argv = [
        "eval",
        "--manifest", str(manifest),
        "--config", str(out / "benchmark.cfg"),
        "--loo",
        "--json",
    ]
    assert main(argv) == 0
    first = capsys.readouterr().out
    assert main(argv) == 0
    second = capsys.readouterr().out
    byte_identical = first == second

    bound = _radial_shape(rng, "star")
    support = _rasterize_radial(bound, (48, 48), 1.0, 0.0, 96)
    template = extract_boundary_template(support, 128)
    edges = EdgePixelSet(
        pixels=np.floor(template.points + 0.5).astype(int),
        orientations=template.normals,
    )
    fields = directional_distance_transforms(edges, 96, 96, 8)
    gate = np.ones((96, 96), dtype=bool)
    seq, seq_cost = search_transform(template, fields, gate, SearchGrid(), workers=1)
    par, par_cost = search_transform(template, fields, gate, SearchGrid(), workers=4)
    threads_equal = (
        (seq.tx, seq.ty, seq.scale, seq.rotation) == (par.tx, par.ty, par.scale, par.rotation)
        and seq_cost == par_cost
    )
    report(8, "byte-identical reports and thread-invariant search",
            byte_identical and threads_equal)
