"""Smoke test for the weakseg Python extension.

Build and install first, e.g.

    cd crates/py && maturin build --release -o dist && pip install dist/*.whl
    python python/smoke_test.py
"""

import math
import os
import random
import tempfile

import weakseg

W, H = 96, 80


def on_crack(x, y):
    return abs(y - (20 + 0.4 * x)) < 1.0


def crack_image():
    return weakseg.Raster(
        W,
        H,
        [0.15 if on_crack(i % W, i // W) else 0.65 + ((i % W) * 7 + (i // W) * 13) % 11 / 100 for i in range(W * H)],
    )


def check_raster_and_formats(tmp):
    r = weakseg.Raster(3, 2, [0.0, 0.25, 0.5, 0.75, 1.0, 0.5])
    assert (r.width, r.height, len(r)) == (3, 2, 6)
    assert r.get(1, 1) == 1.0
    assert r.min_max() == (0.0, 1.0)
    data = r.to_smap()
    assert data[:4] == b"SMAP" and len(data) == 13 + 4 * 6
    assert weakseg.Raster.from_smap(data) == r
    path = os.path.join(tmp, "r.smap")
    weakseg.save_scoremap(r, path)
    assert weakseg.load_scoremap(path) == r
    assert r.pad(2, 2, 1, 1).crop(2, 1, 3, 2) == r
    assert r.resize(6, 4).width == 6
    try:
        weakseg.Raster(2, 2, [0.0])
    except ValueError:
        pass
    else:
        raise AssertionError("bad raster accepted")


def check_otsu():
    counts = [0] * 256
    counts[20], counts[200] = 10, 30
    assert weakseg.otsu2(counts) == 20
    counts[110] = 20
    k1, k2 = weakseg.otsu3(counts)
    assert 20 <= k1 < 110 <= k2 < 200, (k1, k2)
    try:
        weakseg.otsu2([1, 2, 3])
    except ValueError:
        pass
    else:
        raise AssertionError("short histogram accepted")


def check_filters():
    rng = random.Random(3)
    r = weakseg.Raster(20, 15, [rng.random() for _ in range(300)])
    lo, hi = r.min_max()
    b = weakseg.bilateral_filter(r)
    blo, bhi = b.min_max()
    assert lo - 1e-6 <= blo and bhi <= hi + 1e-6
    e, d = weakseg.erode(r, 3), weakseg.dilate(r, 3)
    for v, ev, dv in zip(r.tolist(), e.tolist(), d.tolist()):
        assert ev <= v <= dv
    c = weakseg.close(r, 3)
    assert weakseg.close(c, 3) == c


def check_pipeline(tmp):
    img = crack_image()
    mask = weakseg.patch_threshold_segment(img)
    crack_pixels = [i for i in range(W * H) if on_crack(i % W, i // W)]
    assert all(mask.tolist()[i] == 1 for i in crack_pixels)

    scores = []
    for oy in range(0, 48 + 1, 16):
        for ox in range(0, 64 + 1, 16):
            hit = any(on_crack(x, y) for y in range(oy, min(oy + 32, H)) for x in range(ox, min(ox + 32, W)))
            scores.append(1.0 if hit else 0.0)
    grid = weakseg.PatchScoreGrid(W, H, scores)
    assert grid.grid_shape == (5, 4)
    psg = os.path.join(tmp, "s.psg")
    grid.save(psg)
    assert weakseg.PatchScoreGrid.load(psg).tolist() == scores

    cam = weakseg.Raster(
        W,
        H,
        [1.0 if any(on_crack(i % W, y) for y in range(max(0, i // W - 6), min(H, i // W + 7))) else 0.0 for i in range(W * H)],
    )
    loc, thr, out = weakseg.segment(img, grid, cam)
    assert (out.width, out.height) == (W, H)
    on = [out.tolist()[i] for i in crack_pixels]
    assert sum(on) / len(on) > 0.5
    off = [v for i, v in enumerate(out.tolist()) if i not in set(crack_pixels) and abs(i // W - (20 + 0.4 * (i % W))) > 5]
    assert max(off) < 0.1

    cfg = weakseg.PipelineConfig(enable_bilateral=False, otsu_mode="two")
    assert cfg.to_dict()["otsu_mode"] == "two"
    try:
        weakseg.PipelineConfig(no_such_field=1)
    except ValueError:
        pass
    else:
        raise AssertionError("unknown config field accepted")
    gt = weakseg.BinaryMask(W, H, [1 if on_crack(i % W, i // W) else 0 for i in range(W * H)])
    _, _, gold = weakseg.gold_standard_segment(img, gt, cfg)
    f1, best_t, curve = weakseg.macro_f1([gold], [gt])
    assert len(curve) == 101 and 0.0 <= f1 <= 1.0
    assert f1 > 0.8, f1

    perfect, _, _ = weakseg.macro_f1([gt.to_raster()], [gt])
    assert perfect == 1.0
    assert math.isclose(weakseg.classification_f1([0.9, 0.7, 0.1], [1, 0, 1]), 0.5)

    png = os.path.join(tmp, "out.png")
    weakseg.save_png(out, png)
    assert weakseg.load_image(png).width == W
    try:
        weakseg.load_image(os.path.join(tmp, "absent.png"))
    except OSError:
        pass
    else:
        raise AssertionError("missing file accepted")


def main():
    with tempfile.TemporaryDirectory() as tmp:
        check_raster_and_formats(tmp)
        check_otsu()
        check_filters()
        check_pipeline(tmp)
    print(f"weakseg {weakseg.__version__}: smoke test passed")


if __name__ == "__main__":
    main()
