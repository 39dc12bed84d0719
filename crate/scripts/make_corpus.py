#!/usr/bin/env python3
"""Build the 10-pair desk corpus in data/corpus from scikit-image sample data.

Each pair is a 512x512 ground-truth image `<name>_hr.png` and a 512x512
reference `<name>_ref.png` showing overlapping, shifted content. The LR input
is derived from the ground truth by the tools themselves (4x bicubic).
"""

import argparse
from pathlib import Path

import numpy as np
from PIL import Image
from skimage import data

SIDE = 512
CANVAS = 600

# name -> (loader, hr offset (y, x), ref shift (dy, dx), ref gain)
SOURCES = {
    "astronaut": (data.astronaut, (20, 40), (36, -28), 1.00),
    "chelsea": (data.chelsea, (40, 160), (-24, 52), 0.92),
    "coffee": (data.coffee, (30, 120), (16, 44), 1.00),
    "rocket": (data.rocket, (60, 200), (-40, 36), 1.06),
    "retina": (data.retina, (40, 30), (48, 13), 1.00),
    "hubble": (data.hubble_deep_field, (50, 60), (-30, -41), 0.95),
    "ihc": (data.immunohistochemistry, (30, 30), (22, 34), 1.00),
    "brick": (data.brick, (20, 30), (40, 40), 1.00),
    "grass": (data.grass, (40, 20), (-17, 29), 1.04),
}


def canvas(img: np.ndarray) -> np.ndarray:
    if img.ndim == 2:
        img = np.stack([img] * 3, axis=-1)
    img = img[..., :3]
    h, w = img.shape[:2]
    k = CANVAS / min(h, w)
    size = (max(CANVAS, round(w * k)), max(CANVAS, round(h * k)))
    return np.asarray(Image.fromarray(img).resize(size, Image.BICUBIC))


def crop(img: np.ndarray, y: int, x: int) -> np.ndarray:
    h, w = img.shape[:2]
    y = min(max(y, 0), h - SIDE)
    x = min(max(x, 0), w - SIDE)
    return img[y : y + SIDE, x : x + SIDE]


def gain(img: np.ndarray, g: float) -> np.ndarray:
    return np.clip(img.astype(np.float64) * g, 0, 255).round().astype(np.uint8)


def save(out: Path, name: str, hr: np.ndarray, ref: np.ndarray) -> None:
    Image.fromarray(hr).save(out / f"{name}_hr.png")
    Image.fromarray(ref).save(out / f"{name}_ref.png")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "data" / "corpus"))
    out = Path(ap.parse_args().out)
    out.mkdir(parents=True, exist_ok=True)

    for name, (load, (y, x), (dy, dx), g) in SOURCES.items():
        c = canvas(load())
        save(out, name, crop(c, y, x), gain(crop(c, y + dy, x + dx), g))

    # a real stereo pair: left view as ground truth, right view as reference
    left, right, _ = data.stereo_motorcycle()
    left, right = canvas(left), canvas(right)
    save(out, "motorcycle", crop(left, 0, 80), crop(right, 0, 80))

    print(f"wrote {len(SOURCES) + 1} pairs to {out}")


if __name__ == "__main__":
    main()
