"""Synthetic hyperspectral scenes with a known, easy class structure.

The generator lays classes out as vertical stripes, draws one Gaussian
mean spectrum per class, and adds white noise per pixel. With the
default separation of 10 noise standard deviations between class
means, a nearest-mean decision is essentially always right, so
pipeline tests have a known accuracy ceiling close to 1.

Everything is derived from a single SplitMix64 stream in a fixed
order (means, then pixel noise, then the unlabeled mask), so a seed
pins the whole scene byte for byte.
"""

import numpy as np

from .hsi_data import GroundTruth, HsiCube
from .rng import SplitMix64

__all__ = ["gaussian_scene"]


def gaussian_scene(
    height: int,
    width: int,
    bands: int,
    num_classes: int,
    seed: int = 0,
    noise: float = 1.0,
    separation: float = 10.0,
    unlabeled_fraction: float = 0.05,
    class_names=None,
):
    """Generate a striped Gaussian scene; returns (HsiCube, GroundTruth).

    Class means are drawn so that the expected distance between any
    two of them is ``separation * noise``. A ``unlabeled_fraction`` of
    pixels is relabeled 0 at random (their spectra keep the stripe's
    class mean).
    """
    if height < 1 or width < 1 or bands < 1:
        raise ValueError(f"scene dimensions must be positive, got {height}x{width}x{bands}")
    if num_classes < 1:
        raise ValueError(f"num_classes must be >= 1, got {num_classes}")
    if width < num_classes:
        raise ValueError(f"width {width} cannot hold {num_classes} stripes")
    if not 0.0 <= unlabeled_fraction < 1.0:
        raise ValueError(f"unlabeled_fraction must be in [0, 1), got {unlabeled_fraction}")
    if not noise > 0:
        raise ValueError(f"noise must be > 0, got {noise}")
    if class_names is None:
        class_names = [f"class_{c}" for c in range(1, num_classes + 1)]
    elif len(class_names) != num_classes:
        raise ValueError(f"expected {num_classes} class names, got {len(class_names)}")

    rng = SplitMix64(seed)
    scale = separation * noise / np.sqrt(2.0 * bands)
    means = rng.normal_matrix(num_classes, bands) * scale

    stripe = (np.arange(width) * num_classes) // width  # class - 1 per column
    labels = np.tile(stripe + 1, (height, 1)).astype(np.uint16)

    clean = means[stripe].T[:, None, :]  # bands x 1 x width
    values = clean + noise * rng.normal_matrix(bands * height, width).reshape(
        bands, height, width
    )

    if unlabeled_fraction > 0.0:
        drop = rng.uniforms(height * width).reshape(height, width) < unlabeled_fraction
        labels[drop] = 0

    cube = HsiCube(
        height=height,
        width=width,
        bands=bands,
        values=values.astype(np.float32),
    )
    gt = GroundTruth(
        height=height,
        width=width,
        labels=labels,
        class_names=list(class_names),
    )
    return cube, gt
