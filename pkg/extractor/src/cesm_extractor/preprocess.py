"""Image preprocessing for the CNN backbones.

Every image is resized to 224x224, expanded to 3 channels when it
arrives as grayscale, and normalized per channel with the ImageNet
training statistics.
"""

from __future__ import annotations

import numpy as np
from PIL import Image

TARGET_SIZE = (224, 224)
IMAGENET_MEAN = np.array([0.485, 0.456, 0.406], dtype=np.float32)
IMAGENET_STD = np.array([0.229, 0.224, 0.225], dtype=np.float32)


class UndecodableImageError(ValueError):
    pass


def preprocess(image) -> np.ndarray:
    """Return a normalized 3x224x224 float32 array.

    `image` may be a path or an already-open PIL image. Grayscale inputs
    are replicated across the three channels; RGB inputs keep their
    channels.
    """
    if not isinstance(image, Image.Image):
        try:
            image = Image.open(image)
        except Exception as e:
            raise UndecodableImageError(f"cannot decode {image}: {e}") from e
    if image.mode not in ("L", "RGB"):
        image = image.convert("RGB")
    image = image.resize(TARGET_SIZE, Image.BILINEAR)
    arr = np.asarray(image, dtype=np.float32) / 255.0
    if arr.ndim == 2:
        arr = np.stack([arr, arr, arr], axis=0)  # grayscale replication
    else:
        arr = arr.transpose(2, 0, 1)
    return (arr - IMAGENET_MEAN[:, None, None]) / IMAGENET_STD[:, None, None]
