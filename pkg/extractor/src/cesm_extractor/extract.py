"""Batched CNN feature extraction into EMB1 + labels files.

Each backbone is truncated at its final convolutional block and
global-average-pooled, yielding the standard penultimate representation
(1024-d for densenet121, 2048-d for resnet50, 512-d for vgg16, 1280-d
for efficientnet B0).
"""

from __future__ import annotations

import csv
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F
from torchvision import models

from .emb1 import write_emb1, write_labels_csv
from .preprocess import UndecodableImageError, preprocess

BACKBONES = ("densenet121", "resnet50", "vgg16", "efficientnet")

FEATURE_DIMS = {
    "densenet121": 1024,
    "resnet50": 2048,
    "vgg16": 512,
    "efficientnet": 1280,
}


class MissingImageError(FileNotFoundError):
    pass


@dataclass
class ExtractorConfig:
    image_dir: str
    metadata_path: str
    backbone: str = "densenet121"
    output_path: str = "embeddings.emb1"
    labels_path: str = "labels.csv"
    batch_size: int = 16
    pretrained: bool = True
    skip_missing: bool = False
    image_column: str = "Image_name"
    label_column: str = "BIRADS"

    def __post_init__(self):
        if self.backbone not in BACKBONES:
            raise ValueError(f"backbone must be one of {BACKBONES}, "
                             f"got {self.backbone!r}")


def _build_backbone(name: str, pretrained: bool) -> torch.nn.Module:
    if not pretrained:
        # fixed init so offline smoke runs stay reproducible
        torch.manual_seed(0)
    if name == "densenet121":
        weights = models.DenseNet121_Weights.IMAGENET1K_V1 if pretrained else None
        net = models.densenet121(weights=weights)
    elif name == "resnet50":
        weights = models.ResNet50_Weights.IMAGENET1K_V1 if pretrained else None
        net = models.resnet50(weights=weights)
    elif name == "vgg16":
        weights = models.VGG16_Weights.IMAGENET1K_V1 if pretrained else None
        net = models.vgg16(weights=weights)
    else:
        weights = models.EfficientNet_B0_Weights.IMAGENET1K_V1 if pretrained else None
        net = models.efficientnet_b0(weights=weights)
    net.eval()
    return net


def _forward_features(name: str, net: torch.nn.Module,
                      batch: torch.Tensor) -> torch.Tensor:
    """Penultimate features: final conv block, ReLU where the stock
    forward applies one, then global average pooling."""
    if name == "densenet121":
        out = F.relu(net.features(batch), inplace=False)
    elif name == "resnet50":
        x = net.conv1(batch)
        x = net.bn1(x)
        x = net.relu(x)
        x = net.maxpool(x)
        x = net.layer1(x)
        x = net.layer2(x)
        x = net.layer3(x)
        out = net.layer4(x)
    else:  # vgg16 and efficientnet expose a features stack
        out = net.features(batch)
    pooled = F.adaptive_avg_pool2d(out, (1, 1))
    return torch.flatten(pooled, 1)


def feature_dim(name: str, pretrained: bool = False) -> int:
    """Penultimate width read off the instantiated model."""
    net = _build_backbone(name, pretrained)
    with torch.no_grad():
        probe = torch.zeros(1, 3, 224, 224)
        return int(_forward_features(name, net, probe).shape[1])


def read_metadata(path, image_column: str, label_column: str):
    """(image_id, label) pairs in sheet order; CSV or, with pandas
    installed, an Excel sheet."""
    path = Path(path)
    if path.suffix.lower() in (".xlsx", ".xls"):
        import pandas as pd
        frame = pd.read_excel(path)
        records = frame.to_dict("records")
    else:
        with open(path, "r", encoding="utf-8", newline="") as f:
            records = list(csv.DictReader(f))
    if not records:
        raise ValueError(f"no metadata rows in {path}")
    for col in (image_column, label_column):
        if col not in records[0]:
            raise ValueError(f"metadata column {col!r} not found; "
                             f"available: {sorted(records[0])}")
    return [(str(r[image_column]), int(r[label_column])) for r in records]


def _resolve_image(image_dir: Path, image_id: str) -> Path | None:
    candidate = image_dir / image_id
    if candidate.exists():
        return candidate
    for ext in (".jpg", ".jpeg", ".png"):
        candidate = image_dir / f"{image_id}{ext}"
        if candidate.exists():
            return candidate
    return None


def extract(config: ExtractorConfig):
    """Run the backbone over every metadata row; write EMB1 + labels.

    Returns (count, dim, skipped) where skipped lists image ids that
    were missing or undecodable (only under skip_missing).
    """
    image_dir = Path(config.image_dir)
    metadata = read_metadata(config.metadata_path, config.image_column,
                             config.label_column)
    net = _build_backbone(config.backbone, config.pretrained)

    kept, skipped, tensors = [], [], []
    for image_id, label in metadata:
        path = _resolve_image(image_dir, image_id)
        if path is None:
            if not config.skip_missing:
                raise MissingImageError(f"image {image_id!r} referenced by "
                                        f"metadata not found in {image_dir}")
            skipped.append(image_id)
            continue
        try:
            tensors.append(torch.from_numpy(preprocess(path)))
        except UndecodableImageError as e:
            if not config.skip_missing:
                raise
            print(f"warning: skipping {image_id}: {e}", file=sys.stderr)
            skipped.append(image_id)
            continue
        kept.append((image_id, label))

    chunks = []
    with torch.no_grad():
        for start in range(0, len(tensors), config.batch_size):
            batch = torch.stack(tensors[start:start + config.batch_size])
            chunks.append(_forward_features(config.backbone, net, batch).numpy())
    features = (np.vstack(chunks) if chunks
                else np.zeros((0, FEATURE_DIMS[config.backbone]), dtype=np.float32))
    features = features.astype(np.float32)

    zero_rows = np.where(np.sqrt(np.sum(features.astype(np.float64) ** 2,
                                        axis=1)) < 1e-12)[0]
    for row in zero_rows:
        print(f"warning: all-zero embedding at row {row} "
              f"({kept[row][0]}); cosine indexing would fail", file=sys.stderr)

    write_emb1(features, config.output_path)
    write_labels_csv(kept, config.labels_path)
    return len(kept), features.shape[1], skipped
