"""CNN feature extraction from image directories into EMB1 + labels files."""

from .extract import (BACKBONES, FEATURE_DIMS, ExtractorConfig,
                      MissingImageError, extract, feature_dim, read_metadata)
from .preprocess import (IMAGENET_MEAN, IMAGENET_STD, UndecodableImageError,
                         preprocess)

__version__ = "0.1.0"
