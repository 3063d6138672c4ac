"""Frozen DenseNet-201 feature extraction.

Frames are resized straight to 224 x 224 (whole frame, no face cropping),
converted to RGB in [0, 1], normalized with the ImageNet statistics the
pretrained weights were trained with, and passed through the frozen network.
Features are the 1920-wide global-average-pooling output that precedes the
classifier, the only 1920-dim pooling point in the architecture.
"""

import hashlib
from pathlib import Path

import cv2
import numpy as np
import torch
import torch.nn.functional as F
from torchvision.models import densenet201

FEATURE_DIM = 1920
INPUT_SIZE = 224
IMAGENET_MEAN = np.array([0.485, 0.456, 0.406], dtype=np.float32)
IMAGENET_STD = np.array([0.229, 0.224, 0.225], dtype=np.float32)

# canonical torchvision checkpoint; the name infix is the sha256 prefix
WEIGHTS_FILENAME = "densenet201-c1103571.pth"
WEIGHTS_SHA256_PREFIX = "c1103571"

from .errors import DataError


def _cached_weights() -> Path | None:
    path = Path(torch.hub.get_dir()) / "checkpoints" / WEIGHTS_FILENAME
    return path if path.exists() else None


def _verify_checksum(path: Path) -> None:
    digest = hashlib.sha256(path.read_bytes()).hexdigest()
    if not digest.startswith(WEIGHTS_SHA256_PREFIX):
        raise DataError(
            f"{path}: sha256 {digest[:8]}... does not match the pinned "
            f"prefix {WEIGHTS_SHA256_PREFIX}"
        )


class FeatureExtractor:
    """Holds the frozen network; reusable across videos.

    Weights resolve from `weights_path`, then the torch hub cache. Pass
    `random_seed` instead to run with seeded random weights: the feature
    format and every shape contract are weight-independent, which keeps
    offline tests meaningful without the 77 MB checkpoint.
    """

    def __init__(self, weights_path=None, random_seed: int | None = None,
                 batch_size: int = 32):
        if batch_size < 1:
            raise DataError(f"batch_size must be >= 1, got {batch_size}")
        self.batch_size = batch_size
        if random_seed is not None:
            torch.manual_seed(random_seed)
            model = densenet201(weights=None)
        else:
            path = Path(weights_path) if weights_path else _cached_weights()
            if path is None:
                raise DataError(
                    f"no pretrained weights found: pass --weights or place "
                    f"{WEIGHTS_FILENAME} in {Path(torch.hub.get_dir()) / 'checkpoints'} "
                    f"(or use --random-weights for format-only runs)"
                )
            if not path.exists():
                raise DataError(f"weights file not found: {path}")
            _verify_checksum(path)
            model = densenet201(weights=None)
            model.load_state_dict(torch.load(path, weights_only=True))
        model.eval()
        for p in model.parameters():
            p.requires_grad_(False)
        self._model = model

    def extract(self, frames_bgr) -> np.ndarray:
        """(n, 1920) float32 features for a list of BGR uint8 frames."""
        if not frames_bgr:
            raise DataError("no frames to extract features from")
        batch = np.stack([self._preprocess(f) for f in frames_bgr])
        chunks = []
        with torch.no_grad():
            for start in range(0, len(batch), self.batch_size):
                x = torch.from_numpy(batch[start:start + self.batch_size])
                pooled = F.adaptive_avg_pool2d(F.relu(self._model.features(x)), 1)
                chunks.append(pooled.flatten(1).numpy())
        return np.concatenate(chunks).astype(np.float32)

    @staticmethod
    def _preprocess(frame_bgr: np.ndarray) -> np.ndarray:
        resized = cv2.resize(frame_bgr, (INPUT_SIZE, INPUT_SIZE),
                             interpolation=cv2.INTER_AREA)
        rgb = resized[:, :, ::-1].astype(np.float32) / 255.0
        normalized = (rgb - IMAGENET_MEAN) / IMAGENET_STD
        return normalized.transpose(2, 0, 1)
