"""Two-pass video decoding built on OpenCV.

Pass one counts the decodable frames (container metadata is advisory only:
a mismatch is warned about and the decoded count wins, since the sampling
plan must refer to frames that actually exist). Pass two re-reads the file
and decodes just the planned frames.
"""

import warnings
from pathlib import Path

import cv2
import numpy as np

from .errors import DataError


def _open(path) -> cv2.VideoCapture:
    path = Path(path)
    if not path.exists():
        raise DataError(f"video not found: {path}")
    cap = cv2.VideoCapture(str(path))
    if not cap.isOpened():
        raise DataError(f"cannot open video: {path}")
    return cap


def count_frames(path) -> int:
    """Number of decodable frames; warns when container metadata disagrees."""
    cap = _open(path)
    try:
        metadata = int(cap.get(cv2.CAP_PROP_FRAME_COUNT))
        decoded = 0
        while cap.grab():
            decoded += 1
    finally:
        cap.release()
    if decoded == 0:
        raise DataError(f"no decodable frames in {path}")
    if metadata > 0 and metadata != decoded:
        warnings.warn(
            f"{path}: container metadata reports {metadata} frames but "
            f"{decoded} decoded; proceeding with the decoded count",
            RuntimeWarning,
        )
    return decoded


def read_frames(path, indices) -> list[np.ndarray]:
    """Decode the frames at `indices` (0-based, ascending), BGR uint8."""
    wanted = set(indices)
    frames: dict[int, np.ndarray] = {}
    cap = _open(path)
    try:
        position = 0
        while len(frames) < len(wanted) and cap.grab():
            if position in wanted:
                ok, frame = cap.retrieve()
                if not ok:
                    raise DataError(f"frame {position} of {path} failed to decode")
                frames[position] = frame
            position += 1
    finally:
        cap.release()
    missing = [i for i in indices if i not in frames]
    if missing:
        raise DataError(f"frames {missing} not decodable in {path}")
    return [frames[i] for i in indices]
