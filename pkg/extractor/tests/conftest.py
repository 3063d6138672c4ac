"""Shared fixtures: synthetic videos and a session-wide random-weights network."""

import cv2
import numpy as np
import pytest

from padextract.features import FeatureExtractor


def write_video(path, frames, size=(96, 64), codec="MJPG", fps=30.0):
    """Write BGR uint8 `frames` to `path`; returns the frame count."""
    writer = cv2.VideoWriter(str(path), cv2.VideoWriter_fourcc(*codec), fps, size)
    assert writer.isOpened(), f"VideoWriter refused {path}"
    for frame in frames:
        writer.write(frame)
    writer.release()
    return len(frames)


def gradient_frames(count, size=(96, 64), seed=0):
    """Per-frame distinct content so frame identity is visible in features."""
    rng = np.random.default_rng(seed)
    width, height = size
    base = rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8)
    frames = []
    for i in range(count):
        frame = base.copy()
        frame[:, :, 0] = (frame[:, :, 0].astype(int) + 7 * i) % 256
        frames.append(frame)
    return frames


def solid_frames(count, color=(32, 64, 128), size=(96, 64)):
    width, height = size
    frame = np.empty((height, width, 3), dtype=np.uint8)
    frame[:] = color
    return [frame.copy() for _ in range(count)]


@pytest.fixture(scope="session")
def extractor():
    return FeatureExtractor(random_seed=7)
