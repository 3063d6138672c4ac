"""Uniform frame skipping.

A video of T frames is partitioned into non-overlapping segments of a fixed
length S (30 frames by default) and the last frame of every complete segment
is kept, i.e. zero-based indices S-1, 2S-1, ..., kS-1 with k = floor(T/S).
Frames in an incomplete trailing segment are dropped so the retained frames
stay evenly spaced. A video shorter than one segment still contributes its
final frame, so no video is unrepresentable.
"""

from dataclasses import dataclass, field

from .errors import InvalidInputError

DEFAULT_SEGMENT_LENGTH = 30


@dataclass(frozen=True)
class SamplerConfig:
    """Sampling policy: one retained frame per `segment_length` frames."""

    segment_length: int = DEFAULT_SEGMENT_LENGTH

    def __post_init__(self):
        if self.segment_length < 1:
            raise InvalidInputError(
                f"segment_length must be >= 1, got {self.segment_length}"
            )


@dataclass(frozen=True)
class FrameSelection:
    """Result of sampling one video: which frames to keep."""

    total_frames: int
    indices: tuple[int, ...] = field(default_factory=tuple)
    segments: int = 0


def select_frames(total_frames: int, config: SamplerConfig | None = None) -> FrameSelection:
    """Pick the retained frame indices for a video of `total_frames` frames.

    Returns the last frame of each complete segment; a video shorter than
    one segment yields just its last frame. Raises InvalidInputError when
    the video has no frames at all.
    """
    if config is None:
        config = SamplerConfig()
    if total_frames < 1:
        raise InvalidInputError(
            f"total_frames must be >= 1, got {total_frames} (no frames to sample)"
        )
    seg = config.segment_length
    n_segments = total_frames // seg
    if n_segments == 0:
        return FrameSelection(total_frames, (total_frames - 1,), 0)
    indices = tuple(range(seg - 1, n_segments * seg, seg))
    return FrameSelection(total_frames, indices, n_segments)
