"""Frame-skipping rule, implemented independently of padstack.

One frame represents each complete segment of `segment_length` frames: the
segment's last frame. Videos shorter than one segment keep their final frame
so no video is dropped. Kept index k for segment i is i * segment_length - 1
(0-based), i = 1..floor(total / segment_length).
"""

from .errors import InvalidInputError


def plan_indices(total_frames: int, segment_length: int = 30) -> list[int]:
    if total_frames < 1:
        raise InvalidInputError(f"total_frames must be >= 1, got {total_frames}")
    if segment_length < 1:
        raise InvalidInputError(f"segment_length must be >= 1, got {segment_length}")
    segments = total_frames // segment_length
    if segments == 0:
        return [total_frames - 1]
    return [i * segment_length - 1 for i in range(1, segments + 1)]
