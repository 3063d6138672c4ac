"""One video in, one FSEQ file out."""

from dataclasses import dataclass, field
from pathlib import Path

from . import fseq, video
from .errors import InvalidInputError
from .sampling import plan_indices


@dataclass
class ExtractionJob:
    video_path: Path
    label: str                  # "live" or "attack"
    dataset_tag: str
    subject_id: str
    segment_length: int = 30
    out_dir: Path = field(default_factory=Path.cwd)

    def __post_init__(self):
        self.video_path = Path(self.video_path)
        self.out_dir = Path(self.out_dir)
        if self.label not in fseq.LABEL_CODES:
            raise InvalidInputError(
                f"label must be live or attack, got {self.label!r}"
            )
        if self.segment_length < 1:
            raise InvalidInputError(
                f"segment_length must be >= 1, got {self.segment_length}"
            )


def run_job(job: ExtractionJob, extractor) -> Path:
    """Extract features for one video; returns the FSEQ path written.

    The frame plan is computed from the decoded frame count, so the stored
    frame_indices always refer to frames that were actually read.
    """
    total = video.count_frames(job.video_path)
    indices = plan_indices(total, job.segment_length)
    frames = video.read_frames(job.video_path, indices)
    values = extractor.extract(frames)
    job.out_dir.mkdir(parents=True, exist_ok=True)
    out_path = job.out_dir / f"{job.video_path.stem}.fseq"
    fseq.write_fseq(out_path, job.video_path.stem, fseq.LABEL_CODES[job.label],
                    values, indices)
    return out_path
