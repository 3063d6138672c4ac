"""Video on-ramp for the padstack PAD pipeline.

Decodes a video, keeps one frame per fixed-length segment, runs a frozen
DenseNet-201, and writes the 1920-dim pooling features as an FSEQ file plus
a manifest row. Talks to the padstack package only through its file formats.
"""

from .errors import DataError, ExtractError, InvalidInputError
from .extract import ExtractionJob, run_job
from .sampling import plan_indices

__all__ = [
    "DataError",
    "ExtractError",
    "ExtractionJob",
    "InvalidInputError",
    "plan_indices",
    "run_job",
]
