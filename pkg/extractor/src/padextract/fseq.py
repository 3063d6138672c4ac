"""FSEQ writing and manifest appending.

Both formats are interchange contracts with the padstack package and are
reproduced here from their specification rather than imported:

FSEQ, all integers little-endian: magic "FSEQ", format version u32, dim u32,
frames u32, label u8 (0 live / 1 attack), video_id as u32 length + UTF-8,
frame_indices as u32 x frames, values as f32 row-major.

Manifest: CSV with header fseq_path,label,dataset_tag,subject_id; labels are
the strings "live"/"attack"; relative paths resolve against the manifest's
directory.
"""

import csv
import struct
from pathlib import Path

import numpy as np

from .errors import InvalidInputError

FSEQ_MAGIC = b"FSEQ"
FSEQ_FORMAT_VERSION = 1
MANIFEST_HEADER = ["fseq_path", "label", "dataset_tag", "subject_id"]
LABEL_CODES = {"live": 0, "attack": 1}


def write_fseq(path, video_id: str, label: int, values: np.ndarray,
               frame_indices) -> None:
    values = np.ascontiguousarray(values, dtype="<f4")
    indices = np.asarray(frame_indices, dtype="<u4")
    if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
        raise InvalidInputError(f"values must be (frames, dim), got {values.shape}")
    if not np.all(np.isfinite(values)):
        raise InvalidInputError(f"non-finite feature values for {video_id!r}")
    if indices.shape != (values.shape[0],):
        raise InvalidInputError(
            f"{indices.size} frame indices for {values.shape[0]} frames"
        )
    frames, dim = values.shape
    vid = video_id.encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(FSEQ_MAGIC)
        fh.write(struct.pack("<IIIB", FSEQ_FORMAT_VERSION, dim, frames, label))
        fh.write(struct.pack("<I", len(vid)))
        fh.write(vid)
        fh.write(indices.tobytes())
        fh.write(values.tobytes())


def append_manifest_row(manifest_path, fseq_path, label: str, dataset_tag: str,
                        subject_id: str) -> None:
    """Append one row, creating the file with its header when absent.

    The FSEQ path is stored relative to the manifest's directory when it
    lives underneath it, so the output tree stays relocatable.
    """
    if label not in LABEL_CODES:
        raise InvalidInputError(f"label must be live or attack, got {label!r}")
    manifest_path = Path(manifest_path)
    fseq_path = Path(fseq_path)
    try:
        stored = fseq_path.resolve().relative_to(manifest_path.resolve().parent)
    except ValueError:
        stored = fseq_path.resolve()
    new_file = not manifest_path.exists() or manifest_path.stat().st_size == 0
    with open(manifest_path, "a", newline="") as fh:
        writer = csv.writer(fh)
        if new_file:
            writer.writerow(MANIFEST_HEADER)
        writer.writerow([str(stored), label, dataset_tag, subject_id])
