"""Feature-sequence files, dataset manifests, protocol configs, synthetic data.

FSEQ binary layout (all integers little-endian):
    magic "FSEQ" | format version u32 | dim u32 | frames u32 | label u8 |
    video_id length u32 + utf-8 bytes | frame_indices u32 x frames |
    values float32 little-endian, row-major (frames x dim)

Manifests are comma-separated text with the header
``fseq_path,label,dataset_tag,subject_id``; labels are the strings ``live``
or ``attack``. Relative fseq paths resolve against the manifest's directory.

A protocol config is a JSON file naming the leave-one-out split:
    {"name": ..., "sources": [tag, ...], "target": tag,
     "manifests": {tag: {"train": path, "test": path}, ...}}
"""

import csv
import io
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, FormatError, IntegrityError, InvalidInputError
from .numerics import make_rng
from .sampler import SamplerConfig, select_frames

FSEQ_MAGIC = b"FSEQ"
FSEQ_FORMAT_VERSION = 1

LABEL_NAMES = {0: "live", 1: "attack"}
LABEL_CODES = {"live": 0, "attack": 1}


@dataclass
class FeatureSequence:
    """One video reduced to a (frames x dim) float32 feature matrix."""

    video_id: str
    label: int                  # 0 = live, 1 = attack
    values: np.ndarray          # (frames, dim) float32
    frame_indices: np.ndarray   # original frame numbers, strictly increasing

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float32)
        self.frame_indices = np.asarray(self.frame_indices, dtype=np.uint32)
        validate_sequence(self)

    @property
    def frames(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]


def validate_sequence(seq: FeatureSequence) -> None:
    if seq.label not in (0, 1):
        raise InvalidInputError(f"label must be 0 or 1, got {seq.label}")
    if seq.values.ndim != 2 or seq.values.shape[0] < 1 or seq.values.shape[1] < 1:
        raise InvalidInputError(
            f"values must be a non-empty (frames, dim) matrix, got {seq.values.shape}"
        )
    if not np.all(np.isfinite(seq.values)):
        raise IntegrityError(f"sequence {seq.video_id!r} has non-finite values")
    if seq.frame_indices.shape != (seq.values.shape[0],):
        raise InvalidInputError(
            f"frame_indices length {seq.frame_indices.shape} does not match "
            f"frames {seq.values.shape[0]}"
        )
    if seq.frame_indices.size > 1 and not np.all(np.diff(seq.frame_indices.astype(np.int64)) > 0):
        raise InvalidInputError("frame_indices must be strictly increasing")


def write_fseq(seq: FeatureSequence, path) -> None:
    with open(path, "wb") as fh:
        fh.write(fseq_to_bytes(seq))


def fseq_to_bytes(seq: FeatureSequence) -> bytes:
    validate_sequence(seq)
    buf = io.BytesIO()
    buf.write(FSEQ_MAGIC)
    buf.write(struct.pack("<IIIB", FSEQ_FORMAT_VERSION, seq.dim, seq.frames, seq.label))
    vid = seq.video_id.encode("utf-8")
    buf.write(struct.pack("<I", len(vid)))
    buf.write(vid)
    buf.write(seq.frame_indices.astype("<u4").tobytes())
    buf.write(np.ascontiguousarray(seq.values, dtype="<f4").tobytes())
    return buf.getvalue()


def _read_exact(buf, count: int, what: str) -> bytes:
    data = buf.read(count)
    if len(data) != count:
        raise FormatError(
            f"truncated FSEQ file while reading {what} at byte offset "
            f"{buf.tell() - len(data)}: expected {count} bytes, got {len(data)}"
        )
    return data


def fseq_from_bytes(data: bytes) -> FeatureSequence:
    buf = io.BytesIO(data)
    magic = _read_exact(buf, 4, "magic")
    if magic != FSEQ_MAGIC:
        raise FormatError(f"bad FSEQ magic {magic!r} at byte offset 0")
    version, dim, frames, label = struct.unpack("<IIIB", _read_exact(buf, 13, "header"))
    if version != FSEQ_FORMAT_VERSION:
        raise FormatError(f"unsupported FSEQ format version {version}")
    if dim < 1 or frames < 1:
        raise FormatError(f"FSEQ header has dim={dim}, frames={frames}; both must be >= 1")
    if label not in (0, 1):
        raise FormatError(f"FSEQ header has label={label}; must be 0 or 1")
    (vid_len,) = struct.unpack("<I", _read_exact(buf, 4, "video_id length"))
    video_id = _read_exact(buf, vid_len, "video_id").decode("utf-8")
    idx_raw = _read_exact(buf, 4 * frames, "frame_indices")
    indices = np.frombuffer(idx_raw, dtype="<u4").copy()
    val_raw = _read_exact(buf, 4 * frames * dim, "values")
    values = np.frombuffer(val_raw, dtype="<f4").reshape(frames, dim).copy()
    trailing = buf.read(1)
    if trailing:
        raise FormatError(f"trailing bytes after payload at offset {buf.tell() - 1}")
    if not np.all(np.isfinite(values)):
        raise IntegrityError(f"FSEQ payload for {video_id!r} contains non-finite values")
    return FeatureSequence(video_id, int(label), values, indices)


def read_fseq(path) -> FeatureSequence:
    with open(path, "rb") as fh:
        return fseq_from_bytes(fh.read())


# --- manifests and protocols --------------------------------------------------

MANIFEST_HEADER = ["fseq_path", "label", "dataset_tag", "subject_id"]


@dataclass
class ManifestRow:
    fseq_path: Path
    label: int
    dataset_tag: str
    subject_id: str


def read_manifest(path) -> list[ManifestRow]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"manifest not found: {path}")
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != MANIFEST_HEADER:
            raise FormatError(
                f"{path}: manifest header must be {','.join(MANIFEST_HEADER)}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 4:
                raise FormatError(f"{path}:{lineno}: expected 4 columns, got {len(row)}")
            fseq_path, label_str, tag, subject = (c.strip() for c in row)
            if label_str not in LABEL_CODES:
                raise FormatError(
                    f"{path}:{lineno}: unknown label {label_str!r} "
                    f"(expected live or attack)"
                )
            resolved = Path(fseq_path)
            if not resolved.is_absolute():
                resolved = path.parent / resolved
            rows.append(ManifestRow(resolved, LABEL_CODES[label_str], tag, subject))
    return rows


def write_manifest(rows: list[ManifestRow], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_HEADER)
        for row in rows:
            writer.writerow([str(row.fseq_path), LABEL_NAMES[row.label],
                             row.dataset_tag, row.subject_id])


@dataclass
class ProtocolConfig:
    """Leave-one-out protocol: train on the sources, test on the target."""

    name: str
    sources: list[str]
    target: str
    manifests: dict[str, dict[str, Path]]   # tag -> {"train": path, "test": path}

    def __post_init__(self):
        if not self.sources:
            raise DataError(f"protocol {self.name!r}: sources must be non-empty")
        if self.target in self.sources:
            raise DataError(
                f"protocol {self.name!r}: target {self.target!r} also appears "
                f"in sources"
            )


def read_protocol(path) -> ProtocolConfig:
    path = Path(path)
    if not path.exists():
        raise DataError(f"protocol config not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON: {exc}") from exc
    for key in ("name", "sources", "target", "manifests"):
        if key not in raw:
            raise FormatError(f"{path}: missing protocol key {key!r}")
    manifests = {}
    for tag, splits in raw["manifests"].items():
        manifests[tag] = {}
        for split, rel in splits.items():
            if split not in ("train", "test"):
                raise FormatError(f"{path}: unknown split {split!r} for {tag!r}")
            p = Path(rel)
            manifests[tag][split] = p if p.is_absolute() else path.parent / p
    return ProtocolConfig(raw["name"], list(raw["sources"]), raw["target"], manifests)


def write_protocol(config: ProtocolConfig, path) -> None:
    path = Path(path)
    payload = {
        "name": config.name,
        "sources": config.sources,
        "target": config.target,
        "manifests": {tag: {split: str(p) for split, p in splits.items()}
                      for tag, splits in config.manifests.items()},
    }
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _load_split(config: ProtocolConfig, tag: str, split: str,
                missing: list[str]) -> list[FeatureSequence]:
    splits = config.manifests.get(tag)
    if not splits or split not in splits:
        raise DataError(f"protocol {config.name!r}: no {split} manifest for {tag!r}")
    seqs = []
    for row in read_manifest(splits[split]):
        if not row.fseq_path.exists():
            missing.append(str(row.fseq_path))
            continue
        seqs.append(read_fseq(row.fseq_path))
    return seqs


def load_protocol(config: ProtocolConfig, include_train: bool = True):
    """Materialize (train pool, source test pool, target test pool).

    Source datasets' train splits are pooled for training, their test splits
    pooled for threshold selection, and the target's test split kept apart.
    Missing files are reported exhaustively, not first-failure. Pass
    ``include_train=False`` to skip loading the (possibly large) train pool.
    """
    missing: list[str] = []
    train_pool: list[FeatureSequence] = []
    source_test: list[FeatureSequence] = []
    for tag in config.sources:
        if include_train:
            train_pool.extend(_load_split(config, tag, "train", missing))
        source_test.extend(_load_split(config, tag, "test", missing))
    target_test = _load_split(config, config.target, "test", missing)
    if missing:
        listing = "\n  ".join(missing)
        raise DataError(f"{len(missing)} referenced FSEQ files are missing:\n  {listing}")
    return train_pool, source_test, target_test


def stratified_split(seqs: list[FeatureSequence], fraction: float, seed):
    """Split into (rest, held_out) with `fraction` of each label held out.

    Deterministic in `seed`; every label present keeps at least one item on
    each side when it has two or more members.
    """
    if not 0.0 < fraction < 1.0:
        raise InvalidInputError(f"fraction must be in (0, 1), got {fraction}")
    rng = make_rng(seed)
    rest: list[FeatureSequence] = []
    held: list[FeatureSequence] = []
    for label in (0, 1):
        group = [s for s in seqs if s.label == label]
        if not group:
            continue
        order = rng.permutation(len(group))
        n_held = int(round(fraction * len(group)))
        if len(group) >= 2:
            n_held = min(max(n_held, 1), len(group) - 1)
        held_idx = set(order[:n_held].tolist())
        for i, seq in enumerate(group):
            (held if i in held_idx else rest).append(seq)
    return rest, held


# --- synthetic data -----------------------------------------------------------


@dataclass(frozen=True)
class SyntheticSpec:
    """Desk-scale synthetic dataset: live videos drift, attacks stay static.

    Live videos carry a sinusoidal per-frame drift of amplitude `delta`;
    attack videos are a static base vector. Both share the same per-frame
    noise, so with delta = 0 the classes are identically distributed and
    only the temporal pattern separates them otherwise. The drift direction
    is one fixed unit template shared by every video: motion energizes the
    same feature channels in each clip, and a seed-independent direction
    keeps separately generated pools (train, source test, target) mutually
    consistent. The sinusoid runs two full cycles across the clip so that
    consecutive frames move substantially, and its phase is random per
    video, so no single frame index is informative by itself. The per-video
    base vector is kept small (a quarter of the noise level): it
    distinguishes videos without burying the temporal signal under
    class-independent variance.
    """

    n_videos: int           # per class
    dim: int
    frames: int
    delta: float
    noise: float
    seed: int

    def __post_init__(self):
        if self.n_videos < 1 or self.dim < 1 or self.frames < 1:
            raise InvalidInputError("n_videos, dim, and frames must all be >= 1")
        if self.delta < 0:
            raise InvalidInputError(f"delta must be >= 0, got {self.delta}")
        if self.noise <= 0:
            raise InvalidInputError(f"noise must be > 0, got {self.noise}")


def generate_synthetic(spec: SyntheticSpec, id_prefix: str = "synth") -> list[FeatureSequence]:
    """Deterministic synthetic feature sequences, one list with both classes."""
    rng = make_rng(spec.seed)
    indices = np.asarray(
        select_frames(spec.frames * 30, SamplerConfig(30)).indices, dtype=np.uint32
    )
    direction = np.full(spec.dim, 1.0 / np.sqrt(spec.dim))
    seqs: list[FeatureSequence] = []
    for label in (0, 1):
        for v in range(spec.n_videos):
            base = rng.normal(0.0, 0.25 * spec.noise, size=spec.dim)
            phase = rng.uniform(0.0, 2.0 * np.pi)
            noise = rng.normal(0.0, spec.noise, size=(spec.frames, spec.dim))
            t = np.arange(spec.frames)
            if label == 0:
                drift = spec.delta * np.sin(4.0 * np.pi * t / spec.frames + phase)
                values = base + np.outer(drift, direction) + noise
            else:
                values = base + noise
            seqs.append(FeatureSequence(
                video_id=f"{id_prefix}-{LABEL_NAMES[label]}-{v:04d}",
                label=label,
                values=values.astype(np.float32),
                frame_indices=indices,
            ))
    return seqs
