"""Stacked ensemble: three recurrent base models plus an LSTM meta-model.

The base models are always [LSTM, BiLSTM, GRU], in that order; the order is
part of the serialized container contract. Each base model emits a pair of
class probabilities per video, and the three pairs form a 3-step, 2-dim
meta-feature sequence on which the meta LSTM is trained. Base models train
on one part of the training pool and the meta-model on held-out predictions
from the remaining part, so it never learns from overfit base outputs.

A plain averaging combiner ("sum") is available as a baseline next to the
learned meta-model combiner.
"""

import io
import json
import zipfile
from dataclasses import dataclass, field, replace

import numpy as np

from . import models, trainer
from .dataio import FeatureSequence, stratified_split
from .errors import FormatError, InvalidInputError, PadstackError
from .models import CellKind, SequenceModel
from .numerics import derive_seed, make_rng

ENSEMBLE_FORMAT_VERSION = 1
BASE_ORDER = (CellKind.LSTM, CellKind.BILSTM, CellKind.GRU)
COMBINERS = ("meta", "sum")

# stream ids for deriving per-purpose child seeds from the ensemble seed
_STREAM_INIT = {CellKind.LSTM: 0, CellKind.BILSTM: 1, CellKind.GRU: 2}
_STREAM_META_INIT = 3
_STREAM_STACK_SPLIT = 4
_STREAM_TRAIN = {CellKind.LSTM: 10, CellKind.BILSTM: 11, CellKind.GRU: 12}
_STREAM_META_TRAIN = 13


@dataclass(frozen=True)
class EnsembleConfig:
    lstm_hidden: int = 1000
    bilstm_hidden: int = 500
    gru_hidden: int = 20
    meta_hidden: int = 20
    meta_max_epochs: int = 100
    stacking_split_fraction: float = 0.25
    base: trainer.TrainConfig = field(default_factory=trainer.TrainConfig)
    seed: int = 0

    def __post_init__(self):
        for name in ("lstm_hidden", "bilstm_hidden", "gru_hidden", "meta_hidden",
                     "meta_max_epochs"):
            if getattr(self, name) < 1:
                raise InvalidInputError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not 0.0 < self.stacking_split_fraction < 1.0:
            raise InvalidInputError(
                f"stacking_split_fraction must be in (0, 1), "
                f"got {self.stacking_split_fraction}"
            )

    def hidden_for(self, kind: CellKind) -> int:
        return {CellKind.LSTM: self.lstm_hidden,
                CellKind.BILSTM: self.bilstm_hidden,
                CellKind.GRU: self.gru_hidden}[kind]


@dataclass
class EnsembleModel:
    base_models: list[SequenceModel]    # fixed order [LSTM, BiLSTM, GRU]
    meta_model: SequenceModel
    config: EnsembleConfig
    combiner: str = "meta"

    def __post_init__(self):
        kinds = tuple(m.kind for m in self.base_models)
        if kinds != BASE_ORDER:
            raise InvalidInputError(f"base model order must be {BASE_ORDER}, got {kinds}")
        if self.meta_model.input_dim != 2:
            raise InvalidInputError(
                f"meta model input_dim must be 2, got {self.meta_model.input_dim}"
            )
        if self.combiner not in COMBINERS:
            raise InvalidInputError(f"combiner must be one of {COMBINERS}")


def build_meta_features(base_models, sequence) -> np.ndarray:
    """3-step probability sequence, one (p_live, p_attack) row per base model."""
    steps = [models.predict_probs(m, sequence) for m in base_models]
    return np.asarray(steps, dtype=np.float32)


def _meta_sequence(base_models, seq: FeatureSequence) -> FeatureSequence:
    return FeatureSequence(
        video_id=seq.video_id,
        label=seq.label,
        values=build_meta_features(base_models, seq),
        frame_indices=np.arange(len(base_models), dtype=np.uint32),
    )


def train_ensemble(train_set, val_set, config: EnsembleConfig,
                   combiner: str = "meta"):
    """Train base models and the meta-model; returns (EnsembleModel, histories).

    The training pool is split (seeded, stratified) into a base-training part
    and a disjoint stacking part whose base-model predictions become the
    meta-model's training data.
    """
    if not train_set or not val_set:
        raise InvalidInputError("train and validation sets must be non-empty")
    dims = {seq.values.shape[1] for seq in train_set} | {seq.values.shape[1] for seq in val_set}
    if len(dims) != 1:
        raise InvalidInputError(f"inconsistent feature dims in dataset: {sorted(dims)}")
    (input_dim,) = dims

    base_part, stacking_part = stratified_split(
        train_set, config.stacking_split_fraction,
        derive_seed(config.seed, _STREAM_STACK_SPLIT))

    base_models = []
    histories = {}
    for kind in BASE_ORDER:
        init_rng = make_rng(derive_seed(config.seed, _STREAM_INIT[kind]))
        model = models.new_model(kind, input_dim, config.hidden_for(kind), init_rng)
        cfg = config.base.with_seed(derive_seed(config.seed, _STREAM_TRAIN[kind]))
        try:
            trained, history = trainer.train(model, base_part, val_set, cfg)
        except PadstackError as exc:
            raise type(exc)(f"{kind.value} base model: {exc}") from exc
        base_models.append(trained)
        histories[kind.value] = history

    meta_train = [_meta_sequence(base_models, s) for s in stacking_part]
    meta_val = [_meta_sequence(base_models, s) for s in val_set]
    meta_rng = make_rng(derive_seed(config.seed, _STREAM_META_INIT))
    meta_model = models.new_model(CellKind.LSTM, 2, config.meta_hidden, meta_rng)
    meta_cfg = replace(config.base,
                       max_epochs=config.meta_max_epochs,
                       seed=derive_seed(config.seed, _STREAM_META_TRAIN))
    meta_trained, meta_history = trainer.train(meta_model, meta_train, meta_val, meta_cfg)
    histories["meta"] = meta_history

    return EnsembleModel(base_models, meta_trained, config, combiner), histories


def predict(ensemble: EnsembleModel, sequence) -> float:
    """Attack score in [0, 1] for one sequence."""
    meta_features = build_meta_features(ensemble.base_models, sequence)
    if ensemble.combiner == "sum":
        return float(np.mean(meta_features[:, 1]))
    return models.predict_probs(ensemble.meta_model, meta_features).p_attack


# --- serialization -----------------------------------------------------------
#
# Container: a zip archive holding manifest.json plus the four model blobs,
# written with fixed entry order and timestamps so identical models give
# byte-identical files.

_ENTRY_ORDER = ("manifest.json", "base-lstm.seqm", "base-bilstm.seqm",
                "base-gru.seqm", "meta.seqm")


def _config_payload(config: EnsembleConfig) -> dict:
    return {
        "lstm_hidden": config.lstm_hidden,
        "bilstm_hidden": config.bilstm_hidden,
        "gru_hidden": config.gru_hidden,
        "meta_hidden": config.meta_hidden,
        "meta_max_epochs": config.meta_max_epochs,
        "stacking_split_fraction": config.stacking_split_fraction,
        "seed": config.seed,
        "base": {
            "learning_rate": config.base.learning_rate,
            "batch_size": config.base.batch_size,
            "validation_frequency": config.base.validation_frequency,
            "patience": config.base.patience,
            "max_epochs": config.base.max_epochs,
            "max_gradient_norm": config.base.max_gradient_norm,
        },
    }


def _config_from_payload(payload: dict) -> EnsembleConfig:
    base = trainer.TrainConfig(**payload.pop("base"))
    return EnsembleConfig(base=base, **payload)


def ensemble_to_bytes(ensemble: EnsembleModel) -> bytes:
    manifest = {
        "format_version": ENSEMBLE_FORMAT_VERSION,
        "order": [k.value for k in BASE_ORDER],
        "combiner": ensemble.combiner,
        "config": _config_payload(ensemble.config),
    }
    blobs = {
        "manifest.json": json.dumps(manifest, indent=2, sort_keys=True).encode(),
        "base-lstm.seqm": models.model_to_bytes(ensemble.base_models[0]),
        "base-bilstm.seqm": models.model_to_bytes(ensemble.base_models[1]),
        "base-gru.seqm": models.model_to_bytes(ensemble.base_models[2]),
        "meta.seqm": models.model_to_bytes(ensemble.meta_model),
    }
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w", compression=zipfile.ZIP_STORED) as zf:
        for name in _ENTRY_ORDER:
            info = zipfile.ZipInfo(name, date_time=(1980, 1, 1, 0, 0, 0))
            zf.writestr(info, blobs[name])
    return buf.getvalue()


def ensemble_from_bytes(data: bytes) -> EnsembleModel:
    try:
        zf = zipfile.ZipFile(io.BytesIO(data))
    except zipfile.BadZipFile as exc:
        raise FormatError(f"not an ensemble container: {exc}") from exc
    with zf:
        names = set(zf.namelist())
        missing = [n for n in _ENTRY_ORDER if n not in names]
        if missing:
            raise FormatError(f"ensemble container missing entries: {missing}")
        manifest = json.loads(zf.read("manifest.json"))
        if manifest.get("format_version") != ENSEMBLE_FORMAT_VERSION:
            raise FormatError(
                f"unsupported ensemble format version {manifest.get('format_version')}"
            )
        if manifest.get("order") != [k.value for k in BASE_ORDER]:
            raise FormatError(f"unexpected base model order {manifest.get('order')}")
        base = [models.model_from_bytes(zf.read(f"base-{k.value}.seqm"))
                for k in BASE_ORDER]
        meta = models.model_from_bytes(zf.read("meta.seqm"))
        config = _config_from_payload(manifest["config"])
    return EnsembleModel(base, meta, config, manifest.get("combiner", "meta"))


def save_ensemble(ensemble: EnsembleModel, path) -> None:
    with open(path, "wb") as fh:
        fh.write(ensemble_to_bytes(ensemble))


def load_ensemble(path) -> EnsembleModel:
    with open(path, "rb") as fh:
        return ensemble_from_bytes(fh.read())
