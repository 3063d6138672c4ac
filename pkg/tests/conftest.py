"""Shared fixtures: the synthetic end-to-end pipeline runs once per session."""

import time
from dataclasses import dataclass

import pytest
from hypothesis import HealthCheck, settings

from padstack import evaluation, models
from padstack.dataio import SyntheticSpec, generate_synthetic
from padstack.ensemble import EnsembleConfig, EnsembleModel, train_ensemble
from padstack.evaluation import ScoreEntry, ScoreSet
from padstack.numerics import derive_seed
from padstack.trainer import TrainConfig

settings.register_profile(
    "suite", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")

BASE_NAMES = ("lstm", "bilstm", "gru")


def base_score_set(model, seqs, provenance: str = "") -> ScoreSet:
    """Score sequences with one base model's attack probability."""
    entries = [ScoreEntry(s.video_id, models.predict_probs(model, s).p_attack, s.label)
               for s in seqs]
    return ScoreSet(entries, provenance)


def score_set_auc(scores: ScoreSet) -> float:
    return evaluation.auc(evaluation.roc_curve(scores))


@dataclass
class PipelineRun:
    """One full synthetic train/evaluate cycle plus derived metrics."""

    ensemble: EnsembleModel
    histories: dict
    report: evaluation.EvalReport
    base_target_auc: dict[str, float]
    meta_target_auc: float
    base_val_auc: dict[str, float]
    meta_val_auc: float
    train_set: list
    val_set: list
    source_test: list
    target_test: list
    elapsed: float


def run_pipeline(delta: float, *, seed: int = 42, n_train: int = 400,
                 n_val: int = 100, n_source_test: int = 100, n_target: int = 100,
                 dim: int = 16, frames: int = 7, noise: float = 1.0,
                 hidden: tuple[int, int, int] = (32, 16, 8), meta_hidden: int = 8,
                 learning_rate: float = 3e-3, patience: int = 10,
                 max_epochs: int = 60, meta_max_epochs: int = 100) -> PipelineRun:
    """Generate data, train the ensemble, and evaluate cross-dataset."""
    start = time.perf_counter()

    def pool(n, stream, prefix):
        spec = SyntheticSpec(n // 2, dim, frames, delta, noise,
                             derive_seed(seed, stream))
        return generate_synthetic(spec, id_prefix=prefix)

    train_set = pool(n_train, 0, "e2e-train")
    source_test = pool(n_source_test, 1, "e2e-src")
    target_test = pool(n_target, 2, "e2e-tgt")
    val_set = pool(n_val, 3, "e2e-val")

    config = EnsembleConfig(
        lstm_hidden=hidden[0], bilstm_hidden=hidden[1], gru_hidden=hidden[2],
        meta_hidden=meta_hidden, meta_max_epochs=meta_max_epochs,
        base=TrainConfig(learning_rate=learning_rate, patience=patience,
                         max_epochs=max_epochs),
        seed=seed,
    )
    ens, histories = train_ensemble(train_set, val_set, config)
    report = evaluation.cross_dataset_eval(ens, source_test, target_test,
                                           protocol_name="synthetic-e2e")

    base_target = {name: score_set_auc(base_score_set(model, target_test, name))
                   for name, model in zip(BASE_NAMES, ens.base_models)}
    base_val = {name: score_set_auc(base_score_set(model, val_set, name))
                for name, model in zip(BASE_NAMES, ens.base_models)}
    meta_val = score_set_auc(evaluation.score_sequences(ens, val_set, "val"))

    return PipelineRun(
        ensemble=ens,
        histories=histories,
        report=report,
        base_target_auc=base_target,
        meta_target_auc=report.auc,
        base_val_auc=base_val,
        meta_val_auc=meta_val,
        train_set=train_set,
        val_set=val_set,
        source_test=source_test,
        target_test=target_test,
        elapsed=time.perf_counter() - start,
    )


@pytest.fixture(scope="session")
def separable_run() -> PipelineRun:
    """Separable synthetic run: drift amplitude five times the noise level."""
    return run_pipeline(delta=5.0)


@pytest.fixture(scope="session")
def chance_run() -> PipelineRun:
    """Chance-level control: zero drift, classes identically distributed."""
    return run_pipeline(delta=0.0, n_train=120, n_val=60, n_source_test=200,
                        n_target=1000, hidden=(8, 8, 8), meta_hidden=4,
                        max_epochs=8, meta_max_epochs=8)
