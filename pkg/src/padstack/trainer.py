"""Mini-batch Adam training with validation-driven early stopping.

A validation pass runs every `validation_frequency` iterations (one
iteration = one mini-batch update). Training stops once `patience`
consecutive checks fail to improve the best validation loss by more than
MIN_IMPROVEMENT, or at the `max_epochs` safety cap; the parameters returned
are the best checkpoint's, not the last. Everything is deterministic given
the config seed: the epoch shuffle is a pure function of (seed, epoch).
"""

from dataclasses import dataclass, field, replace

import numpy as np

from . import models
from .errors import InvalidInputError, NumericalError
from .numerics import AdamState, adam_step, make_rng

MIN_IMPROVEMENT = 1e-6


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-4
    batch_size: int = 32
    validation_frequency: int = 30
    patience: int = 5
    max_epochs: int = 100
    seed: int = 0
    max_gradient_norm: float | None = None

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise InvalidInputError(f"learning_rate must be > 0, got {self.learning_rate}")
        for name in ("batch_size", "validation_frequency", "patience", "max_epochs"):
            if getattr(self, name) < 1:
                raise InvalidInputError(f"{name} must be >= 1, got {getattr(self, name)}")

    def with_seed(self, seed) -> "TrainConfig":
        return replace(self, seed=seed)


@dataclass
class TrainHistory:
    train_loss: list[float] = field(default_factory=list)
    check_iterations: list[int] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    val_accuracy: list[float] = field(default_factory=list)
    stop_reason: str = "max_epochs"          # or "early_stop"
    best_check_index: int = -1


def improvement_streak(val_losses) -> int:
    """Number of trailing checks that failed to improve the running best."""
    best = np.inf
    streak = 0
    for loss in val_losses:
        if best - loss > MIN_IMPROVEMENT:
            best = loss
            streak = 0
        else:
            streak += 1
    return streak


def early_stop_check(history, patience: int) -> bool:
    """True iff the last `patience` checks all failed to improve the best loss.

    Accepts a TrainHistory or a plain sequence of validation losses.
    """
    losses = history.val_loss if isinstance(history, TrainHistory) else list(history)
    if not losses:
        raise InvalidInputError("early_stop_check needs at least one validation check")
    return improvement_streak(losses) >= patience


def evaluate_loss(model: models.SequenceModel, seqs) -> tuple[float, float]:
    """Mean loss and accuracy of `model` over a list of feature sequences."""
    total = 0.0
    correct = 0
    for seq in seqs:
        probs = models.forward(model, seq).probs
        total += models.loss(probs, seq.label)
        predicted = 1 if probs.p_attack > probs.p_live else 0
        correct += int(predicted == seq.label)
    return total / len(seqs), correct / len(seqs)


def _batch_gradients(model, batch):
    """Mean loss and mean per-parameter gradients over one batch."""
    grads = {name: np.zeros_like(p) for name, p in model.params.items()}
    total = 0.0
    for seq in batch:
        sample_grads = models.backward(model, seq, seq.label)
        for name in grads:
            grads[name] += sample_grads[name]
        total += models.loss(models.forward(model, seq).probs, seq.label)
    scale = 1.0 / len(batch)
    for name in grads:
        grads[name] *= scale
    return total * scale, grads


def _clip_global_norm(grads, max_norm):
    norm = np.sqrt(sum(float(np.sum(g.astype(np.float64) ** 2)) for g in grads.values()))
    if norm > max_norm and norm > 0:
        factor = max_norm / norm
        for name in grads:
            grads[name] *= factor
    return grads


def train(model: models.SequenceModel, train_set, val_set,
          config: TrainConfig) -> tuple[models.SequenceModel, TrainHistory]:
    """Train a copy of `model`; returns (best-checkpoint model, history)."""
    if not train_set or not val_set:
        raise InvalidInputError("train and validation sets must be non-empty")
    for seq in train_set + val_set:
        if seq.values.shape[1] != model.input_dim:
            raise InvalidInputError(
                f"sequence {seq.video_id!r} has dim {seq.values.shape[1]}, "
                f"model expects {model.input_dim}"
            )

    work = model.copy()
    opt_state = {name: AdamState.zeros_like(p) for name, p in work.params.items()}
    history = TrainHistory()

    best_loss = np.inf
    best_params = {k: v.copy() for k, v in work.params.items()}
    streak = 0
    iteration = 0
    stopped = False

    def run_check():
        nonlocal best_loss, best_params, streak, stopped
        val_loss, val_acc = evaluate_loss(work, val_set)
        history.check_iterations.append(iteration)
        history.val_loss.append(val_loss)
        history.val_accuracy.append(val_acc)
        if best_loss - val_loss > MIN_IMPROVEMENT:
            best_loss = val_loss
            best_params = {k: v.copy() for k, v in work.params.items()}
            history.best_check_index = len(history.val_loss) - 1
            streak = 0
        else:
            streak += 1
            if streak >= config.patience:
                history.stop_reason = "early_stop"
                stopped = True

    n = len(train_set)
    for epoch in range(config.max_epochs):
        order = make_rng((config.seed, epoch)).permutation(n)
        for start in range(0, n, config.batch_size):
            batch = [train_set[i] for i in order[start:start + config.batch_size]]
            batch_loss, grads = _batch_gradients(work, batch)
            if not np.isfinite(batch_loss):
                raise NumericalError(f"training loss diverged at iteration {iteration + 1}")
            history.train_loss.append(batch_loss)
            if config.max_gradient_norm is not None:
                grads = _clip_global_norm(grads, config.max_gradient_norm)
            for name in work.params:
                work.params[name], opt_state[name] = adam_step(
                    work.params[name], grads[name], opt_state[name],
                    config.learning_rate, name=name)
            iteration += 1
            if iteration % config.validation_frequency == 0:
                run_check()
                if stopped:
                    break
        if stopped:
            break

    # A short run may end between checks; make sure at least one happened.
    if not history.val_loss:
        run_check()

    best_model = models.SequenceModel(work.kind, work.input_dim, work.hidden_dim,
                                      best_params)
    return best_model, history


def write_history(history: TrainHistory, path) -> None:
    """Tab-separated table: iteration, loss, val_loss, val_acc.

    Validation columns are filled only on rows where a check ran.
    """
    checks = dict(zip(history.check_iterations,
                      zip(history.val_loss, history.val_accuracy)))
    with open(path, "w") as fh:
        fh.write("iteration\tloss\tval_loss\tval_acc\n")
        for i, loss_value in enumerate(history.train_loss, start=1):
            if i in checks:
                val_loss, val_acc = checks[i]
                fh.write(f"{i}\t{loss_value:.6f}\t{val_loss:.6f}\t{val_acc:.6f}\n")
            else:
                fh.write(f"{i}\t{loss_value:.6f}\t\t\n")
