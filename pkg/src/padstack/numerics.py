"""Numerical substrate: seeded RNG, He initialization, Adam, finite differences.

All randomness flows through numpy's PCG64 generator so a given seed yields
the same sample stream on every platform. Training arithmetic runs in
float32; gradient-check suites use float64, where central differences are
actually meaningful.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, NumericalError

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPSILON = 1e-8


def make_rng(seed) -> np.random.Generator:
    """Deterministic random stream (PCG64) for the given seed.

    `seed` may be a non-negative int or a sequence of them; either way the
    stream is a pure function of it.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def derive_seed(seed: int, stream: int) -> int:
    """Child seed for an independent purpose-specific stream."""
    return int(np.random.SeedSequence([seed, stream]).generate_state(1)[0])


def he_init(rows: int, cols: int, fan_in: int, rng: np.random.Generator,
            dtype=np.float32) -> np.ndarray:
    """He-normal initialization: N(0, 2 / fan_in) entries."""
    if rows < 1 or cols < 1:
        raise InvalidInputError(f"matrix shape must be positive, got {rows}x{cols}")
    if fan_in < 1:
        raise InvalidInputError(f"fan_in must be >= 1, got {fan_in}")
    std = np.sqrt(2.0 / fan_in)
    return rng.normal(0.0, std, size=(rows, cols)).astype(dtype)


@dataclass
class AdamState:
    """Per-parameter Adam moments and the shared step counter."""

    first_moment: np.ndarray
    second_moment: np.ndarray
    step_count: int = 0
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    epsilon: float = ADAM_EPSILON

    @classmethod
    def zeros_like(cls, params: np.ndarray, beta1=ADAM_BETA1, beta2=ADAM_BETA2,
                   epsilon=ADAM_EPSILON) -> "AdamState":
        return cls(np.zeros_like(params), np.zeros_like(params), 0,
                   beta1, beta2, epsilon)


def adam_step(params: np.ndarray, grads: np.ndarray, state: AdamState,
              learning_rate: float, name: str = "param"):
    """One Adam update with bias correction; returns (new_params, new_state).

    Pure: inputs are not mutated. `name` only decorates error messages.
    """
    if params.shape != grads.shape:
        raise InvalidInputError(
            f"{name}: params shape {params.shape} != grads shape {grads.shape}"
        )
    if state.first_moment.shape != params.shape:
        raise InvalidInputError(
            f"{name}: Adam state shape {state.first_moment.shape} "
            f"!= params shape {params.shape}"
        )
    if not np.all(np.isfinite(grads)):
        raise NumericalError(f"non-finite gradient entries for {name}")

    t = state.step_count + 1
    m = state.beta1 * state.first_moment + (1.0 - state.beta1) * grads
    v = state.beta2 * state.second_moment + (1.0 - state.beta2) * grads * grads
    m_hat = m / (1.0 - state.beta1 ** t)
    v_hat = v / (1.0 - state.beta2 ** t)
    new_params = params - learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon)
    new_state = AdamState(m, v, t, state.beta1, state.beta2, state.epsilon)
    return new_params, new_state


def finite_difference_gradient(loss_fn, params: np.ndarray,
                               epsilon: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of a scalar loss, one coordinate at a time.

    Verification oracle: intentionally simple and independent of any
    analytic gradient code.
    """
    if epsilon <= 0:
        raise InvalidInputError(f"epsilon must be > 0, got {epsilon}")
    work = params.astype(np.float64, copy=True)
    grad = np.zeros_like(work)
    flat = work.reshape(-1)
    grad_flat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + epsilon
        loss_plus = float(loss_fn(work))
        flat[i] = orig - epsilon
        loss_minus = float(loss_fn(work))
        flat[i] = orig
        if not (np.isfinite(loss_plus) and np.isfinite(loss_minus)):
            raise NumericalError(f"non-finite loss at coordinate {i}")
        grad_flat[i] = (loss_plus - loss_minus) / (2.0 * epsilon)
    return grad
