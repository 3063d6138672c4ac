"""Recurrent sequence classifiers: LSTM, BiLSTM, and GRU with a softmax head.

Gate conventions (x_t input, h_t hidden, c_t cell, sigma the logistic
function; W maps input, U maps hidden state, b is the bias):

LSTM (forget-gate variant of the original formulation):
    i_t = sigma(W_i x_t + U_i h_{t-1} + b_i)          input gate
    f_t = sigma(W_f x_t + U_f h_{t-1} + b_f)          forget gate
    g_t = tanh (W_g x_t + U_g h_{t-1} + b_g)          candidate
    o_t = sigma(W_o x_t + U_o h_{t-1} + b_o)          output gate
    c_t = f_t * c_{t-1} + i_t * g_t
    h_t = o_t * tanh(c_t)

GRU (candidate sees the reset-gated previous state; the update gate keeps
the previous state):
    z_t = sigma(W_z x_t + U_z h_{t-1} + b_z)          update gate
    r_t = sigma(W_r x_t + U_r h_{t-1} + b_r)          reset gate
    n_t = tanh (W_n x_t + U_n (r_t * h_{t-1}) + b_n)  candidate
    h_t = z_t * h_{t-1} + (1 - z_t) * n_t

BiLSTM runs two independent LSTM parameter sets, one over the sequence in
order and one over it reversed.

The classification head is a single dense layer on the final representation
(last hidden state; for BiLSTM the concatenation of each direction's final
state) followed by a 2-way softmax: index 0 = live, index 1 = attack.
Initial hidden and cell states are zero. Backpropagation through time is
hand-derived per cell and checked against central finite differences.
"""

import io
import struct
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from .errors import FormatError, InvalidInputError, NumericalError
from .numerics import he_init

LOG_CLAMP = 1e-12

MODEL_MAGIC = b"SEQM"
MODEL_FORMAT_VERSION = 1


class CellKind(Enum):
    LSTM = "lstm"
    BILSTM = "bilstm"
    GRU = "gru"


_LSTM_GATES = ("i", "f", "g", "o")
_GRU_GATES = ("z", "r", "n")


def _cell_param_names(kind: CellKind) -> list[str]:
    if kind is CellKind.LSTM:
        gates = [f"{w}_{g}" for g in _LSTM_GATES for w in ("w", "u", "b")]
    elif kind is CellKind.GRU:
        gates = [f"{w}_{g}" for g in _GRU_GATES for w in ("w", "u", "b")]
    else:
        gates = [f"{d}_{w}_{g}" for d in ("fw", "bw")
                 for g in _LSTM_GATES for w in ("w", "u", "b")]
    return gates + ["head_w", "head_b"]


class ClassProbs(NamedTuple):
    p_live: float
    p_attack: float


class ForwardResult(NamedTuple):
    hidden: np.ndarray      # (frames, rep_dim) hidden trajectory
    probs: ClassProbs


@dataclass
class SequenceModel:
    kind: CellKind
    input_dim: int
    hidden_dim: int
    params: dict[str, np.ndarray]

    @property
    def rep_dim(self) -> int:
        return 2 * self.hidden_dim if self.kind is CellKind.BILSTM else self.hidden_dim

    def copy(self) -> "SequenceModel":
        return SequenceModel(self.kind, self.input_dim, self.hidden_dim,
                             {k: v.copy() for k, v in self.params.items()})

    def astype(self, dtype) -> "SequenceModel":
        return SequenceModel(self.kind, self.input_dim, self.hidden_dim,
                             {k: v.astype(dtype) for k, v in self.params.items()})


def param_shape(name: str, kind: CellKind, input_dim: int, hidden_dim: int):
    """Expected shape of a named parameter."""
    rep = 2 * hidden_dim if kind is CellKind.BILSTM else hidden_dim
    if name == "head_w":
        return (2, rep)
    if name == "head_b":
        return (2,)
    base = name.split("_")[-2] if kind is CellKind.BILSTM else name.split("_")[0]
    if base == "w":
        return (hidden_dim, input_dim)
    if base == "u":
        return (hidden_dim, hidden_dim)
    return (hidden_dim,)


def new_model(kind: CellKind, input_dim: int, hidden_dim: int,
              rng: np.random.Generator, dtype=np.float32) -> SequenceModel:
    """He-initialized model; biases start at zero."""
    if input_dim < 1 or hidden_dim < 1:
        raise InvalidInputError(
            f"input_dim and hidden_dim must be >= 1, got {input_dim}, {hidden_dim}"
        )
    params: dict[str, np.ndarray] = {}
    for name in _cell_param_names(kind):
        shape = param_shape(name, kind, input_dim, hidden_dim)
        if len(shape) == 1:
            params[name] = np.zeros(shape, dtype=dtype)
        else:
            params[name] = he_init(shape[0], shape[1], fan_in=shape[1],
                                   rng=rng, dtype=dtype)
    return SequenceModel(kind, input_dim, hidden_dim, params)


def zero_model(kind: CellKind, input_dim: int, hidden_dim: int,
               dtype=np.float32) -> SequenceModel:
    params = {name: np.zeros(param_shape(name, kind, input_dim, hidden_dim), dtype=dtype)
              for name in _cell_param_names(kind)}
    return SequenceModel(kind, input_dim, hidden_dim, params)


def validate_model(model: SequenceModel) -> None:
    expected = _cell_param_names(model.kind)
    if list(model.params.keys()) != expected:
        raise InvalidInputError(
            f"parameter set {sorted(model.params)} does not match {model.kind.value}"
        )
    for name, value in model.params.items():
        shape = param_shape(name, model.kind, model.input_dim, model.hidden_dim)
        if value.shape != shape:
            raise InvalidInputError(
                f"parameter {name} has shape {value.shape}, expected {shape}"
            )
        if not np.all(np.isfinite(value)):
            raise NumericalError(f"parameter {name} contains non-finite entries")


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _softmax2(logits):
    shifted = logits - np.max(logits)
    e = np.exp(shifted)
    return e / e.sum()


def _sequence_values(sequence) -> np.ndarray:
    values = sequence.values if hasattr(sequence, "values") else np.asarray(sequence)
    values = np.asarray(values)
    if values.ndim != 2 or values.shape[0] < 1:
        raise InvalidInputError(
            f"sequence must be a (frames, dim) matrix with frames >= 1, "
            f"got shape {values.shape}"
        )
    return values


def _check_dim(model: SequenceModel, values: np.ndarray) -> None:
    if values.shape[1] != model.input_dim:
        raise InvalidInputError(
            f"sequence dim {values.shape[1]} does not match model input_dim "
            f"{model.input_dim}"
        )


def _lstm_pass(params, prefix, xs):
    """Run one LSTM direction over xs; returns per-step caches."""
    p = {g: (params[f"{prefix}w_{g}"], params[f"{prefix}u_{g}"], params[f"{prefix}b_{g}"])
         for g in _LSTM_GATES}
    hdim = p["i"][0].shape[0]
    dtype = p["i"][0].dtype
    h = np.zeros(hdim, dtype=dtype)
    c = np.zeros(hdim, dtype=dtype)
    cache = {"x": [], "h_prev": [], "c_prev": [], "i": [], "f": [], "g": [],
             "o": [], "c": [], "tanh_c": [], "h": []}
    for t, x in enumerate(xs):
        i = _sigmoid(p["i"][0] @ x + p["i"][1] @ h + p["i"][2])
        f = _sigmoid(p["f"][0] @ x + p["f"][1] @ h + p["f"][2])
        g = np.tanh(p["g"][0] @ x + p["g"][1] @ h + p["g"][2])
        o = _sigmoid(p["o"][0] @ x + p["o"][1] @ h + p["o"][2])
        c_new = f * c + i * g
        tanh_c = np.tanh(c_new)
        h_new = o * tanh_c
        if not np.all(np.isfinite(h_new)):
            raise NumericalError(f"non-finite hidden state at step {t}")
        cache["x"].append(x)
        cache["h_prev"].append(h)
        cache["c_prev"].append(c)
        for key, val in zip(("i", "f", "g", "o", "c", "tanh_c", "h"),
                            (i, f, g, o, c_new, tanh_c, h_new)):
            cache[key].append(val)
        h, c = h_new, c_new
    return cache


def _lstm_backprop(params, prefix, cache, dh_last, grads):
    """BPTT through one LSTM direction; gradient arrives at the last step."""
    steps = len(cache["x"])
    dh = dh_last
    dc = np.zeros_like(dh)
    for t in range(steps - 1, -1, -1):
        i, f, g, o = cache["i"][t], cache["f"][t], cache["g"][t], cache["o"][t]
        tanh_c = cache["tanh_c"][t]
        x, h_prev, c_prev = cache["x"][t], cache["h_prev"][t], cache["c_prev"][t]

        da_o = dh * tanh_c * o * (1.0 - o)
        dc_total = dc + dh * o * (1.0 - tanh_c * tanh_c)
        da_f = dc_total * c_prev * f * (1.0 - f)
        da_i = dc_total * g * i * (1.0 - i)
        da_g = dc_total * i * (1.0 - g * g)

        dh = np.zeros_like(dh)
        for gate, da in zip(_LSTM_GATES, (da_i, da_f, da_g, da_o)):
            grads[f"{prefix}w_{gate}"] += np.outer(da, x)
            grads[f"{prefix}u_{gate}"] += np.outer(da, h_prev)
            grads[f"{prefix}b_{gate}"] += da
            dh += params[f"{prefix}u_{gate}"].T @ da
        dc = dc_total * f


def _gru_pass(params, xs):
    p = {g: (params[f"w_{g}"], params[f"u_{g}"], params[f"b_{g}"])
         for g in _GRU_GATES}
    hdim = p["z"][0].shape[0]
    h = np.zeros(hdim, dtype=p["z"][0].dtype)
    cache = {"x": [], "h_prev": [], "z": [], "r": [], "rh": [], "n": [], "h": []}
    for t, x in enumerate(xs):
        z = _sigmoid(p["z"][0] @ x + p["z"][1] @ h + p["z"][2])
        r = _sigmoid(p["r"][0] @ x + p["r"][1] @ h + p["r"][2])
        rh = r * h
        n = np.tanh(p["n"][0] @ x + p["n"][1] @ rh + p["n"][2])
        h_new = z * h + (1.0 - z) * n
        if not np.all(np.isfinite(h_new)):
            raise NumericalError(f"non-finite hidden state at step {t}")
        cache["x"].append(x)
        cache["h_prev"].append(h)
        for key, val in zip(("z", "r", "rh", "n", "h"), (z, r, rh, n, h_new)):
            cache[key].append(val)
        h = h_new
    return cache


def _gru_backprop(params, cache, dh_last, grads):
    steps = len(cache["x"])
    dh = dh_last
    for t in range(steps - 1, -1, -1):
        z, r, rh, n = cache["z"][t], cache["r"][t], cache["rh"][t], cache["n"][t]
        x, h_prev = cache["x"][t], cache["h_prev"][t]

        da_z = dh * (h_prev - n) * z * (1.0 - z)
        da_n = dh * (1.0 - z) * (1.0 - n * n)
        drh = params["u_n"].T @ da_n
        da_r = drh * h_prev * r * (1.0 - r)

        grads["w_z"] += np.outer(da_z, x)
        grads["u_z"] += np.outer(da_z, h_prev)
        grads["b_z"] += da_z
        grads["w_r"] += np.outer(da_r, x)
        grads["u_r"] += np.outer(da_r, h_prev)
        grads["b_r"] += da_r
        grads["w_n"] += np.outer(da_n, x)
        grads["u_n"] += np.outer(da_n, rh)
        grads["b_n"] += da_n

        dh = (dh * z + drh * r
              + params["u_z"].T @ da_z + params["u_r"].T @ da_r)


def _run_cells(model: SequenceModel, values: np.ndarray):
    """Forward recurrence; returns (caches, final representation)."""
    xs = list(values)
    if model.kind is CellKind.LSTM:
        cache = _lstm_pass(model.params, "", xs)
        return {"fwd": cache}, cache["h"][-1]
    if model.kind is CellKind.GRU:
        cache = _gru_pass(model.params, xs)
        return {"fwd": cache}, cache["h"][-1]
    fw = _lstm_pass(model.params, "fw_", xs)
    bw = _lstm_pass(model.params, "bw_", xs[::-1])
    rep = np.concatenate([fw["h"][-1], bw["h"][-1]])
    return {"fw": fw, "bw": bw}, rep


def forward(model: SequenceModel, sequence) -> ForwardResult:
    """Run the recurrence and classification head over one sequence.

    Returns the per-step hidden trajectory (for BiLSTM the two directions
    concatenated, backward states aligned to their original time index) and
    the softmax class probabilities.
    """
    values = _sequence_values(sequence)
    _check_dim(model, values)
    caches, rep = _run_cells(model, values)
    if model.kind is CellKind.BILSTM:
        bw_aligned = caches["bw"]["h"][::-1]
        hidden = np.stack([np.concatenate([f, b])
                           for f, b in zip(caches["fw"]["h"], bw_aligned)])
    else:
        hidden = np.stack(caches["fwd"]["h"])
    logits = model.params["head_w"] @ rep + model.params["head_b"]
    p = _softmax2(logits)
    return ForwardResult(hidden, ClassProbs(float(p[0]), float(p[1])))


def predict_probs(model: SequenceModel, sequence) -> ClassProbs:
    return forward(model, sequence).probs


def loss(probabilities: ClassProbs, label: int) -> float:
    """Negative log-likelihood of the true class, clamped away from log(0)."""
    if label not in (0, 1):
        raise InvalidInputError(f"label must be 0 (live) or 1 (attack), got {label}")
    p_true = probabilities.p_attack if label == 1 else probabilities.p_live
    return float(-np.log(max(p_true, LOG_CLAMP)))


def backward(model: SequenceModel, sequence, label: int) -> dict[str, np.ndarray]:
    """Exact loss gradients w.r.t. every parameter via BPTT."""
    if label not in (0, 1):
        raise InvalidInputError(f"label must be 0 (live) or 1 (attack), got {label}")
    values = _sequence_values(sequence)
    _check_dim(model, values)
    caches, rep = _run_cells(model, values)
    logits = model.params["head_w"] @ rep + model.params["head_b"]
    p = _softmax2(logits)

    grads = {name: np.zeros_like(value) for name, value in model.params.items()}
    dlogits = p.copy()
    dlogits[label] -= 1.0
    grads["head_w"] += np.outer(dlogits, rep)
    grads["head_b"] += dlogits
    drep = model.params["head_w"].T @ dlogits

    if model.kind is CellKind.LSTM:
        _lstm_backprop(model.params, "", caches["fwd"], drep, grads)
    elif model.kind is CellKind.GRU:
        _gru_backprop(model.params, caches["fwd"], drep, grads)
    else:
        h = model.hidden_dim
        _lstm_backprop(model.params, "fw_", caches["fw"], drep[:h], grads)
        _lstm_backprop(model.params, "bw_", caches["bw"], drep[h:], grads)
    return grads


# --- serialization -----------------------------------------------------------
#
# Binary container, all integers little-endian:
#   magic "SEQM" | version u32 | kind u8 | input_dim u32 | hidden_dim u32 |
#   n_params u32 | per parameter: name_len u16, name utf-8, rank u8,
#   dims u32 x rank, data float32 little-endian (row-major).

_KIND_CODES = {CellKind.LSTM: 0, CellKind.BILSTM: 1, CellKind.GRU: 2}
_CODE_KINDS = {v: k for k, v in _KIND_CODES.items()}


def model_to_bytes(model: SequenceModel) -> bytes:
    validate_model(model)
    buf = io.BytesIO()
    buf.write(MODEL_MAGIC)
    buf.write(struct.pack("<IBII", MODEL_FORMAT_VERSION, _KIND_CODES[model.kind],
                          model.input_dim, model.hidden_dim))
    buf.write(struct.pack("<I", len(model.params)))
    for name, value in model.params.items():
        encoded = name.encode("utf-8")
        buf.write(struct.pack("<H", len(encoded)))
        buf.write(encoded)
        buf.write(struct.pack("<B", value.ndim))
        buf.write(struct.pack(f"<{value.ndim}I", *value.shape))
        buf.write(np.ascontiguousarray(value, dtype="<f4").tobytes())
    return buf.getvalue()


def _read_exact(buf: io.BytesIO, count: int, what: str) -> bytes:
    data = buf.read(count)
    if len(data) != count:
        raise FormatError(
            f"truncated model file while reading {what} at byte offset "
            f"{buf.tell() - len(data)}: expected {count} bytes, got {len(data)}"
        )
    return data


def model_from_bytes(data: bytes) -> SequenceModel:
    buf = io.BytesIO(data)
    magic = _read_exact(buf, 4, "magic")
    if magic != MODEL_MAGIC:
        raise FormatError(f"bad model magic {magic!r} at byte offset 0")
    version, kind_code, input_dim, hidden_dim = struct.unpack(
        "<IBII", _read_exact(buf, 13, "header"))
    if version != MODEL_FORMAT_VERSION:
        raise FormatError(f"unsupported model format version {version}")
    if kind_code not in _CODE_KINDS:
        raise FormatError(f"unknown cell kind code {kind_code}")
    kind = _CODE_KINDS[kind_code]
    (n_params,) = struct.unpack("<I", _read_exact(buf, 4, "parameter count"))
    params: dict[str, np.ndarray] = {}
    for _ in range(n_params):
        (name_len,) = struct.unpack("<H", _read_exact(buf, 2, "parameter name length"))
        name = _read_exact(buf, name_len, "parameter name").decode("utf-8")
        (rank,) = struct.unpack("<B", _read_exact(buf, 1, "parameter rank"))
        shape = struct.unpack(f"<{rank}I", _read_exact(buf, 4 * rank, "parameter shape"))
        size = int(np.prod(shape)) if rank else 1
        raw = _read_exact(buf, 4 * size, f"parameter {name} data")
        params[name] = np.frombuffer(raw, dtype="<f4").reshape(shape).copy()
    model = SequenceModel(kind, input_dim, hidden_dim, params)
    validate_model(model)
    return model


def save_model(model: SequenceModel, path) -> None:
    with open(path, "wb") as fh:
        fh.write(model_to_bytes(model))


def load_model(path) -> SequenceModel:
    with open(path, "rb") as fh:
        return model_from_bytes(fh.read())
