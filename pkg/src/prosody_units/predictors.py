"""Emotion embedding, speaker table, and trainable duration/pitch predictors.

Both predictors share one architecture: a unit-embedding table, the 96-dim
emotion embedding broadcast-concatenated onto every timestep, a stack of 1-D
convolutions with tanh nonlinearities, and an affine head (1 output for
duration regression, d outputs for pitch bin activations).  Forward and
backward passes are written out explicitly so gradients can be verified
against central finite differences.

Training is plain SGD with a fixed learning rate; a fixed seed reproduces
initialization, batch order and the final parameters bit for bit.
"""

from dataclasses import dataclass, field

import numpy as np

from prosody_units.ioutil import atomic_write

EMO_DIM = 96


@dataclass
class EmotionEmbedding:
    """Fixed-length utterance-level vector of size 96."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (EMO_DIM,):
            raise ValueError(f"emotion embedding must have shape ({EMO_DIM},)")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("emotion embedding must be finite")


@dataclass
class EmotionBottleneck:
    """Affine map from frame-feature space to the 96-dim embedding space."""

    weight: np.ndarray  # (96, D)
    bias: np.ndarray  # (96,)

    def __post_init__(self):
        self.weight = np.asarray(self.weight, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weight.ndim != 2 or self.weight.shape[0] != EMO_DIM:
            raise ValueError(f"weight must be ({EMO_DIM}, D)")
        if self.bias.shape != (EMO_DIM,):
            raise ValueError(f"bias must be ({EMO_DIM},)")

    @classmethod
    def random(cls, dim_in, seed=0):
        rng = np.random.default_rng(seed)
        scale = np.sqrt(1.0 / dim_in)
        return cls(
            weight=rng.normal(0.0, scale, size=(EMO_DIM, dim_in)),
            bias=np.zeros(EMO_DIM),
        )


def encode_emotion(features, bottleneck):
    """Temporal mean of per-frame bottleneck outputs.

    The bottleneck is affine, so pooling commutes with it and the mean frame
    is mapped once.
    """
    if len(features) == 0:
        raise ValueError("cannot encode emotion from an empty feature sequence")
    if features.dim != bottleneck.weight.shape[1]:
        raise ValueError(
            f"dimension mismatch: features D={features.dim}, "
            f"bottleneck D={bottleneck.weight.shape[1]}"
        )
    pooled = features.frames.mean(axis=0)
    return EmotionEmbedding(values=bottleneck.weight @ pooled + bottleneck.bias)


@dataclass
class SpeakerTable:
    """Trainable fixed-size lookup table of speaker vectors."""

    entries: dict
    dim: int = 16

    def __post_init__(self):
        for sid, vec in self.entries.items():
            vec = np.asarray(vec, dtype=np.float64)
            if vec.shape != (self.dim,):
                raise ValueError(f"speaker {sid!r}: vector must have shape ({self.dim},)")
            self.entries[sid] = vec

    @classmethod
    def init(cls, speaker_ids, dim=16, seed=0):
        rng = np.random.default_rng(seed)
        entries = {sid: rng.normal(0.0, 0.1, size=dim) for sid in sorted(speaker_ids)}
        return cls(entries=entries, dim=dim)


def speaker_lookup(table, speaker_id):
    try:
        return table.entries[speaker_id]
    except KeyError:
        raise ValueError(f"unknown speaker: {speaker_id!r}") from None


# ---------------------------------------------------------------------------
# Predictor model
# ---------------------------------------------------------------------------


@dataclass
class PredictorModel:
    """Unit-embedding + emotion-conditioned conv stack + affine head.

    kind "duration" regresses one repetition count per reduced unit; kind
    "pitch" emits d bin logits per frame (sigmoid applied at predict time).
    Parameters live in `params`:
      emb       (K, E)
      conv{i}_w (C_out, kernel * C_in), conv{i}_b (C_out,)
      head_w    (out_dim, C_last), head_b (out_dim,)
    """

    kind: str
    k: int
    emb_dim: int = 32
    channels: tuple = (64, 64)
    kernel: int = 3
    out_dim: int = 1
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("duration", "pitch"):
            raise ValueError("kind must be 'duration' or 'pitch'")
        if self.kind == "duration" and self.out_dim != 1:
            raise ValueError("duration models have out_dim 1")
        if self.kernel % 2 != 1:
            raise ValueError("kernel width must be odd (same padding)")

    @classmethod
    def build(cls, kind, k, out_dim=1, emb_dim=32, channels=(64, 64), kernel=3, seed=0):
        rng = np.random.default_rng(seed)
        params = {"emb": rng.normal(0.0, 0.5, size=(k, emb_dim))}
        c_in = emb_dim + EMO_DIM
        for i, c_out in enumerate(channels):
            fan_in = kernel * c_in
            scale = np.sqrt(2.0 / (fan_in + c_out))
            params[f"conv{i}_w"] = rng.normal(0.0, scale, size=(c_out, fan_in))
            params[f"conv{i}_b"] = np.zeros(c_out)
            c_in = c_out
        scale = np.sqrt(2.0 / (c_in + out_dim))
        params["head_w"] = rng.normal(0.0, scale, size=(out_dim, c_in))
        params["head_b"] = np.zeros(out_dim)
        return cls(
            kind=kind,
            k=k,
            emb_dim=emb_dim,
            channels=tuple(channels),
            kernel=kernel,
            out_dim=out_dim,
            params=params,
        )

    def n_params(self):
        return sum(v.size for v in self.params.values())


def _emo_values(emo):
    if isinstance(emo, EmotionEmbedding):
        return emo.values
    emo = np.asarray(emo, dtype=np.float64)
    if emo.shape != (EMO_DIM,):
        raise ValueError(f"emotion must have shape ({EMO_DIM},)")
    return emo


def _unit_ids(units):
    ids = np.asarray(getattr(units, "units", units), dtype=np.int64)
    if ids.ndim != 1 or ids.size == 0:
        raise ValueError("unit sequence must be non-empty and 1-D")
    return ids


def _windows(x, kernel):
    """Same-padded sliding windows: (T, C) -> (T, kernel * C)."""
    pad = kernel // 2
    xp = np.concatenate(
        (np.zeros((pad, x.shape[1])), x, np.zeros((pad, x.shape[1])))
    )
    view = np.lib.stride_tricks.sliding_window_view(xp, kernel, axis=0)
    # view: (T, C, kernel) -> (T, kernel, C) -> flat, matching conv weight layout.
    return np.ascontiguousarray(view.transpose(0, 2, 1)).reshape(x.shape[0], -1)


def _forward(model, unit_ids, emo):
    """Raw head outputs (T, out_dim) plus caches for backprop."""
    if unit_ids.max() >= model.k or unit_ids.min() < 0:
        raise ValueError(
            f"unit id out of range: max {int(unit_ids.max())} for K={model.k}"
        )
    p = model.params
    x = np.concatenate(
        (p["emb"][unit_ids], np.broadcast_to(emo, (unit_ids.size, EMO_DIM))), axis=1
    )
    caches = []
    h = x
    for i in range(len(model.channels)):
        win = _windows(h, model.kernel)
        z = win @ p[f"conv{i}_w"].T + p[f"conv{i}_b"]
        a = np.tanh(z)
        caches.append((win, a))
        h = a
    out = h @ p["head_w"].T + p["head_b"]
    return out, (x, caches, h)


def _backward(model, unit_ids, cache, d_out):
    """Gradients of the loss for every parameter, given dL/d(head output)."""
    x, caches, h_last = cache
    p = model.params
    grads = {}
    grads["head_w"] = d_out.T @ h_last
    grads["head_b"] = d_out.sum(axis=0)
    d_h = d_out @ p["head_w"]
    for i in range(len(model.channels) - 1, -1, -1):
        win, a = caches[i]
        d_z = d_h * (1.0 - a * a)
        grads[f"conv{i}_w"] = d_z.T @ win
        grads[f"conv{i}_b"] = d_z.sum(axis=0)
        d_win = d_z @ p[f"conv{i}_w"]  # (T, kernel * C_in)
        c_in = d_win.shape[1] // model.kernel
        pad = model.kernel // 2
        t = d_win.shape[0]
        d_padded = np.zeros((t + 2 * pad, c_in))
        d_win = d_win.reshape(t, model.kernel, c_in)
        for kk in range(model.kernel):
            d_padded[kk : kk + t] += d_win[:, kk, :]
        d_h = d_padded[pad : pad + t]
    d_x = d_h
    d_emb_rows = d_x[:, : model.emb_dim]
    grads["emb"] = np.zeros_like(p["emb"])
    np.add.at(grads["emb"], unit_ids, d_emb_rows)
    return grads


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _loss_and_grads(model, sample):
    """Per-sample loss and parameter gradients.

    Duration: mean squared error on raw outputs against float targets.
    Pitch: mean per-bin binary cross-entropy of sigmoid outputs against
    one-hot bin targets.
    """
    units, emo, targets = sample
    unit_ids = _unit_ids(units)
    emo = _emo_values(emo)
    out, cache = _forward(model, unit_ids, emo)
    targets = np.asarray(targets, dtype=np.float64)
    if model.kind == "duration":
        y = targets.reshape(-1)
        if y.size != unit_ids.size:
            raise ValueError("duration targets must match sequence length")
        o = out[:, 0]
        loss = float(np.mean((o - y) ** 2))
        d_out = (2.0 * (o - y) / y.size)[:, None]
    else:
        if targets.shape != out.shape:
            raise ValueError(
                f"pitch targets must have shape {out.shape}, got {targets.shape}"
            )
        s = _sigmoid(out)
        eps = 1e-12
        loss = float(
            -np.mean(targets * np.log(s + eps) + (1 - targets) * np.log(1 - s + eps))
        )
        d_out = (s - targets) / targets.size
    grads = _backward(model, unit_ids, cache, d_out)
    return loss, grads


# ---------------------------------------------------------------------------
# Inference
# ---------------------------------------------------------------------------


def predict_durations(reduced, emo, model):
    """Integer repetition counts, one per reduced unit (rounded, floored at 1)."""
    if model.kind != "duration":
        raise ValueError("model kind must be 'duration'")
    out, _ = _forward(model, _unit_ids(reduced), _emo_values(emo))
    return np.maximum(1, np.rint(out[:, 0])).astype(np.int64)


def predict_pitch(units, emo, model, quantizer=None):
    """Per-frame sigmoid activations in (0,1)^d."""
    if model.kind != "pitch":
        raise ValueError("model kind must be 'pitch'")
    if quantizer is not None and quantizer.d != model.out_dim:
        raise ValueError(
            f"dimension mismatch: model emits {model.out_dim} bins, "
            f"quantizer has {quantizer.d}"
        )
    out, _ = _forward(model, _unit_ids(units), _emo_values(emo))
    return _sigmoid(out)


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


@dataclass
class TrainingConfig:
    learning_rate: float = 0.05
    epochs: int = 100
    batch_size: int = 16
    seed: int = 0
    loss: str = "duration-regression"  # or "pitch-bin"

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if self.loss not in ("duration-regression", "pitch-bin"):
            raise ValueError("loss must be 'duration-regression' or 'pitch-bin'")


def train_predictor(model, dataset, cfg):
    """SGD over (units, emotion, targets) samples; returns (model, loss_history).

    The model is updated in place.  Epoch loss is the sample-weighted mean of
    batch losses evaluated before each batch's update.
    """
    dataset = list(dataset)
    if not dataset:
        raise ValueError("empty dataset")
    expected = "duration-regression" if model.kind == "duration" else "pitch-bin"
    if cfg.loss != expected:
        raise ValueError(f"loss {cfg.loss!r} does not match model kind {model.kind!r}")
    rng = np.random.default_rng(cfg.seed)
    history = []
    sample_losses = np.empty(len(dataset))
    for _ in range(cfg.epochs):
        order = rng.permutation(len(dataset))
        for start in range(0, len(order), cfg.batch_size):
            batch_ids = order[start : start + cfg.batch_size]
            acc = None
            for i in batch_ids:
                loss, grads = _loss_and_grads(model, dataset[i])
                sample_losses[i] = loss
                if acc is None:
                    acc = grads
                else:
                    for key in acc:
                        acc[key] += grads[key]
            for key, g in acc.items():
                model.params[key] -= cfg.learning_rate * (g / batch_ids.size)
        # Summed in dataset order so the history is independent of shuffling.
        epoch_loss = float(sample_losses.sum()) / len(dataset)
        if not np.isfinite(epoch_loss):
            raise ValueError("diverged: non-finite training loss")
        history.append(epoch_loss)
    return model, history


def grad_check(model, sample, epsilon=1e-5, n_check=200, seed=0):
    """Max relative error between analytic and central-FD gradients.

    Checks every parameter when the model has at most `n_check`, otherwise a
    seeded random subset of at least that many (never fewer than 100).
    """
    if not 1e-7 <= epsilon <= 1e-3:
        raise ValueError("epsilon must lie in [1e-7, 1e-3]")
    _, grads = _loss_and_grads(model, sample)

    keys = sorted(model.params)
    sizes = np.array([model.params[k].size for k in keys])
    offsets = np.concatenate(([0], np.cumsum(sizes)))
    total = int(offsets[-1])
    n_check = max(100, n_check)
    if total <= n_check:
        picks = np.arange(total)
    else:
        picks = np.random.default_rng(seed).choice(total, size=n_check, replace=False)

    max_rel = 0.0
    for flat_idx in picks:
        which = int(np.searchsorted(offsets, flat_idx, side="right") - 1)
        key = keys[which]
        local = int(flat_idx - offsets[which])
        param = model.params[key]
        idx = np.unravel_index(local, param.shape)
        orig = param[idx]
        param[idx] = orig + epsilon
        loss_plus, _ = _loss_and_grads(model, sample)
        param[idx] = orig - epsilon
        loss_minus, _ = _loss_and_grads(model, sample)
        param[idx] = orig
        numeric = (loss_plus - loss_minus) / (2.0 * epsilon)
        analytic = grads[key][idx]
        rel = abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-8)
        max_rel = max(max_rel, rel)
    return max_rel


# ---------------------------------------------------------------------------
# Checkpoint and embedding files
# ---------------------------------------------------------------------------
# Checkpoint: text header line
#   "PPM1 <kind> <k> <emb_dim> <c0,c1,...> <kernel> <out_dim>"
# followed by float32 little-endian parameters in order: emb, then each conv
# layer's weight and bias, then head weight and bias (row-major).


def _param_order(model):
    order = ["emb"]
    for i in range(len(model.channels)):
        order += [f"conv{i}_w", f"conv{i}_b"]
    order += ["head_w", "head_b"]
    return order


def save_model(path, model):
    header = (
        f"PPM1 {model.kind} {model.k} {model.emb_dim} "
        f"{','.join(str(c) for c in model.channels)} {model.kernel} {model.out_dim}\n"
    )
    with atomic_write(path, mode="wb") as fh:
        fh.write(header.encode("ascii"))
        for key in _param_order(model):
            fh.write(model.params[key].astype("<f4").tobytes())


def load_model(path):
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").split()
        if len(header) != 7 or header[0] != "PPM1":
            raise ValueError(f"{path}: bad checkpoint header")
        kind = header[1]
        k, emb_dim = int(header[2]), int(header[3])
        channels = tuple(int(c) for c in header[4].split(","))
        kernel, out_dim = int(header[5]), int(header[6])
        model = PredictorModel.build(
            kind, k, out_dim=out_dim, emb_dim=emb_dim, channels=channels, kernel=kernel
        )
        for key in _param_order(model):
            shape = model.params[key].shape
            count = int(np.prod(shape))
            raw = fh.read(4 * count)
            if len(raw) != 4 * count:
                raise ValueError(f"{path}: truncated checkpoint at {key}")
            model.params[key] = (
                np.frombuffer(raw, dtype="<f4").astype(np.float64).reshape(shape)
            )
        if fh.read(1):
            raise ValueError(f"{path}: trailing bytes after parameters")
    return model


def write_embeddings(path, matrix):
    """EMB1 file: header "EMB1 <count> <dim>", then float32 LE values."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    with atomic_write(path, mode="wb") as fh:
        fh.write(f"EMB1 {matrix.shape[0]} {matrix.shape[1]}\n".encode("ascii"))
        fh.write(matrix.astype("<f4").tobytes())


def read_embeddings(path):
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").split()
        if len(header) != 3 or header[0] != "EMB1":
            raise ValueError(f"{path}: bad embedding header")
        count, dim = int(header[1]), int(header[2])
        raw = fh.read(4 * count * dim)
        if len(raw) != 4 * count * dim:
            raise ValueError(f"{path}: truncated embedding file")
    return np.frombuffer(raw, dtype="<f4").astype(np.float64).reshape(count, dim)


def save_speaker_table(path, table):
    """EMB1 matrix plus a ".ids" sidecar listing row order."""
    ids = sorted(table.entries)
    write_embeddings(path, np.stack([table.entries[s] for s in ids]))
    with atomic_write(str(path) + ".ids") as fh:
        for sid in ids:
            fh.write(sid + "\n")


def load_speaker_table(path):
    matrix = read_embeddings(path)
    with open(str(path) + ".ids", encoding="utf-8") as fh:
        ids = [line.rstrip("\n") for line in fh if line.strip()]
    if len(ids) != matrix.shape[0]:
        raise ValueError(f"{path}: id count does not match embedding rows")
    return SpeakerTable(
        entries={sid: matrix[i] for i, sid in enumerate(ids)}, dim=matrix.shape[1]
    )
