"""Forward computation of the scoring network.

Stack, per essay: embedding lookup -> per-channel {1D convolution over word
windows -> ReLU -> temporal max-pooling -> bidirectional GRU} -> channel
summaries concatenated -> dropout (training only) -> sigmoid head.

All operations are pure given parameters and an explicit generator, so a
frozen :class:`ModelParameters` can serve any number of concurrent inference
calls.  Positions whose convolution window touches a padding token are masked
out of pooling, and masked GRU steps carry the previous hidden state, which
makes inference outputs invariant to trailing padding.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import TrainConfig
from .corpus import PAD_INDEX
from .embedding import EmbeddingMatrix
from .errors import DomainError, UsageError

_GATE_NAMES = ("w_z", "w_r", "w_h", "u_z", "u_r", "u_h")


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function, dtype-preserving.

    exp is only ever taken of non-positive values, so no overflow; the two
    branches are the algebraically matched forms 1/(1+e^-x) and e^x/(1+e^x).
    """
    x = np.asarray(x)
    ex = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + ex), ex / (1.0 + ex))


@dataclass
class ConvChannel:
    """One convolution channel: ``filters`` filters over windows of ``window`` words.

    ``weights`` has shape (filters, window * dim); the slice
    ``weights[:, j*dim:(j+1)*dim]`` acts on the j-th column of the window.
    """

    window: int
    weights: np.ndarray
    bias: np.ndarray


@dataclass
class GruDirection:
    """Gate matrices for one scan direction (no biases)."""

    w_z: np.ndarray
    w_r: np.ndarray
    w_h: np.ndarray
    u_z: np.ndarray
    u_r: np.ndarray
    u_h: np.ndarray

    @property
    def hidden(self) -> int:
        return self.u_z.shape[0]


@dataclass
class GruParameters:
    fw: GruDirection
    bw: GruDirection

    @property
    def hidden(self) -> int:
        return self.fw.hidden


@dataclass
class DenseHead:
    weights: np.ndarray  # (total summary width,)
    bias: np.ndarray     # (1,)


@dataclass
class ModelParameters:
    """Every trainable tensor plus the hyperparameter record they belong to."""

    embedding: np.ndarray
    embedding_trainable: bool
    conv: tuple[ConvChannel, ...]
    gru: tuple[GruParameters, ...]
    dense: DenseHead
    config: TrainConfig

    @property
    def dtype(self):
        return self.embedding.dtype

    @property
    def vocab_size(self) -> int:
        return self.embedding.shape[0]

    def named_tensors(self):
        """Yield (name, array) pairs in a fixed canonical order."""
        yield "embedding", self.embedding
        for channel, gru in zip(self.conv, self.gru):
            k = channel.window
            yield f"conv{k}.weights", channel.weights
            yield f"conv{k}.bias", channel.bias
            for direction, params in (("fw", gru.fw), ("bw", gru.bw)):
                for gate in _GATE_NAMES:
                    yield f"gru{k}.{direction}.{gate}", getattr(params, gate)
        yield "dense.weights", self.dense.weights
        yield "dense.bias", self.dense.bias

    def copy(self) -> "ModelParameters":
        return ModelParameters(
            embedding=self.embedding.copy(),
            embedding_trainable=self.embedding_trainable,
            conv=tuple(ConvChannel(c.window, c.weights.copy(), c.bias.copy())
                       for c in self.conv),
            gru=tuple(GruParameters(
                fw=GruDirection(**{g: getattr(p.fw, g).copy() for g in _GATE_NAMES}),
                bw=GruDirection(**{g: getattr(p.bw, g).copy() for g in _GATE_NAMES}),
            ) for p in self.gru),
            dense=DenseHead(self.dense.weights.copy(), self.dense.bias.copy()),
            config=self.config,
        )

    @classmethod
    def from_tensor_map(cls, cfg: TrainConfig, tensors: dict[str, np.ndarray],
                        embedding_trainable: bool = True,
                        vocab_size: int | None = None) -> "ModelParameters":
        """Assemble parameters from named arrays, validating names and shapes."""
        if vocab_size is None:
            vocab_size = tensors["embedding"].shape[0] if "embedding" in tensors else 0
        expected = expected_shapes(cfg, vocab_size)
        missing = sorted(set(expected) - set(tensors))
        extra = sorted(set(tensors) - set(expected))
        if missing or extra:
            raise UsageError(f"tensor names mismatch: missing={missing}, extra={extra}")
        for name, shape in expected.items():
            if tuple(tensors[name].shape) != shape:
                raise UsageError(
                    f"tensor {name!r} has shape {tensors[name].shape}, expected {shape}"
                )
        conv = []
        gru = []
        for k in cfg.windows:
            conv.append(ConvChannel(k, tensors[f"conv{k}.weights"],
                                    tensors[f"conv{k}.bias"]))
            gru.append(GruParameters(
                fw=GruDirection(**{g: tensors[f"gru{k}.fw.{g}"] for g in _GATE_NAMES}),
                bw=GruDirection(**{g: tensors[f"gru{k}.bw.{g}"] for g in _GATE_NAMES}),
            ))
        return cls(
            embedding=tensors["embedding"],
            embedding_trainable=embedding_trainable,
            conv=tuple(conv),
            gru=tuple(gru),
            dense=DenseHead(tensors["dense.weights"], tensors["dense.bias"]),
            config=cfg,
        )


def summary_width(cfg: TrainConfig) -> int:
    return 2 * cfg.hidden_units * len(cfg.windows)


def expected_shapes(cfg: TrainConfig, vocab_size: int) -> dict[str, tuple[int, ...]]:
    """Canonical tensor name -> shape map for a given config and vocabulary."""
    d, f, h = cfg.embedding_dim, cfg.filters, cfg.hidden_units
    shapes: dict[str, tuple[int, ...]] = {"embedding": (vocab_size, d)}
    for k in cfg.windows:
        shapes[f"conv{k}.weights"] = (f, k * d)
        shapes[f"conv{k}.bias"] = (f,)
        for direction in ("fw", "bw"):
            for gate in ("w_z", "w_r", "w_h"):
                shapes[f"gru{k}.{direction}.{gate}"] = (h, f)
            for gate in ("u_z", "u_r", "u_h"):
                shapes[f"gru{k}.{direction}.{gate}"] = (h, h)
    shapes["dense.weights"] = (summary_width(cfg),)
    shapes["dense.bias"] = (1,)
    return shapes


def _glorot(rng: np.random.Generator, shape: tuple[int, ...],
            fan_in: int, fan_out: int, dtype) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, shape).astype(dtype)


def init_parameters(embedding: EmbeddingMatrix, cfg: TrainConfig,
                    dtype=None) -> ModelParameters:
    """Seeded Glorot-uniform initialization of every layer; biases start at zero."""
    dtype = dtype or embedding.weights.dtype
    d = embedding.weights.shape[1]
    if d != cfg.embedding_dim:
        raise UsageError(
            f"embedding matrix has dimension {d}, config says {cfg.embedding_dim}"
        )
    rng = np.random.default_rng(cfg.seed)
    f, h = cfg.filters, cfg.hidden_units
    conv = []
    gru = []
    for k in cfg.windows:
        conv.append(ConvChannel(
            window=k,
            weights=_glorot(rng, (f, k * d), k * d, f, dtype),
            bias=np.zeros(f, dtype=dtype),
        ))
        directions = []
        for _ in range(2):
            gates = {}
            for gate in ("w_z", "w_r", "w_h"):
                gates[gate] = _glorot(rng, (h, f), f, h, dtype)
            for gate in ("u_z", "u_r", "u_h"):
                gates[gate] = _glorot(rng, (h, h), h, h, dtype)
            directions.append(GruDirection(**gates))
        gru.append(GruParameters(fw=directions[0], bw=directions[1]))
    width = summary_width(cfg)
    dense = DenseHead(
        weights=_glorot(rng, (width,), width, 1, dtype),
        bias=np.zeros(1, dtype=dtype),
    )
    return ModelParameters(
        embedding=embedding.weights.astype(dtype, copy=True),
        embedding_trainable=embedding.trainable,
        conv=tuple(conv),
        gru=tuple(gru),
        dense=dense,
        config=cfg,
    )


# ---------------------------------------------------------------------------
# Single-essay layer surfaces
# ---------------------------------------------------------------------------

def conv1d_forward(matrix: np.ndarray, channel: ConvChannel) -> np.ndarray:
    """Valid 1D convolution plus ReLU over a (dim, n_tokens) essay matrix.

    Output column i is ReLU(W @ vec(columns i..i+k-1) + b), giving a
    (filters, n_tokens - k + 1) feature map of non-negative activations.
    """
    d, m = matrix.shape
    k = channel.window
    assert m >= k, "convolution input narrower than window: upstream padding bug"
    emb = np.ascontiguousarray(matrix.T)[None, :, :]
    pre, _ = _conv_pre_batch(emb, channel,
                             np.ones((1, m), dtype=bool))
    return np.maximum(pre[0], 0).T


def maxpool(feature_map: np.ndarray, pool: int, stride: int) -> np.ndarray:
    """Per-filter max over windows of ``pool`` positions advancing by ``stride``.

    The final partial window is kept; a pool at least as wide as the input
    degenerates to a global max over time.
    """
    if pool < 1 or stride < 1:
        raise DomainError("pool and stride must be >= 1")
    fm = np.asarray(feature_map)[None].transpose(0, 2, 1)  # (1, width, filters)
    width = fm.shape[1]
    pooled, _, _ = _maxpool_batch(fm, np.ones((1, width), dtype=bool), pool, stride)
    return pooled[0].T


def gru_step(x_t: np.ndarray, h_prev: np.ndarray, p: GruDirection) -> np.ndarray:
    """One recurrence step: update gate z, reset gate r, candidate state.

    z = sigmoid(w_z x + u_z h);  r = sigmoid(w_r x + u_r h)
    c = tanh(w_h x + u_h (r * h));  h' = (1 - z) * h + z * c
    """
    z = sigmoid(p.w_z @ x_t + p.u_z @ h_prev)
    r = sigmoid(p.w_r @ x_t + p.u_r @ h_prev)
    c = np.tanh(p.w_h @ x_t + p.u_h @ (r * h_prev))
    return (1.0 - z) * h_prev + z * c


def bigru_forward(seq: np.ndarray, p: GruParameters,
                  mask: np.ndarray | None = None
                  ) -> tuple[np.ndarray, np.ndarray]:
    """Run both scan directions over a (steps, features) sequence.

    Returns per-step outputs (steps, 2H) as [forward state, backward state]
    and the summary vector [forward state at the last real step, backward
    state at the first real step].  Masked steps carry the previous hidden
    state in both directions; initial states are zero.
    """
    seq = np.asarray(seq)
    steps = seq.shape[0]
    if mask is None:
        mask = np.ones(steps, dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (steps,):
        raise UsageError("mask length must equal sequence length")
    x = seq[:, None, :]          # time-major batch of one
    valid = mask[:, None]
    fw = _gru_scan(x, valid, p.fw)
    bw = _gru_scan(x[::-1], valid[::-1], p.bw)
    outputs = np.concatenate([fw["h"][1:, 0], bw["h"][1:, 0][::-1]], axis=1)
    summary = np.concatenate([fw["h"][-1, 0], bw["h"][-1, 0]])
    return outputs, summary


def dropout(v: np.ndarray, p: float, rng: np.random.Generator | None,
            training: bool) -> np.ndarray:
    """Inverted dropout: zero entries with probability p, scale survivors by 1/(1-p).

    Identity at inference time or when p == 0.
    """
    if not 0.0 <= p < 1.0:
        raise DomainError(f"dropout rate {p} outside [0, 1)")
    v = np.asarray(v)
    if not training or p == 0.0:
        return v
    if rng is None:
        raise UsageError("training-mode dropout needs a seeded generator")
    keep = rng.random(v.shape) >= p
    return (v * keep) / (1.0 - p)


def forward(essay_indices, params: ModelParameters,
            dropout_rng: np.random.Generator | None = None) -> float:
    """Score one essay, returning a normalized prediction strictly in (0, 1).

    Pass a seeded generator to enable training-mode dropout; leave it None
    for deterministic inference.
    """
    seq = np.asarray(essay_indices, dtype=np.int64)
    if seq.ndim != 1 or seq.size == 0:
        raise UsageError("essay_indices must be a non-empty 1-d index sequence")
    if seq.min() < 0 or seq.max() >= params.vocab_size:
        raise UsageError(
            f"token index {int(seq.min()) if seq.min() < 0 else int(seq.max())} "
            f"outside vocabulary of size {params.vocab_size}"
        )
    k_max = max(channel.window for channel in params.conv)
    length = max(seq.size, k_max)
    indices = np.full((1, length), PAD_INDEX, dtype=np.int64)
    indices[0, :seq.size] = seq
    mask = np.zeros((1, length), dtype=bool)
    mask[0, :seq.size] = seq != PAD_INDEX
    drop_mask = None
    if dropout_rng is not None and params.config.dropout > 0:
        drop_mask = make_drop_mask(dropout_rng, (1, summary_width(params.config)),
                                   params.config.dropout, params.dtype)
    yhat, _ = forward_batch(indices, mask, params, drop_mask)
    return float(yhat[0])


def make_drop_mask(rng: np.random.Generator, shape: tuple[int, ...],
                   p: float, dtype) -> np.ndarray:
    """Fixed dropout realization: entries are 0 or 1/(1-p)."""
    dt = np.dtype(dtype)
    keep = rng.random(shape) >= p
    return keep.astype(dt) / dt.type(1.0 - p)


# ---------------------------------------------------------------------------
# Batched internals (shared by inference and the training-time backward pass)
# ---------------------------------------------------------------------------

def _conv_pre_batch(emb: np.ndarray, channel: ConvChannel, mask: np.ndarray):
    """Pre-activations (B, P, F) and validity of each window position.

    A position is valid only when every token in its window is real, so
    padding never leaks into downstream layers.
    """
    b, length, d = emb.shape
    k = channel.window
    assert length >= k, "convolution input narrower than window: upstream padding bug"
    p = length - k + 1
    pre = np.zeros((b, p, channel.weights.shape[0]), dtype=emb.dtype)
    pre += channel.bias
    for j in range(k):
        pre += emb[:, j:j + p, :] @ channel.weights[:, j * d:(j + 1) * d].T
    windows = np.lib.stride_tricks.sliding_window_view(mask, k, axis=1)
    return pre, windows.all(axis=2)


def pooled_length(width: int, pool: int, stride: int) -> int:
    return max(1, -(-(width - pool) // stride) + 1)


def _maxpool_batch(fm: np.ndarray, valid: np.ndarray, pool: int, stride: int):
    """Masked temporal max-pooling.

    Returns pooled values (B, T, F), source indices for backprop (B, T, F)
    and pooled validity (B, T); windows with no valid position pool to zero
    and are marked invalid.
    """
    b, width, f = fm.shape
    t = pooled_length(width, pool, stride)
    lowest = np.finfo(fm.dtype).min
    masked = np.where(valid[:, :, None], fm, lowest)
    pooled = np.zeros((b, t, f), dtype=fm.dtype)
    source = np.zeros((b, t, f), dtype=np.int64)
    pooled_valid = np.zeros((b, t), dtype=bool)
    for j in range(t):
        lo = j * stride
        hi = min(lo + pool, width)
        if lo >= width:
            continue
        segment = masked[:, lo:hi, :]
        arg = segment.argmax(axis=1)
        best = np.take_along_axis(segment, arg[:, None, :], axis=1)[:, 0, :]
        window_valid = valid[:, lo:hi].any(axis=1)
        pooled[:, j, :] = np.where(window_valid[:, None], best, 0)
        source[:, j, :] = arg + lo
        pooled_valid[:, j] = window_valid
    return pooled, source, pooled_valid


def _gru_scan(x: np.ndarray, valid: np.ndarray, p: GruDirection) -> dict:
    """Scan one direction over time-major input (T, B, I).

    Returns stacked states and gate values; ``h`` has T+1 entries with the
    zero initial state first.  Invalid steps copy the previous state.
    """
    steps, batch, _ = x.shape
    hidden = p.hidden
    h = np.zeros((batch, hidden), dtype=x.dtype)
    hs = np.empty((steps + 1, batch, hidden), dtype=x.dtype)
    zs = np.empty((steps, batch, hidden), dtype=x.dtype)
    rs = np.empty_like(zs)
    cs = np.empty_like(zs)
    hs[0] = h
    for t in range(steps):
        z = sigmoid(x[t] @ p.w_z.T + h @ p.u_z.T)
        r = sigmoid(x[t] @ p.w_r.T + h @ p.u_r.T)
        c = np.tanh(x[t] @ p.w_h.T + (r * h) @ p.u_h.T)
        h_new = (1.0 - z) * h + z * c
        h = np.where(valid[t][:, None], h_new, h)
        zs[t], rs[t], cs[t] = z, r, c
        hs[t + 1] = h
    return {"x": x, "valid": valid, "h": hs, "z": zs, "r": rs, "c": cs}


def _gru_scan_backward(cache: dict, p: GruDirection, d_final: np.ndarray,
                       d_steps: np.ndarray | None = None):
    """Reverse-mode pass through one scan direction.

    ``d_final`` is the gradient on the state after the last step; ``d_steps``
    optionally adds per-step output gradients.  Returns the input gradient
    (T, B, I) and a gate-name -> gradient dict.
    """
    x, valid = cache["x"], cache["valid"]
    hs, zs, rs, cs = cache["h"], cache["z"], cache["r"], cache["c"]
    steps = x.shape[0]
    dh = d_final.astype(x.dtype).copy()
    dx = np.zeros_like(x)
    grads = {name: np.zeros_like(getattr(p, name)) for name in _GATE_NAMES}
    for t in range(steps - 1, -1, -1):
        if d_steps is not None:
            dh = dh + d_steps[t]
        m = valid[t][:, None].astype(x.dtype)
        z, r, c, h_prev = zs[t], rs[t], cs[t], hs[t]
        d_new = dh * m
        dz = d_new * (c - h_prev)
        dc = d_new * z
        dh_prev = d_new * (1.0 - z) + dh * (1.0 - m)
        da_c = dc * (1.0 - c * c)
        grads["w_h"] += da_c.T @ x[t]
        grads["u_h"] += da_c.T @ (r * h_prev)
        dx[t] += da_c @ p.w_h
        d_rh = da_c @ p.u_h
        dh_prev += d_rh * r
        da_r = (d_rh * h_prev) * r * (1.0 - r)
        grads["w_r"] += da_r.T @ x[t]
        grads["u_r"] += da_r.T @ h_prev
        dx[t] += da_r @ p.w_r
        dh_prev += da_r @ p.u_r
        da_z = dz * z * (1.0 - z)
        grads["w_z"] += da_z.T @ x[t]
        grads["u_z"] += da_z.T @ h_prev
        dx[t] += da_z @ p.w_z
        dh_prev += da_z @ p.u_z
        dh = dh_prev
    return dx, grads


def _bigru_batch(pooled: np.ndarray, pooled_valid: np.ndarray,
                 p: GruParameters, summary_mode: str):
    """Both directions over batch-major pooled features (B, T, F)."""
    x = np.ascontiguousarray(pooled.transpose(1, 0, 2))
    valid = np.ascontiguousarray(pooled_valid.T)
    fw = _gru_scan(x, valid, p.fw)
    bw = _gru_scan(x[::-1], valid[::-1], p.bw)
    if summary_mode == "last":
        summary = np.concatenate([fw["h"][-1], bw["h"][-1]], axis=1)
    else:
        counts = np.maximum(valid.sum(axis=0), 1).astype(x.dtype)[:, None]
        weights = valid.astype(x.dtype)[:, :, None]
        mean_fw = (fw["h"][1:] * weights).sum(axis=0) / counts
        mean_bw = (bw["h"][1:] * weights[::-1]).sum(axis=0) / counts
        summary = np.concatenate([mean_fw, mean_bw], axis=1)
    return {"fw": fw, "bw": bw, "summary": summary}


def _bigru_batch_backward(cache: dict, p: GruParameters, d_summary: np.ndarray,
                          summary_mode: str) -> np.ndarray:
    """Gradient of the channel summary w.r.t. pooled inputs; gate gradients
    are written into ``cache['grads']``."""
    hidden = p.hidden
    d_fw, d_bw = d_summary[:, :hidden], d_summary[:, hidden:]
    fw, bw = cache["fw"], cache["bw"]
    valid = fw["valid"]
    dtype = fw["x"].dtype
    if summary_mode == "last":
        dx_fw, g_fw = _gru_scan_backward(fw, p.fw, d_fw)
        dx_bw, g_bw = _gru_scan_backward(bw, p.bw, d_bw)
    else:
        counts = np.maximum(valid.sum(axis=0), 1).astype(dtype)[:, None]
        zeros = np.zeros_like(d_fw)
        steps_fw = valid.astype(dtype)[:, :, None] * (d_fw / counts)[None]
        steps_bw = valid[::-1].astype(dtype)[:, :, None] * (d_bw / counts)[None]
        dx_fw, g_fw = _gru_scan_backward(fw, p.fw, zeros, d_steps=steps_fw)
        dx_bw, g_bw = _gru_scan_backward(bw, p.bw, zeros, d_steps=steps_bw)
    cache["grads"] = {"fw": g_fw, "bw": g_bw}
    d_pooled = (dx_fw + dx_bw[::-1]).transpose(1, 0, 2)
    return d_pooled


def forward_batch(indices: np.ndarray, mask: np.ndarray,
                  params: ModelParameters, drop_mask: np.ndarray | None = None):
    """Score a padded batch; returns predictions (B,) and a cache for backprop.

    ``drop_mask`` is a fixed dropout realization from :func:`make_drop_mask`,
    or None for inference.
    """
    cfg = params.config
    emb = params.embedding[indices]
    channels = []
    summaries = []
    for channel, gru in zip(params.conv, params.gru):
        pre, conv_valid = _conv_pre_batch(emb, channel, mask)
        fm = np.maximum(pre, 0)
        pooled, source, pooled_valid = _maxpool_batch(
            fm, conv_valid, cfg.pool_size, cfg.pool_stride)
        bicache = _bigru_batch(pooled, pooled_valid, gru, cfg.summary_mode)
        summaries.append(bicache["summary"])
        channels.append({
            "pre": pre,
            "conv_valid": conv_valid,
            "source": source,
            "pooled_valid": pooled_valid,
            "bigru": bicache,
        })
    concat = np.concatenate(summaries, axis=1)
    dropped = concat * drop_mask if drop_mask is not None else concat
    logits = dropped @ params.dense.weights + params.dense.bias[0]
    yhat = sigmoid(logits)
    cache = {
        "indices": indices,
        "mask": mask,
        "channels": channels,
        "dropped": dropped,
        "drop_mask": drop_mask,
        "yhat": yhat,
    }
    return yhat, cache
