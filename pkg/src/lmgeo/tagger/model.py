"""Encoder/decoder Bi-LSTM tagger: forward pass, weighted loss and gradients.

Parameters live in a flat ``dict`` of named float64 arrays so that the
optimizer, the checkpoint writer and the finite-difference check all walk
the same structure. Sequences are processed time-major, ``(T, B, D)``,
with every sequence in a batch sharing one length.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass

import numpy as np

from lmgeo.tagger.scheme import N_TAGS, TokenizedPage

LAYERS = ("enc_fw", "enc_bw", "dec_fw", "dec_bw")
LOG_FLOOR = 1e-12
_DIGIT = re.compile(r"\d")


def embedding_key(token: str) -> str:
    """Vocabulary key for a token; digits collapse so unseen numbers share rows."""
    return _DIGIT.sub("0", token)


def hashed_embedding(key: str, dim: int, seed: int = 0, scale: float = 0.5) -> np.ndarray:
    digest = hashlib.blake2b(key.encode("utf-8"), digest_size=8).digest()
    rng = np.random.default_rng([seed, int.from_bytes(digest, "little")])
    return rng.normal(0.0, scale, dim)


@dataclass(frozen=True)
class TaggerDims:
    embed: int = 50
    encoder_hidden: int = 256
    decoder_hidden: int = 512
    n_tags: int = N_TAGS


@dataclass
class CellState:
    h: np.ndarray
    c: np.ndarray


class TaggerParams:
    """Named weight tensors plus the vocabulary that indexes the embedding table."""

    def __init__(self, dims: TaggerDims, vocab, tensors: dict[str, np.ndarray], seed: int = 0):
        self.dims = dims
        self.vocab = list(vocab)
        self.index = {k: i for i, k in enumerate(self.vocab)}
        self.tensors = tensors
        self.seed = seed
        self._check()

    def _check(self):
        d = self.dims
        expect = {"embed": (len(self.vocab), d.embed), "out.W": (d.n_tags, 2 * d.decoder_hidden),
                  "out.b": (d.n_tags,)}
        for layer in LAYERS:
            hid = d.encoder_hidden if layer.startswith("enc") else d.decoder_hidden
            inp = d.embed if layer.startswith("enc") else 2 * d.encoder_hidden
            expect[f"{layer}.W"] = (4 * hid, hid)
            expect[f"{layer}.U"] = (4 * hid, inp)
            expect[f"{layer}.b"] = (4 * hid,)
        if set(expect) != set(self.tensors):
            raise ValueError(f"tensor names mismatch: {sorted(set(expect) ^ set(self.tensors))}")
        for name, shape in expect.items():
            arr = self.tensors[name]
            if arr.shape != shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")

    @classmethod
    def initialize(cls, dims: TaggerDims, vocab, seed: int = 0) -> "TaggerParams":
        rng = np.random.default_rng(seed)
        tensors = {"embed": np.array([hashed_embedding(k, dims.embed, seed) for k in vocab],
                                     dtype=np.float64).reshape(len(vocab), dims.embed)}
        for layer in LAYERS:
            hid = dims.encoder_hidden if layer.startswith("enc") else dims.decoder_hidden
            inp = dims.embed if layer.startswith("enc") else 2 * dims.encoder_hidden
            bound = 1.0 / np.sqrt(hid)
            tensors[f"{layer}.W"] = rng.uniform(-bound, bound, (4 * hid, hid))
            tensors[f"{layer}.U"] = rng.uniform(-bound, bound, (4 * hid, inp))
            b = np.zeros(4 * hid)
            b[hid:2 * hid] = 1.0  # forget gate opens by default
            tensors[f"{layer}.b"] = b
        bound = 1.0 / np.sqrt(2 * dims.decoder_hidden)
        tensors["out.W"] = rng.uniform(-bound, bound, (dims.n_tags, 2 * dims.decoder_hidden))
        tensors["out.b"] = np.zeros(dims.n_tags)
        return cls(dims, vocab, tensors, seed)

    def copy(self) -> "TaggerParams":
        return TaggerParams(self.dims, self.vocab, {k: v.copy() for k, v in self.tensors.items()},
                            self.seed)

    def lookup(self, tokens) -> np.ndarray:
        """Embedding rows for ``tokens``; unseen tokens get their hash vector."""
        rows = []
        for tok in tokens:
            key = embedding_key(tok)
            idx = self.index.get(key)
            rows.append(self.tensors["embed"][idx] if idx is not None
                        else hashed_embedding(key, self.dims.embed, self.seed))
        return np.array(rows).reshape(len(rows), self.dims.embed)

    def token_ids(self, tokens) -> np.ndarray:
        """Vocabulary indices, -1 for tokens outside the vocabulary."""
        return np.array([self.index.get(embedding_key(t), -1) for t in tokens], dtype=np.int64)


def _sigmoid(x):
    return 0.5 * (np.tanh(0.5 * x) + 1.0)


def lstm_cell_step(W, U, b, x_t, prev: CellState) -> CellState:
    """One recurrent step: input/forget/output gates, candidate, new state."""
    hid = W.shape[1]
    if W.shape != (4 * hid, hid) or U.shape[0] != 4 * hid or b.shape != (4 * hid,):
        raise ValueError("inconsistent LSTM weight shapes")
    if x_t.shape[-1] != U.shape[1] or prev.h.shape[-1] != hid or prev.c.shape != prev.h.shape:
        raise ValueError("input or state dimension does not match the weights")
    z = prev.h @ W.T + x_t @ U.T + b
    i = _sigmoid(z[..., :hid])
    f = _sigmoid(z[..., hid:2 * hid])
    g = np.tanh(z[..., 2 * hid:3 * hid])
    o = _sigmoid(z[..., 3 * hid:])
    c = f * prev.c + i * g
    return CellState(o * np.tanh(c), c)


def lstm_forward(W, U, b, X):
    """Run one direction over ``X`` of shape ``(T, B, D)``; returns ``(H, cache)``."""
    T, B, _ = X.shape
    hid = W.shape[1]
    Z_in = (X.reshape(T * B, -1) @ U.T).reshape(T, B, 4 * hid) + b
    gates = np.empty((T, B, 4 * hid))
    C = np.empty((T, B, hid))
    TC = np.empty((T, B, hid))
    H = np.empty((T, B, hid))
    h = np.zeros((B, hid))
    c = np.zeros((B, hid))
    WT = W.T
    for t in range(T):
        z = Z_in[t] + h @ WT
        ga = gates[t]
        ga[:, :2 * hid] = _sigmoid(z[:, :2 * hid])
        ga[:, 2 * hid:3 * hid] = np.tanh(z[:, 2 * hid:3 * hid])
        ga[:, 3 * hid:] = _sigmoid(z[:, 3 * hid:])
        c = ga[:, hid:2 * hid] * c + ga[:, :hid] * ga[:, 2 * hid:3 * hid]
        tc = np.tanh(c)
        h = ga[:, 3 * hid:] * tc
        C[t] = c
        TC[t] = tc
        H[t] = h
    return H, (X, gates, C, TC, H)


def lstm_backward(W, U, dH, cache):
    X, gates, C, TC, H = cache
    T, B, _ = X.shape
    hid = W.shape[1]
    dZ = np.empty((T, B, 4 * hid))
    dh_next = np.zeros((B, hid))
    dc_next = np.zeros((B, hid))
    zeros = np.zeros((B, hid))
    for t in range(T - 1, -1, -1):
        ga = gates[t]
        i = ga[:, :hid]
        f = ga[:, hid:2 * hid]
        g = ga[:, 2 * hid:3 * hid]
        o = ga[:, 3 * hid:]
        tc = TC[t]
        c_prev = C[t - 1] if t > 0 else zeros
        dh = dH[t] + dh_next
        dc = dh * o * (1.0 - tc * tc) + dc_next
        dz = dZ[t]
        dz[:, :hid] = dc * g * i * (1.0 - i)
        dz[:, hid:2 * hid] = dc * c_prev * f * (1.0 - f)
        dz[:, 2 * hid:3 * hid] = dc * i * (1.0 - g * g)
        dz[:, 3 * hid:] = dh * tc * o * (1.0 - o)
        dc_next = dc * f
        dh_next = dz @ W
    H_prev = np.concatenate([np.zeros((1, B, hid)), H[:-1]], axis=0)
    dZ2 = dZ.reshape(T * B, 4 * hid)
    dW = dZ2.T @ H_prev.reshape(T * B, hid)
    dU = dZ2.T @ X.reshape(T * B, -1)
    db = dZ2.sum(axis=0)
    dX = (dZ2 @ U).reshape(X.shape)
    return dW, dU, db, dX


def _bilstm(tensors, prefix, X):
    fw, bw = f"{prefix}_fw", f"{prefix}_bw"
    Hf, cf = lstm_forward(tensors[f"{fw}.W"], tensors[f"{fw}.U"], tensors[f"{fw}.b"], X)
    Hb, cb = lstm_forward(tensors[f"{bw}.W"], tensors[f"{bw}.U"], tensors[f"{bw}.b"], X[::-1])
    return np.concatenate([Hf, Hb[::-1]], axis=2), (cf, cb)


def _bilstm_backward(tensors, prefix, dOut, caches, grads):
    fw, bw = f"{prefix}_fw", f"{prefix}_bw"
    hid = tensors[f"{fw}.W"].shape[1]
    cf, cb = caches
    dW, dU, db, dXf = lstm_backward(tensors[f"{fw}.W"], tensors[f"{fw}.U"], dOut[:, :, :hid], cf)
    grads[f"{fw}.W"], grads[f"{fw}.U"], grads[f"{fw}.b"] = dW, dU, db
    dW, dU, db, dXb = lstm_backward(tensors[f"{bw}.W"], tensors[f"{bw}.U"],
                                    np.ascontiguousarray(dOut[::-1, :, hid:]), cb)
    grads[f"{bw}.W"], grads[f"{bw}.U"], grads[f"{bw}.b"] = dW, dU, db
    return dXf + dXb[::-1]


def softmax(Y, axis=-1):
    Y = Y - Y.max(axis=axis, keepdims=True)
    E = np.exp(Y)
    return E / E.sum(axis=axis, keepdims=True)


def bilstm_encode(params: TaggerParams, page: TokenizedPage) -> np.ndarray:
    """Encoder states ``[forward; backward]`` per token, shape ``(T, 2H)``."""
    if len(page.tokens) == 0:
        raise ValueError("cannot encode an empty page")
    X = params.lookup(page.tokens)[:, None, :]
    H, _ = _bilstm(params.tensors, "enc", X)
    return H[:, 0, :]


def decode_scores(params: TaggerParams, encoded: np.ndarray) -> np.ndarray:
    """Tag probabilities ``(T, N)`` from encoder states via the decoder Bi-LSTM."""
    encoded = np.asarray(encoded, dtype=np.float64)
    if encoded.ndim != 2 or encoded.shape[0] == 0:
        raise ValueError("encoded sequence must be a non-empty (T, 2H) array")
    H, _ = _bilstm(params.tensors, "dec", encoded[:, None, :])
    Y = H[:, 0, :] @ params.tensors["out.W"].T + params.tensors["out.b"]
    return softmax(Y)


def predict_proba(params: TaggerParams, page: TokenizedPage) -> np.ndarray:
    return decode_scores(params, bilstm_encode(params, page))


def forward_batch(tensors, X):
    """Full forward pass on embedded inputs ``(T, B, D)``; returns ``(P, cache)``."""
    Henc, c_enc = _bilstm(tensors, "enc", X)
    Hdec, c_dec = _bilstm(tensors, "dec", Henc)
    Y = Hdec @ tensors["out.W"].T + tensors["out.b"]
    return softmax(Y), (Henc, c_enc, Hdec, c_dec)


def adaptive_loss(dist: np.ndarray, gold: np.ndarray, weights: np.ndarray) -> float:
    """Tag-weighted negative log-likelihood summed over tokens.

    ``dist`` holds probabilities ``(..., N)``, ``gold`` the gold tag indices
    with the matching leading shape, ``weights`` one positive weight per tag.
    """
    dist = np.asarray(dist, dtype=np.float64)
    gold = np.asarray(gold, dtype=np.int64)
    weights = np.asarray(weights, dtype=np.float64)
    if np.any(weights <= 0):
        raise ValueError("tag weights must be positive")
    p_gold = np.take_along_axis(dist, gold[..., None], axis=-1)[..., 0]
    return float(-(weights[gold] * np.log(np.maximum(p_gold, LOG_FLOOR))).sum())


def loss_and_grads(tensors, ids, X, gold, weights):
    """Loss on one equal-length batch and gradients for every tensor.

    ``ids`` (T, B) are embedding rows (-1 for rows outside the table), ``X``
    the embedded inputs, ``gold`` (T, B) gold tag indices.
    """
    P, (Henc, c_enc, Hdec, c_dec) = forward_batch(tensors, X)
    loss = adaptive_loss(P, gold, weights)
    T, B, N = P.shape
    dY = P.copy()
    np.put_along_axis(dY, gold[..., None], np.take_along_axis(dY, gold[..., None], -1) - 1.0, -1)
    dY *= weights[gold][..., None]
    grads = {}
    Hd2 = Hdec.reshape(T * B, -1)
    dY2 = dY.reshape(T * B, N)
    grads["out.W"] = dY2.T @ Hd2
    grads["out.b"] = dY2.sum(axis=0)
    dHdec = (dY2 @ tensors["out.W"]).reshape(T, B, -1)
    dHenc = _bilstm_backward(tensors, "dec", dHdec, c_dec, grads)
    dX = _bilstm_backward(tensors, "enc", dHenc, c_enc, grads)
    dE = np.zeros_like(tensors["embed"])
    flat = ids.reshape(-1)
    keep = flat >= 0
    np.add.at(dE, flat[keep], dX.reshape(T * B, -1)[keep])
    grads["embed"] = dE
    return loss, grads
