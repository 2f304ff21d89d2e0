"""Mini-batch training with self-adaptive tag weights."""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from lmgeo.tagger.corpus import LabeledPage
from lmgeo.tagger.metrics import ExtractionMetrics, compute_metrics, tag_f1
from lmgeo.tagger.model import (TaggerDims, TaggerParams, embedding_key, forward_batch,
                                hashed_embedding, loss_and_grads)
from lmgeo.tagger.scheme import N_TAGS, TAGS, decode_bieso

log = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    pass


def update_weights(per_tag_f1, alpha: float) -> np.ndarray:
    """Tag weights that grow exponentially as a tag's F1 falls below the mean."""
    f1 = np.asarray(per_tag_f1, dtype=np.float64)
    # centring on one entry first makes equal scores give exactly zero deviation
    shifted = f1 - f1.flat[0]
    return np.exp(alpha * (shifted.mean() - shifted))


@dataclass
class TrainConfig:
    epochs: int = 30
    batch_size: int = 64
    learning_rate: float = 0.05
    alpha: float = 64.0
    clip_norm: float = 5.0
    max_weight: float | None = 2.0
    seed: int = 0
    dims: TaggerDims = field(default_factory=TaggerDims)


@dataclass
class EpochReport:
    epoch: int
    loss: float
    metrics: ExtractionMetrics
    weights: np.ndarray


@dataclass
class TrainResult:
    params: TaggerParams
    best_epoch: int
    history: list[EpochReport]


def build_vocab(pages) -> list[str]:
    return sorted({embedding_key(t) for p in pages for t in p.tokens})


class _Encoded:
    """Per-page inputs precomputed once: vocabulary ids, OOV vectors, gold ids."""

    __slots__ = ("page", "ids", "oov", "gold")

    def __init__(self, page, params: TaggerParams):
        self.page = page
        self.ids = params.token_ids(page.tokens)
        self.oov = np.zeros((len(page.tokens), params.dims.embed))
        for t in np.flatnonzero(self.ids < 0):
            self.oov[t] = hashed_embedding(embedding_key(page.tokens[t]), params.dims.embed,
                                           params.seed)
        self.gold = np.array(page.tag_ids(), dtype=np.int64)


class _Batch:
    __slots__ = ("pages", "ids", "oov", "gold")

    def __init__(self, encoded):
        self.pages = [e.page for e in encoded]
        self.ids = np.stack([e.ids for e in encoded], axis=1)
        self.oov = np.stack([e.oov for e in encoded], axis=1)
        self.gold = np.stack([e.gold for e in encoded], axis=1)

    def inputs(self, embed):
        X = embed[np.maximum(self.ids, 0)]
        if (self.ids < 0).any():
            X = np.where((self.ids < 0)[..., None], self.oov, X)
        return X


def _buckets(encoded, batch_size, rng=None):
    by_len = defaultdict(list)
    for e in encoded:
        by_len[len(e.ids)].append(e)
    batches = []
    for length in sorted(by_len):
        group = by_len[length]
        if rng is not None:
            group = [group[i] for i in rng.permutation(len(group))]
        for k in range(0, len(group), batch_size):
            batches.append(_Batch(group[k:k + batch_size]))
    if rng is not None:
        batches = [batches[i] for i in rng.permutation(len(batches))]
    return batches


def predict_tags(params: TaggerParams, pages, batch_size: int = 256) -> dict[str, list[str]]:
    """Highest-probability tag per token, keyed by page id."""
    out = {}
    encoded = [_Encoded(p, params) for p in pages]
    for batch in _buckets(encoded, batch_size):
        P, _ = forward_batch(params.tensors, batch.inputs(params.tensors["embed"]))
        best = P.argmax(axis=2)
        for b, page in enumerate(batch.pages):
            out[page.page_id] = [TAGS[i] for i in best[:, b]]
    return out


def evaluate(params: TaggerParams, pages) -> tuple[ExtractionMetrics, np.ndarray]:
    """Entity metrics and per-tag token F1 on labeled pages."""
    tags = predict_tags(params, pages)
    pred = {p.page_id: decode_bieso(p.tokens, tags[p.page_id]) for p in pages}
    gold = {p.page_id: p.entities() for p in pages}
    pred_ids = [i for p in pages for i in (TAGS.index(t) for t in tags[p.page_id])]
    gold_ids = [i for p in pages for i in p.tag_ids()]
    return compute_metrics(pred, gold), tag_f1(pred_ids, gold_ids, N_TAGS)


def train(train_pages: list[LabeledPage], val_pages: list[LabeledPage],
          config: TrainConfig | None = None) -> TrainResult:
    """Fit a tagger; tag weights are refreshed from validation F1 after every epoch.

    The gradient of the summed batch loss is divided by the batch size, so
    ``learning_rate`` is a per-sequence step. Returns the parameters of the
    epoch with the best all-type validation F1.
    """
    config = config or TrainConfig()
    if not train_pages:
        raise ValueError("training corpus is empty")
    if not val_pages:
        raise ValueError("validation corpus is empty")
    rng = np.random.default_rng(config.seed)
    params = TaggerParams.initialize(config.dims, build_vocab(train_pages), config.seed)
    encoded = [_Encoded(p, params) for p in train_pages]
    weights = np.ones(N_TAGS)
    history = []
    best = (-1.0, -1, params.copy())
    for epoch in range(1, config.epochs + 1):
        total = 0.0
        for batch in _buckets(encoded, config.batch_size, rng):
            X = batch.inputs(params.tensors["embed"])
            loss, grads = loss_and_grads(params.tensors, batch.ids, X, batch.gold, weights)
            if not math.isfinite(loss):
                raise TrainingError(f"loss diverged in epoch {epoch}")
            total += loss
            scale = 1.0 / len(batch.pages)
            norm = math.sqrt(sum(float((g * g).sum()) for g in grads.values())) * scale
            if config.clip_norm and norm > config.clip_norm:
                scale *= config.clip_norm / norm
            step = config.learning_rate * scale
            for name, g in grads.items():
                params.tensors[name] -= step * g
        metrics, f1 = evaluate(params, val_pages)
        weights = update_weights(f1, config.alpha)
        if config.max_weight:
            # bounded so one lagging tag cannot swamp the batch gradient
            weights = np.clip(weights, 1.0 / config.max_weight, config.max_weight)
        history.append(EpochReport(epoch, total, metrics, weights.copy()))
        log.info("epoch %d loss %.3f val F1 %.4f full-info %s", epoch, total,
                 metrics.all_types.f1, metrics.full_info)
        if metrics.all_types.f1 > best[0]:
            best = (metrics.all_types.f1, epoch, params.copy())
    return TrainResult(best[2], best[1], history)
