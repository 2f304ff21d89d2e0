"""Sequence tagger for location-indicating clues."""

from lmgeo.tagger.checkpoint import load_params, save_params
from lmgeo.tagger.corpus import LabeledPage, read_corpus, synthetic_corpus, write_corpus
from lmgeo.tagger.metrics import ExtractionMetrics, compute_metrics, page_accuracy
from lmgeo.tagger.model import (CellState, TaggerDims, TaggerParams, adaptive_loss,
                                bilstm_encode, decode_scores, lstm_cell_step, predict_proba)
from lmgeo.tagger.preprocess import preprocess_page
from lmgeo.tagger.scheme import (ENTITY_TYPES, N_TAGS, TAGS, LocationEntity, TokenizedPage,
                                 decode_bieso, encode_bieso, tokenize)
from lmgeo.tagger.train import TrainConfig, TrainingError, train, update_weights


def tag_page(params: TaggerParams, page: TokenizedPage) -> list[LocationEntity]:
    """Decode the most likely tag per token into entities."""
    probs = predict_proba(params, page)
    return decode_bieso(page.tokens, [TAGS[i] for i in probs.argmax(axis=1)])


__all__ = [
    "CellState", "ENTITY_TYPES", "ExtractionMetrics", "LabeledPage", "LocationEntity", "N_TAGS",
    "TAGS", "TaggerDims", "TaggerParams", "TokenizedPage", "TrainConfig", "TrainingError",
    "adaptive_loss", "bilstm_encode", "compute_metrics", "decode_bieso", "decode_scores",
    "encode_bieso", "load_params", "lstm_cell_step", "page_accuracy", "predict_proba",
    "preprocess_page", "read_corpus", "save_params", "synthetic_corpus", "tag_page", "tokenize",
    "train", "update_weights", "write_corpus",
]
