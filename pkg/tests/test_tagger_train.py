import numpy as np
import pytest

from lmgeo.tagger import load_params, read_corpus, save_params, synthetic_corpus, write_corpus
from lmgeo.tagger.corpus import split_corpus
from lmgeo.tagger.model import TaggerDims
from lmgeo.tagger.train import TrainConfig, TrainingError, evaluate, train, update_weights

SMALL = TaggerDims(8, 8, 8)


def test_update_weights_exact_values():
    w = update_weights([0.99, 0.97, 0.95], 64)
    np.testing.assert_allclose(w, [np.exp(-1.28), 1.0, np.exp(1.28)], rtol=1e-12)
    np.testing.assert_allclose(w, [0.2780, 1.0, 3.5966], atol=1e-3)


def test_update_weights_uniform_and_monotone():
    assert np.array_equal(update_weights([0.8] * 21, 64), np.ones(21))
    f1 = np.linspace(0.5, 1.0, 21)
    w = update_weights(f1, 5.0)
    assert np.all(np.diff(w) < 0)
    assert np.array_equal(update_weights(f1, 0.0), np.ones(21))


def test_lowering_one_f1_raises_its_weight():
    f1 = np.array([0.9, 0.8, 0.95])
    lowered = f1.copy()
    lowered[1] -= 0.1
    before, after = update_weights(f1, 10), update_weights(lowered, 10)
    assert after[1] > before[1]
    np.testing.assert_allclose(after, np.exp(10 * (lowered.mean() - lowered)))


def test_corpus_round_trip(tmp_path):
    pages = synthetic_corpus(30, seed=2)
    write_corpus(pages, tmp_path / "c.tsv")
    assert read_corpus(tmp_path / "c.tsv") == pages
    assert synthetic_corpus(30, seed=2) == pages


def test_corpus_parse_error_has_line_number(tmp_path):
    (tmp_path / "bad.tsv").write_text("a\tb c\tO\n", encoding="utf-8")
    with pytest.raises(ValueError, match=":1:"):
        read_corpus(tmp_path / "bad.tsv")


def test_alpha_zero_keeps_unit_weights():
    pages = synthetic_corpus(60, seed=1)
    tr, va = split_corpus(pages, 0.25, seed=0)
    res = train(tr, va, TrainConfig(epochs=2, batch_size=16, alpha=0.0, dims=SMALL))
    assert all(np.array_equal(h.weights, np.ones(21)) for h in res.history)


def test_training_is_deterministic():
    pages = synthetic_corpus(60, seed=1)
    tr, va = split_corpus(pages, 0.25, seed=0)
    cfg = TrainConfig(epochs=2, batch_size=16, dims=SMALL)
    a, b = train(tr, va, cfg), train(tr, va, cfg)
    for name in a.params.tensors:
        assert np.array_equal(a.params.tensors[name], b.params.tensors[name])


def test_empty_corpus_rejected():
    with pytest.raises(ValueError):
        train([], synthetic_corpus(3), TrainConfig(epochs=1, dims=SMALL))


def test_divergence_reports_epoch():
    pages = synthetic_corpus(20, seed=1)
    cfg = TrainConfig(epochs=3, batch_size=8, learning_rate=1e300, clip_norm=0, alpha=0, dims=SMALL)
    with pytest.raises((TrainingError, FloatingPointError), match="epoch"):
        with np.errstate(all="ignore"):
            train(pages, pages[:5], cfg)


@pytest.mark.slow
def test_reaches_high_f1_on_every_type():
    pages = synthetic_corpus(2000, seed=0)
    tr, va = split_corpus(pages, 0.2, seed=0)
    res = train(tr, va, TrainConfig(epochs=30, batch_size=16, dims=TaggerDims(16, 16, 16)))
    metrics, _ = evaluate(res.params, va)
    assert min(m.f1 for m in metrics.per_type.values()) >= 0.9


def test_checkpoint_round_trip_and_bytes(tmp_path):
    pages = synthetic_corpus(20, seed=4)
    res = train(pages, pages[:4], TrainConfig(epochs=1, batch_size=8, dims=SMALL))
    save_params(res.params, tmp_path / "a.ckpt")
    save_params(load_params(tmp_path / "a.ckpt"), tmp_path / "b.ckpt")
    assert (tmp_path / "a.ckpt").read_bytes() == (tmp_path / "b.ckpt").read_bytes()
    loaded = load_params(tmp_path / "a.ckpt")
    assert loaded.vocab == res.params.vocab and loaded.dims == res.params.dims


def test_checkpoint_rejects_garbage(tmp_path):
    (tmp_path / "x.ckpt").write_bytes(b"nope\n")
    with pytest.raises(ValueError):
        load_params(tmp_path / "x.ckpt")
