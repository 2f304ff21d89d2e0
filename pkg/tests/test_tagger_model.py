import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lmgeo.tagger.model import (LAYERS, CellState, TaggerDims, TaggerParams, adaptive_loss,
                                bilstm_encode, decode_scores, forward_batch, hashed_embedding,
                                loss_and_grads, lstm_cell_step, lstm_forward, predict_proba)
from lmgeo.tagger.scheme import N_TAGS, TokenizedPage

TOY = TaggerDims(embed=4, encoder_hidden=4, decoder_hidden=4)


def toy_params(seed=0, dims=TOY, vocab=("a", "b", "c", "d")):
    return TaggerParams.initialize(dims, list(vocab), seed)


def sig(x):
    return 1.0 / (1.0 + math.exp(-x))


def test_zero_weights_give_zero_hidden():
    H = 3
    W, U, b = np.zeros((4 * H, H)), np.zeros((4 * H, 2)), np.zeros(4 * H)
    out = lstm_cell_step(W, U, b, np.array([0.7, -2.0]), CellState(np.zeros(H), np.zeros(H)))
    assert np.all(out.h == 0) and np.all(out.c == 0)


def test_scalar_cell_matches_hand_oracle():
    # gate order i, f, g (candidate), o; one hidden unit, one input
    W = np.array([[0.3], [-0.2], [0.5], [0.1]])
    U = np.array([[0.4], [0.9], [-0.6], [0.2]])
    b = np.array([0.05, 1.0, -0.1, 0.0])
    x, h0, c0 = 0.8, -0.3, 0.6
    i = sig(0.4 * x + 0.3 * h0 + 0.05)
    f = sig(0.9 * x - 0.2 * h0 + 1.0)
    g = math.tanh(-0.6 * x + 0.5 * h0 - 0.1)
    o = sig(0.2 * x + 0.1 * h0)
    c = f * c0 + i * g
    h = o * math.tanh(c)
    out = lstm_cell_step(W, U, b, np.array([x]), CellState(np.array([h0]), np.array([c0])))
    assert out.c[0] == pytest.approx(c, abs=1e-12)
    assert out.h[0] == pytest.approx(h, abs=1e-12)


def test_dimension_mismatch_rejected():
    with pytest.raises(ValueError):
        lstm_cell_step(np.zeros((8, 2)), np.zeros((8, 3)), np.zeros(8), np.zeros(2),
                       CellState(np.zeros(2), np.zeros(2)))


@given(st.integers(0, 10_000))
@settings(max_examples=25, deadline=None)
def test_hidden_state_bounded(seed):
    rng = np.random.default_rng(seed)
    W, U, b = rng.normal(0, 3, (12, 3)), rng.normal(0, 3, (12, 5)), rng.normal(0, 3, 12)
    state = CellState(np.zeros(3), np.zeros(3))
    for _ in range(6):
        state = lstm_cell_step(W, U, b, rng.normal(0, 5, 5), state)
        assert np.all(np.abs(state.h) < 1)


def test_batched_forward_equals_repeated_cell_steps(rng):
    W, U, b = rng.normal(size=(20, 5)), rng.normal(size=(20, 3)), rng.normal(size=20)
    X = rng.normal(size=(7, 2, 3))
    H, _ = lstm_forward(W, U, b, X)
    for col in range(2):
        state = CellState(np.zeros(5), np.zeros(5))
        for t in range(7):
            state = lstm_cell_step(W, U, b, X[t, col], state)
            np.testing.assert_allclose(H[t, col], state.h, atol=1e-12)


def test_single_token_encoding():
    p = toy_params()
    enc = bilstm_encode(p, TokenizedPage(("a",), "x"))
    x = p.lookup(["a"])[0]
    zero = CellState(np.zeros(4), np.zeros(4))
    fw = lstm_cell_step(p.tensors["enc_fw.W"], p.tensors["enc_fw.U"], p.tensors["enc_fw.b"], x, zero)
    bw = lstm_cell_step(p.tensors["enc_bw.W"], p.tensors["enc_bw.U"], p.tensors["enc_bw.b"], x, zero)
    np.testing.assert_allclose(enc[0], np.concatenate([fw.h, bw.h]), atol=1e-12)


def test_reversal_swaps_directions():
    p = toy_params(3)
    swapped = p.copy()
    for part in ("W", "U", "b"):
        swapped.tensors[f"enc_fw.{part}"] = p.tensors[f"enc_bw.{part}"].copy()
        swapped.tensors[f"enc_bw.{part}"] = p.tensors[f"enc_fw.{part}"].copy()
    toks = ("a", "b", "c", "d", "a")
    fwd = bilstm_encode(p, TokenizedPage(toks, "x"))
    rev = bilstm_encode(swapped, TokenizedPage(toks[::-1], "y"))
    halves_swapped = np.concatenate([rev[::-1, 4:], rev[::-1, :4]], axis=1)
    np.testing.assert_allclose(fwd, halves_swapped, atol=1e-12)
    assert fwd.shape == (5, 8)


def test_empty_page_rejected():
    with pytest.raises(ValueError):
        decode_scores(toy_params(), np.zeros((0, 8)))


def test_zero_output_layer_is_uniform():
    p = toy_params()
    p.tensors["out.W"][:] = 0
    p.tensors["out.b"][:] = 0
    probs = predict_proba(p, TokenizedPage(("a", "b"), "x"))
    np.testing.assert_allclose(probs, 1.0 / N_TAGS)


def test_rows_sum_to_one_and_shift_invariant():
    p = toy_params(5)
    page = TokenizedPage(("a", "zzz", "b"), "x")
    probs = predict_proba(p, page)
    np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-6)
    assert probs.min() >= 0 and probs.max() <= 1
    p.tensors["out.b"] += 7.5
    np.testing.assert_allclose(predict_proba(p, page), probs, atol=1e-12)


def test_loss_perfect_prediction_is_zero():
    dist = np.eye(3)[[0, 2]]
    assert adaptive_loss(dist, np.array([0, 2]), np.ones(3)) == 0.0


def test_unit_weight_loss_is_cross_entropy():
    dist = np.array([[0.7, 0.2, 0.1], [0.25, 0.25, 0.5]])
    gold = np.array([0, 2])
    expected = -(math.log(0.7) + math.log(0.5))
    assert adaptive_loss(dist, gold, np.ones(3)) == pytest.approx(expected, rel=1e-12)


def test_doubling_weight_doubles_contribution():
    dist = np.array([[0.7, 0.2, 0.1], [0.25, 0.25, 0.5]])
    gold = np.array([0, 2])
    base = adaptive_loss(dist, gold, np.ones(3))
    doubled = adaptive_loss(dist, gold, np.array([1.0, 1.0, 2.0]))
    assert doubled - base == pytest.approx(-math.log(0.5), rel=1e-12)


def test_loss_clamps_zero_probability():
    assert adaptive_loss(np.array([[1.0, 0.0]]), np.array([1]), np.ones(2)) == pytest.approx(-math.log(1e-12))


def test_nonpositive_weights_rejected():
    with pytest.raises(ValueError):
        adaptive_loss(np.array([[0.5, 0.5]]), np.array([0]), np.array([1.0, 0.0]))


def finite_difference_check(params, ids, X, gold, weights, eps=1e-4):
    _, grads = loss_and_grads(params.tensors, ids, X, gold, weights)
    worst = {}
    for name, tensor in params.tensors.items():
        num = np.zeros_like(tensor)
        it = np.nditer(tensor, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = tensor[idx]
            tensor[idx] = orig + eps
            Xp = params.tensors["embed"][ids] if name == "embed" else X
            up, _ = loss_and_grads(params.tensors, ids, Xp, gold, weights)
            tensor[idx] = orig - eps
            Xm = params.tensors["embed"][ids] if name == "embed" else X
            down, _ = loss_and_grads(params.tensors, ids, Xm, gold, weights)
            tensor[idx] = orig
            num[idx] = (up - down) / (2 * eps)
        denom = max(np.abs(num).max(), np.abs(grads[name]).max(), 1e-12)
        worst[name] = float(np.abs(num - grads[name]).max() / denom)
    return worst


def test_gradients_match_finite_differences():
    params = toy_params(11)
    ids = np.array([[0], [2], [3]])
    X = params.tensors["embed"][ids]
    gold = np.array([[4], [0], [17]])
    weights = np.exp(np.random.default_rng(1).normal(0, 0.5, N_TAGS))
    worst = finite_difference_check(params, ids, X, gold, weights)
    assert set(worst) == set(params.tensors)
    assert max(worst.values()) < 1e-3, worst


def test_batched_gradients_match_finite_differences():
    params = toy_params(2, TaggerDims(3, 2, 3), ("a", "b", "c"))
    ids = np.array([[0, 1], [2, 0]])
    X = params.tensors["embed"][ids]
    gold = np.array([[1, 0], [20, 7]])
    worst = finite_difference_check(params, ids, X, gold, np.ones(N_TAGS))
    assert max(worst.values()) < 1e-3, worst


def test_batched_forward_matches_single_page():
    p = toy_params(4)
    pages = [("a", "b", "c"), ("d", "a", "a")]
    X = np.stack([p.lookup(t) for t in pages], axis=1)
    P, _ = forward_batch(p.tensors, X)
    for k, toks in enumerate(pages):
        np.testing.assert_allclose(P[:, k, :], predict_proba(p, TokenizedPage(toks, "x")), atol=1e-12)


def test_hashed_embedding_deterministic():
    a = hashed_embedding("acme", 8, seed=3)
    assert np.array_equal(a, hashed_embedding("acme", 8, seed=3))
    assert not np.array_equal(a, hashed_embedding("acme", 8, seed=4))


def test_params_reject_bad_shapes():
    p = toy_params()
    t = dict(p.tensors)
    t["out.b"] = np.zeros(5)
    with pytest.raises(ValueError):
        TaggerParams(p.dims, p.vocab, t)
    t = dict(p.tensors)
    t["enc_fw.W"] = np.full_like(t["enc_fw.W"], np.nan)
    with pytest.raises(ValueError):
        TaggerParams(p.dims, p.vocab, t)
    assert len(LAYERS) == 4
