import math

import numpy as np
import pytest

from helpers import numeric_grad, rel_error
from i2ce import autograd as ag
from i2ce.autograd import Tensor
from i2ce.neural import (GATES, GruParams, ModelConfig, TrainConfig, TrainingDiverged,
                         attention, batch_loss, decode_train, encode, gru_step, init_model,
                         load_checkpoint, reconstruct, save_checkpoint, train_autoencoder)
from i2ce.text import Vocabulary, build_vocab, tokenize
from i2ce import toyworld


def sigmoid(x):
    return 1 / (1 + math.exp(-x))


def random_gru(rng, d, H, scale=0.5):
    return GruParams(**{g: rng.normal(0, scale, {"W": (d, H), "U": (H, H), "b": (H,)}[g[0]])
                        for g in GATES})


def scalar_gru(p, x, h):
    """Straight-line, loop-per-unit GRU used as an independent oracle."""
    H = len(h)
    out = []
    z = [sigmoid(sum(x[i] * p.Wz[i, k] for i in range(len(x))) +
                 sum(h[j] * p.Uz[j, k] for j in range(H)) + p.bz[k]) for k in range(H)]
    r = [sigmoid(sum(x[i] * p.Wr[i, k] for i in range(len(x))) +
                 sum(h[j] * p.Ur[j, k] for j in range(H)) + p.br[k]) for k in range(H)]
    for k in range(H):
        cand = math.tanh(sum(x[i] * p.Wh[i, k] for i in range(len(x))) +
                         sum(r[j] * h[j] * p.Uh[j, k] for j in range(H)) + p.bh[k])
        out.append((1 - z[k]) * h[k] + z[k] * cand)
    return np.array(out)


# -------------------------------------------------------------------------
# autograd basics


def test_nonfinite_values_trip():
    with pytest.raises(FloatingPointError):
        Tensor([1.0, np.inf])
    with pytest.raises(FloatingPointError):
        ag.mul(Tensor([1e200]), Tensor([1e200]))


def test_broadcast_and_reuse_gradients():
    a = Tensor(np.array([[1.0, 2.0], [3.0, 4.0]]), requires_grad=True)
    b = Tensor(np.array([10.0, 20.0]), requires_grad=True)
    out = ag.sum_(a * b + a)
    out.backward()
    assert np.array_equal(a.grad, [[11.0, 21.0], [11.0, 21.0]])
    assert np.array_equal(b.grad, [4.0, 6.0])


def test_deep_chain_does_not_recurse():
    x = Tensor(1.0, requires_grad=True)
    y = x
    for _ in range(5000):
        y = y * 1.0
    y.backward()
    assert x.grad == 1.0


def test_masked_softmax_and_cross_entropy_gradients():
    rng = np.random.default_rng(0)
    for _ in range(20):
        s = rng.normal(size=(3, 5))
        mask = rng.random((3, 5)) < 0.7
        mask[:, 0] = True
        w = rng.normal(size=(3, 5))
        targets = rng.integers(0, 5, size=3)
        t = Tensor(s, requires_grad=True)
        out = ag.sum_(ag.masked_softmax(t, mask) * w) + ag.cross_entropy(t, targets)
        out.backward()
        f = lambda: float(ag.sum_(ag.masked_softmax(s, mask) * w).data + ag.cross_entropy(s, targets).data)
        assert rel_error(t.grad, numeric_grad(f, s)) <= 1e-4


# -------------------------------------------------------------------------
# GRU


def test_gru_zero_parameter_cases():
    H = 3
    zero = GruParams(**{g: np.zeros({"W": (2, H), "U": (H, H), "b": (H,)}[g[0]]) for g in GATES})
    h = np.array([1.0, -2.0, 0.5])
    assert np.array_equal(gru_step(zero, np.ones(2), h).data, 0.5 * h)
    assert np.array_equal(gru_step(zero, np.ones(2), np.zeros(H)).data, np.zeros(H))


def test_gru_matches_scalar_oracle():
    rng = np.random.default_rng(1)
    for _ in range(20):
        d, H = int(rng.integers(1, 6)), int(rng.integers(1, 6))
        p = random_gru(rng, d, H)
        x, h = rng.normal(size=d), rng.normal(size=H)
        assert np.allclose(gru_step(p, x, h).data, scalar_gru(p, x, h), atol=1e-13)


def test_gru_shape_errors():
    p = random_gru(np.random.default_rng(0), 3, 4)
    with pytest.raises(ValueError):
        gru_step(p, np.zeros(2), np.zeros(4))
    with pytest.raises(ValueError):
        p.check(3, 5)


def test_gru_gradients():
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(20):
        d, H = int(rng.integers(1, 7)), int(rng.integers(1, 7))
        p = random_gru(rng, d, H)
        x, h, w = rng.normal(size=d), rng.normal(size=H), rng.normal(size=H)
        leaves = {g: Tensor(getattr(p, g), requires_grad=True) for g in GATES}
        xt, ht = Tensor(x, requires_grad=True), Tensor(h, requires_grad=True)
        ag.sum_(gru_step(GruParams(**leaves), xt, ht) * w).backward()
        f = lambda: float(gru_step(p, x, h).data @ w)
        for g in GATES:
            worst = max(worst, rel_error(leaves[g].grad, numeric_grad(f, getattr(p, g))))
        worst = max(worst, rel_error(xt.grad, numeric_grad(f, x)), rel_error(ht.grad, numeric_grad(f, h)))
    assert worst <= 1e-4


# -------------------------------------------------------------------------
# attention


def test_attention_examples():
    rng = np.random.default_rng(3)
    W1, W2, v = rng.normal(size=(4, 3)), rng.normal(size=(4, 3)), rng.normal(size=3)
    enc = rng.normal(size=(1, 4))
    ctx, w = attention(W1, W2, v, rng.normal(size=4), enc)
    assert w.data.tolist() == [1.0] and np.array_equal(ctx.data, enc[0])
    enc = rng.normal(size=(5, 4))
    _, w = attention(W1, W2, np.zeros(3), rng.normal(size=4), enc)
    assert np.allclose(w.data, 0.2, atol=1e-15)
    for _ in range(50):
        _, w = attention(W1, W2, v, rng.normal(size=4) * 3, rng.normal(size=(6, 4)) * 3)
        assert abs(w.data.sum() - 1) <= 1e-9 and ((w.data > 0) & (w.data < 1)).all()


def test_attention_mask_zeroes_padding():
    rng = np.random.default_rng(4)
    W1, W2, v = rng.normal(size=(3, 2)), rng.normal(size=(3, 2)), rng.normal(size=2)
    enc = rng.normal(size=(1, 4, 3))
    mask = np.array([[True, True, False, False]])
    _, w = attention(W1, W2, v, rng.normal(size=(1, 3)), enc, mask)
    assert w.data[0, 2:].tolist() == [0.0, 0.0] and abs(w.data.sum() - 1) < 1e-12


def test_attention_gradients():
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(20):
        H, A, L = int(rng.integers(1, 7)), int(rng.integers(1, 7)), int(rng.integers(1, 6))
        arrays = dict(W1=rng.normal(size=(H, A)), W2=rng.normal(size=(H, A)), v=rng.normal(size=A),
                      s=rng.normal(size=H), enc=rng.normal(size=(L, H)))
        wc, ww = rng.normal(size=H), rng.normal(size=L)
        leaves = {k: Tensor(a, requires_grad=True) for k, a in arrays.items()}
        ctx, w = attention(leaves["W1"], leaves["W2"], leaves["v"], leaves["s"], leaves["enc"])
        (ag.sum_(ctx * wc) + ag.sum_(w * ww)).backward()

        def f():
            c, a = attention(arrays["W1"], arrays["W2"], arrays["v"], arrays["s"], arrays["enc"])
            return float(c.data @ wc + a.data @ ww)

        for k in arrays:
            worst = max(worst, rel_error(leaves[k].grad, numeric_grad(f, arrays[k])))
    assert worst <= 1e-4


# -------------------------------------------------------------------------
# full auto-encoder loss


def tiny_model(rng, frozen=True):
    words = [f"w{i}" for i in range(int(rng.integers(3, 9)))]
    cfg = ModelConfig(d=int(rng.integers(2, 5)), hidden=int(rng.integers(2, 5)),
                      attn=int(rng.integers(2, 5)), max_len=6)
    model = init_model(Vocabulary(words), cfg, seed=int(rng.integers(1000)), frozen_embedding=frozen)
    for k in model.params:  # nonzero biases and larger weights exercise every path
        model.params[k] = model.params[k] * 1.5 + rng.normal(0, 0.3, model.params[k].shape)
    batch = [list(rng.choice(words, size=int(rng.integers(1, 4)))) for _ in range(2)]
    return model, batch


def test_decoder_cross_entropy_gradients():
    rng = np.random.default_rng(6)
    worst = 0.0
    for trial in range(20):
        model, batch = tiny_model(rng, frozen=trial % 2 == 0)
        loss, P = batch_loss(model, batch, grad=True)
        loss.backward()
        f = lambda: float(batch_loss(model, batch)[0].data)
        for name in model.trainable():
            worst = max(worst, rel_error(P[name].grad, numeric_grad(f, model.params[name])))
        if model.frozen_embedding:
            assert P["embedding"].grad is None
    assert worst <= 1e-4


@pytest.fixture(scope="module")
def toy():
    sents = [tokenize(s) for s in toyworld.caption_corpus(14, 5)]
    vocab = build_vocab(sents)
    return sents, init_model(vocab, ModelConfig(d=8, hidden=12, attn=6, max_len=20), seed=3)


def test_encode_shapes_and_errors(toy):
    sents, model = toy
    states, intrinsic = encode(model, ["cat"])
    assert states.shape == (2, 12) and np.array_equal(intrinsic, states[-1])
    with pytest.raises(ValueError):
        encode(model, [])
    a, b = encode(model, sents[0])[1], encode(model, list(sents[0]))[1]
    assert a.tobytes() == b.tobytes()


def test_encoder_is_causal(toy):
    sents, model = toy
    rng = np.random.default_rng(0)
    words = model.vocab.tokens
    for s in sents[:20]:
        k = int(rng.integers(1, len(s) + 1))
        other = s[:k] + list(rng.choice(words, size=3))
        a, b = encode(model, s)[0], encode(model, other)[0]
        assert np.array_equal(a[:k], b[:k])


def test_untrained_loss_near_uniform(toy):
    sents, model = toy
    logv = math.log(len(model.vocab))
    for s in sents[:10]:
        loss, truncated = decode_train(model, encode(model, s), s)
        assert loss >= 0 and not truncated
        assert abs(loss - logv) <= 0.2 * logv


def test_decode_train_truncates_with_flag(toy):
    _, model = toy
    long = ["cat"] * 30
    _, truncated = decode_train(model, encode(model, long), long)
    assert truncated


def test_reconstruct_untrained_is_total_and_deterministic(toy):
    sents, model = toy
    for s in sents[:10]:
        out = reconstruct(model, s)
        assert len(out) <= model.config.max_len and all(t in model.vocab for t in out)
        assert out == reconstruct(model, s)


def test_training_contract(toy):
    sents, model = toy
    cfg = TrainConfig(epochs=4, lr=0.01, optimizer="adam", seed=1)
    result = train_autoencoder(model, sents, cfg)
    again = train_autoencoder(model, sents, cfg)
    assert len(result.losses) == 4 and result.losses[-1] < result.losses[0]
    assert result.model.params["embedding"].tobytes() == model.params["embedding"].tobytes()
    assert all(result.model.params[k].tobytes() == again.model.params[k].tobytes()
               for k in model.params)
    assert not np.array_equal(result.model.params["out.W"], model.params["out.W"])


def test_sgd_training_reduces_loss(toy):
    sents, model = toy
    result = train_autoencoder(model, sents, TrainConfig(epochs=3, lr=0.5, seed=0))
    assert result.losses[-1] < result.losses[0]


def test_training_errors(toy):
    sents, model = toy
    with pytest.raises(ValueError, match="50"):
        train_autoencoder(model, sents[:10])
    with pytest.raises(ValueError, match="optimizer"):
        train_autoencoder(model, sents, TrainConfig(optimizer="rmsprop"))
    with pytest.raises(TrainingDiverged):
        train_autoencoder(model, sents, TrainConfig(epochs=2, lr=1e306, clip=0))


def test_checkpoint_roundtrip(toy, tmp_path):
    _, model = toy
    save_checkpoint(model, tmp_path / "ck")
    loaded = load_checkpoint(tmp_path / "ck")
    assert loaded.vocab == model.vocab and loaded.config == model.config
    assert loaded.frozen_embedding == model.frozen_embedding
    assert list(loaded.params) == list(model.params)
    for k in model.params:
        assert loaded.params[k].tobytes() == model.params[k].tobytes()
    save_checkpoint(loaded, tmp_path / "ck2")
    for name in ("manifest.txt", "vocab.txt", "params.bin"):
        assert (tmp_path / "ck" / name).read_bytes() == (tmp_path / "ck2" / name).read_bytes()


def test_checkpoint_rejects_tampering(toy, tmp_path):
    _, model = toy
    path = save_checkpoint(model, tmp_path / "ck")
    (path / "vocab.txt").write_text("other\n")
    with pytest.raises(ValueError, match="hash"):
        load_checkpoint(path)
    manifest = (path / "manifest.txt").read_text().replace("version = 1", "version = 9")
    (path / "manifest.txt").write_text(manifest)
    with pytest.raises(ValueError, match="version"):
        load_checkpoint(path)
