import math

import numpy as np
import pytest
import torch

from profile_rec.errors import DataError
from profile_rec.models import EncoderConfig, NormStyle, TokenSequence, TrainConfig
from profile_rec.networks.encoder import (
    attention,
    backward,
    count_parameters,
    encode,
    init_params,
    record_forward,
)
from profile_rec.services.tokenizer import ProfileTokenizer
from profile_rec.services.training import Trainer, TrainingBatch, Triplet


def expected_parameters(config: EncoderConfig) -> int:
    d, f, v = config.hidden_size, config.feed_forward_size, config.vocab_size
    block = 2 * d + 4 * (d * d + d) + 2 * d + (d * f + f) + (f * d + d)
    total = v * d + config.max_len * d + 2 * d + config.layers * block
    total += d * d + d + d * config.embedding_size + config.embedding_size
    total += d * d + d + 2 * d + v
    if not config.tie_mlm_weights:
        total += v * d
    return total


def sequence(ids: list[int], max_len: int, pad: int = 1) -> TokenSequence:
    padding = max_len - len(ids)
    return TokenSequence(tuple(ids) + (pad,) * padding, (1,) * len(ids) + (0,) * padding, len(ids))


def test_parameter_count_matches_formula() -> None:
    tied = EncoderConfig(layers=2, hidden_size=16, heads=2, vocab_size=64, max_len=16)
    untied = tied.model_copy(update={"tie_mlm_weights": False, "output_size": 8})

    assert count_parameters(init_params(tied, 0)) == expected_parameters(tied)
    assert count_parameters(init_params(untied, 0)) == expected_parameters(untied)


def test_presets_expand_to_published_sizes() -> None:
    base = EncoderConfig.from_preset("base", vocab_size=100)
    large = EncoderConfig.from_preset("large", vocab_size=100)

    assert (base.layers, base.hidden_size, base.heads) == (12, 768, 12)
    assert (large.layers, large.hidden_size, large.heads) == (24, 1024, 16)


def test_init_params_is_seeded() -> None:
    config = EncoderConfig(layers=1, hidden_size=8, heads=2, vocab_size=20, max_len=8)

    first = init_params(config, 7).state_dict()
    second = init_params(config, 7).state_dict()

    assert all(torch.equal(first[name], second[name]) for name in first)


def test_attention_matches_direct_formula() -> None:
    generator = torch.Generator().manual_seed(0)
    x = torch.randn(1, 4, 6, generator=generator, dtype=torch.float64)
    w_q, w_k, w_v, w_o = (torch.randn(6, 6, generator=generator, dtype=torch.float64) for _ in range(4))
    mask = torch.tensor([[True, True, True, False]])

    result = attention(x, mask, w_q, w_k, w_v, w_o)

    q, k, v = (x[0] @ w.T for w in (w_q, w_k, w_v))
    logits = (q @ k.T / math.sqrt(6)).numpy()
    logits[:, 3] = -np.inf
    weights = np.exp(logits - logits.max(axis=1, keepdims=True))
    weights /= weights.sum(axis=1, keepdims=True)
    expected = weights @ v.numpy() @ w_o.numpy().T
    np.testing.assert_allclose(result.values[0].numpy(), expected, rtol=1e-12, atol=1e-12)
    assert torch.all(result.weights[..., 3] == 0)


@pytest.mark.parametrize("norm_style", [NormStyle.pre, NormStyle.post])
def test_padding_does_not_change_embeddings(norm_style) -> None:
    config = EncoderConfig(
        layers=2, hidden_size=16, heads=2, vocab_size=30, max_len=10, dropout=0.0, norm_style=norm_style
    )
    encoder = init_params(config, 1)
    clean = sequence([0, 5, 6, 7], 10)
    noisy = TokenSequence(clean.ids[:4] + (9, 12, 20, 3, 8, 4), clean.attention_mask, clean.true_len)

    vectors = encode(encoder, [clean, noisy])

    np.testing.assert_allclose(vectors[0], vectors[1], atol=1e-6)


def test_encode_shapes() -> None:
    config = EncoderConfig(layers=1, hidden_size=8, heads=2, vocab_size=20, max_len=6, output_size=4)
    encoder = init_params(config, 0)

    vectors = encode(encoder, [sequence([0, 4], 6), sequence([0, 5, 6], 6)])

    assert vectors.shape == (2, 4)
    assert vectors.dtype == np.float32
    assert encode(encoder, []).shape == (0, 4)


def test_collate_rejects_overlong_sequence() -> None:
    config = EncoderConfig(layers=1, hidden_size=8, heads=2, vocab_size=20, max_len=4)

    with pytest.raises(DataError) as exc:
        encode(init_params(config, 0), [sequence([0, 4, 5, 6, 7], 5)])

    assert exc.value.detail == "Sequence length 5 exceeds max_len 4."


def test_backward_matches_autograd_of_weighted_sum() -> None:
    config = EncoderConfig(layers=1, hidden_size=8, heads=2, vocab_size=20, max_len=6, dropout=0.0)
    encoder = init_params(config, 3, dtype=torch.float64)
    forward = record_forward(encoder, [sequence([0, 4, 5], 6), sequence([0, 7], 6)])
    upstream = torch.randn(forward.output.embeddings.shape, dtype=torch.float64)

    grads = backward(encoder, forward, upstream)
    (forward.output.embeddings * upstream).sum().backward()

    for name, parameter in encoder.named_parameters():
        expected = parameter.grad if parameter.grad is not None else torch.zeros_like(parameter)
        assert torch.allclose(grads[name], expected)


def test_zero_upstream_gives_zero_gradients() -> None:
    config = EncoderConfig(layers=1, hidden_size=8, heads=2, vocab_size=20, max_len=6, dropout=0.0)
    encoder = init_params(config, 3, dtype=torch.float64)
    forward = record_forward(encoder, [sequence([0, 4, 5], 6), sequence([0, 7], 6)])

    grads = backward(encoder, forward, torch.zeros_like(forward.output.embeddings))

    assert all(torch.count_nonzero(grad) == 0 for grad in grads.values())


def test_unused_vocab_row_gets_no_gradient() -> None:
    config = EncoderConfig(layers=1, hidden_size=8, heads=2, vocab_size=20, max_len=6, dropout=0.0)
    encoder = init_params(config, 3, dtype=torch.float64)
    forward = record_forward(encoder, [sequence([0, 4, 5], 6), sequence([0, 7], 6)])
    upstream = torch.randn(forward.output.embeddings.shape, dtype=torch.float64)

    token_grads = backward(encoder, forward, upstream)["token_embeddings.weight"]

    assert torch.count_nonzero(token_grads[12]) == 0
    assert torch.count_nonzero(token_grads[4]) > 0


def test_attention_rows_sum_to_one_over_valid_keys() -> None:
    generator = torch.Generator().manual_seed(1)
    x = torch.randn(2, 5, 8, generator=generator, dtype=torch.float64)
    w_q, w_k, w_v, w_o = (torch.randn(8, 8, generator=generator, dtype=torch.float64) for _ in range(4))
    mask = torch.tensor([[True, True, True, False, False], [True, True, True, True, True]])

    weights = attention(x, mask, w_q, w_k, w_v, w_o, num_heads=2).weights

    assert weights.shape == (2, 2, 5, 5)
    torch.testing.assert_close(weights.sum(dim=-1), torch.ones(2, 2, 5, dtype=torch.float64))
    assert torch.all(weights[0, :, :, 3:] == 0)


def test_encode_is_equivariant_to_batch_order() -> None:
    config = EncoderConfig(layers=2, hidden_size=16, heads=2, vocab_size=30, max_len=8, dropout=0.0)
    encoder = init_params(config, 2)
    sequences = [sequence([0, 4, 5], 8), sequence([0, 9, 10, 11, 12], 8), sequence([0, 7], 8), sequence([0, 20], 8)]
    order = [2, 0, 3, 1]

    vectors = encode(encoder, sequences)
    shuffled = encode(encoder, [sequences[index] for index in order])

    np.testing.assert_allclose(shuffled, vectors[order], atol=1e-6)


def test_gradients_match_central_differences(vocab, corpus) -> None:
    config = EncoderConfig(layers=2, hidden_size=16, heads=2, vocab_size=vocab.size, max_len=16, dropout=0.0)
    trainer = Trainer(TrainConfig(temperature=0.2, mlm_weight=0.1, mask_ratio=0.3, batch_size=4), config, vocab)
    tokenizer = ProfileTokenizer(vocab, config.max_len)
    batch = TrainingBatch()
    negative_id = corpus.dataset.items[-1]
    for user_id, item_id in corpus.dataset.train[:4]:
        batch.users.append(tokenizer(corpus.user_profiles[user_id].original))
        batch.positives.append(tokenizer(corpus.item_profiles[item_id].original))
        batch.negatives.append(tokenizer(corpus.item_profiles[negative_id].original))
        batch.triplets.append(Triplet(corpus.name, user_id, item_id, negative_id))
    encoder = init_params(config, 0, dtype=torch.float64)

    def loss() -> torch.Tensor:
        return trainer.compute_losses(encoder, batch, np.random.default_rng(7))[0]

    loss().backward()
    named = dict(encoder.named_parameters())
    rng = np.random.default_rng(0)
    names = sorted(named)
    step = 1e-3

    def central(flat: torch.Tensor, index: int, original: float, width: float) -> float:
        flat[index] = original + width
        upper = float(loss())
        flat[index] = original - width
        lower = float(loss())
        flat[index] = original
        return (upper - lower) / (2 * width)

    for _ in range(50):
        name = names[int(rng.integers(len(names)))]
        parameter = named[name]
        flat = parameter.data.view(-1)
        index = int(rng.integers(flat.numel()))
        analytic = float(parameter.grad.view(-1)[index]) if parameter.grad is not None else 0.0
        with torch.no_grad():
            original = float(flat[index])
            # Richardson extrapolation of the step and half-step central differences
            numeric = (4 * central(flat, index, original, step / 2) - central(flat, index, original, step)) / 3
        assert abs(analytic - numeric) <= 1e-5 * max(abs(analytic), abs(numeric)) + 1e-9, name
