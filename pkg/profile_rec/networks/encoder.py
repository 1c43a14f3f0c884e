from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import torch
import torch.nn.functional as F
from torch import Tensor, nn

from profile_rec.errors import DataError, NumericError
from profile_rec.models import EncoderConfig, NormStyle, TokenSequence


class AttentionOutput(NamedTuple):
    values: Tensor
    weights: Tensor


def attention(
    x: Tensor,
    mask: Tensor,
    w_q: Tensor,
    w_k: Tensor,
    w_v: Tensor,
    w_o: Tensor,
    *,
    num_heads: int = 1,
    b_q: Tensor | None = None,
    b_k: Tensor | None = None,
    b_v: Tensor | None = None,
    b_o: Tensor | None = None,
    dropout: float = 0.0,
    training: bool = False,
) -> AttentionOutput:
    """Multi-head scaled dot-product self-attention.

    ``x`` is (batch, n, d) and ``mask`` (batch, n) marks valid positions; pad
    keys get -inf logits. Weight matrices use the ``nn.Linear`` (out, in)
    layout, so Q = x @ w_q.T.
    """
    batch, length, _ = x.shape
    width = w_q.shape[0]
    head_size = width // num_heads

    def split_heads(projected: Tensor) -> Tensor:
        return projected.view(batch, length, num_heads, head_size).transpose(1, 2)

    query = split_heads(F.linear(x, w_q, b_q))
    key = split_heads(F.linear(x, w_k, b_k))
    value = split_heads(F.linear(x, w_v, b_v))
    logits = query @ key.transpose(-1, -2) / math.sqrt(head_size)
    logits = logits.masked_fill(~mask[:, None, None, :], float("-inf"))
    weights = torch.softmax(logits, dim=-1)
    context = F.dropout(weights, dropout, training) @ value
    context = context.transpose(1, 2).reshape(batch, length, width)
    return AttentionOutput(F.linear(context, w_o, b_o), weights)


class TransformerBlock(nn.Module):
    def __init__(self, config: EncoderConfig) -> None:
        super().__init__()
        width = config.hidden_size
        self.heads = config.heads
        self.norm_style = config.norm_style
        self.dropout = config.dropout
        self.attn_norm = nn.LayerNorm(width)
        self.query = nn.Linear(width, width)
        self.key = nn.Linear(width, width)
        self.value = nn.Linear(width, width)
        self.output = nn.Linear(width, width)
        self.ffn_norm = nn.LayerNorm(width)
        self.ffn_in = nn.Linear(width, config.feed_forward_size)
        self.ffn_out = nn.Linear(config.feed_forward_size, width)

    def _attend(self, x: Tensor, mask: Tensor) -> Tensor:
        result = attention(
            x,
            mask,
            self.query.weight,
            self.key.weight,
            self.value.weight,
            self.output.weight,
            num_heads=self.heads,
            b_q=self.query.bias,
            b_k=self.key.bias,
            b_v=self.value.bias,
            b_o=self.output.bias,
            dropout=self.dropout,
            training=self.training,
        )
        return F.dropout(result.values, self.dropout, self.training)

    def _feed_forward(self, x: Tensor) -> Tensor:
        hidden = F.gelu(self.ffn_in(x))
        return F.dropout(self.ffn_out(hidden), self.dropout, self.training)

    def forward(self, x: Tensor, mask: Tensor) -> Tensor:
        if self.norm_style is NormStyle.pre:
            x = x + self._attend(self.attn_norm(x), mask)
            return x + self._feed_forward(self.ffn_norm(x))
        x = self.attn_norm(x + self._attend(x, mask))
        return self.ffn_norm(x + self._feed_forward(x))


class EncoderOutput(NamedTuple):
    token_states: Tensor
    embeddings: Tensor


class TextEncoder(nn.Module):
    """Bidirectional encoder with [CLS] pooling, an MLP head and an MLM head."""

    def __init__(self, config: EncoderConfig) -> None:
        super().__init__()
        width = config.hidden_size
        self.config = config
        self.token_embeddings = nn.Embedding(config.vocab_size, width)
        self.position_embeddings = nn.Embedding(config.max_len, width)
        # pre-norm closes the stack with a norm, post-norm opens it with one
        self.boundary_norm = nn.LayerNorm(width)
        self.blocks = nn.ModuleList(TransformerBlock(config) for _ in range(config.layers))
        self.head_dense = nn.Linear(width, width)
        self.head_out = nn.Linear(width, config.embedding_size)
        self.mlm_dense = nn.Linear(width, width)
        self.mlm_norm = nn.LayerNorm(width)
        self.mlm_bias = nn.Parameter(torch.zeros(config.vocab_size))
        self.mlm_decoder = None if config.tie_mlm_weights else nn.Linear(width, config.vocab_size, bias=False)

    def forward(self, ids: Tensor, mask: Tensor) -> EncoderOutput:
        if ids.shape[1] > self.config.max_len:
            raise DataError(
                f"Sequence length {ids.shape[1]} exceeds max_len {self.config.max_len}."
            )
        positions = torch.arange(ids.shape[1], device=ids.device)
        x = self.token_embeddings(ids) + self.position_embeddings(positions)[None, :, :]
        if self.config.norm_style is NormStyle.post:
            x = self.boundary_norm(x)
        x = F.dropout(x, self.config.dropout, self.training)
        for block in self.blocks:
            x = block(x, mask)
        if self.config.norm_style is NormStyle.pre:
            x = self.boundary_norm(x)
        pooled = torch.tanh(self.head_dense(x[:, 0, :]))
        return EncoderOutput(token_states=x, embeddings=self.head_out(pooled))

    def mlm_logits(self, token_states: Tensor) -> Tensor:
        hidden = self.mlm_norm(F.gelu(self.mlm_dense(token_states)))
        decoder = self.token_embeddings.weight if self.mlm_decoder is None else self.mlm_decoder.weight
        return F.linear(hidden, decoder, self.mlm_bias)

    @property
    def dtype(self) -> torch.dtype:
        return self.token_embeddings.weight.dtype


def init_params(config: EncoderConfig, seed: int, *, dtype: torch.dtype = torch.float32) -> TextEncoder:
    """Build an encoder with seeded uniform(-1/sqrt(d), 1/sqrt(d)) weights."""
    if config.hidden_size % config.heads != 0:
        raise DataError("hidden_size must be divisible by heads.")
    encoder = TextEncoder(config)
    generator = torch.Generator().manual_seed(seed)
    bound = 1.0 / math.sqrt(config.hidden_size)
    with torch.no_grad():
        for module in encoder.modules():
            if isinstance(module, nn.LayerNorm):
                module.weight.fill_(1.0)
                module.bias.zero_()
            elif isinstance(module, (nn.Linear, nn.Embedding)):
                module.weight.uniform_(-bound, bound, generator=generator)
                if getattr(module, "bias", None) is not None:
                    module.bias.zero_()
        encoder.mlm_bias.zero_()
    return encoder.to(dtype)


def count_parameters(encoder: nn.Module) -> int:
    return sum(parameter.numel() for parameter in encoder.parameters())


def collate(sequences: Sequence[TokenSequence], max_len: int) -> tuple[Tensor, Tensor]:
    for sequence in sequences:
        if sequence.max_len > max_len:
            raise DataError(f"Sequence length {sequence.max_len} exceeds max_len {max_len}.")
    ids = torch.tensor([sequence.ids for sequence in sequences], dtype=torch.long)
    mask = torch.tensor([sequence.attention_mask for sequence in sequences], dtype=torch.bool)
    return ids, mask


def encode(
    encoder: TextEncoder, sequences: Sequence[TokenSequence], *, batch_size: int = 256
) -> np.ndarray:
    """Inference-mode embeddings, one float32 row per sequence."""
    was_training = encoder.training
    encoder.eval()
    rows: list[np.ndarray] = []
    try:
        with torch.inference_mode():
            for start in range(0, len(sequences), batch_size):
                ids, mask = collate(sequences[start : start + batch_size], encoder.config.max_len)
                rows.append(encoder(ids, mask).embeddings.to(torch.float32).numpy())
    finally:
        encoder.train(was_training)
    if not rows:
        return np.zeros((0, encoder.config.embedding_size), dtype=np.float32)
    return np.concatenate(rows, axis=0)


@dataclass(slots=True)
class ForwardPass:
    ids: Tensor
    mask: Tensor
    output: EncoderOutput


def record_forward(encoder: TextEncoder, sequences: Sequence[TokenSequence]) -> ForwardPass:
    encoder.train()
    ids, mask = collate(sequences, encoder.config.max_len)
    return ForwardPass(ids=ids, mask=mask, output=encoder(ids, mask))


def backward(
    encoder: TextEncoder,
    forward_pass: ForwardPass | None,
    embedding_grads: Tensor,
    token_state_grads: Tensor | None = None,
) -> dict[str, Tensor]:
    """Reverse-mode gradients of every parameter given upstream output gradients."""
    if forward_pass is None or not forward_pass.output.embeddings.requires_grad:
        raise NumericError("No recorded forward pass to differentiate.")
    outputs = [forward_pass.output.embeddings]
    upstream = [embedding_grads]
    if token_state_grads is not None:
        outputs.append(forward_pass.output.token_states)
        upstream.append(token_state_grads)
    named = [(name, parameter) for name, parameter in encoder.named_parameters() if parameter.requires_grad]
    grads = torch.autograd.grad(
        outputs,
        [parameter for _, parameter in named],
        grad_outputs=upstream,
        retain_graph=True,
        allow_unused=True,
    )
    return {
        name: torch.zeros_like(parameter) if grad is None else grad
        for (name, parameter), grad in zip(named, grads)
    }
