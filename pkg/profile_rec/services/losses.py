from __future__ import annotations

from collections.abc import Callable

import torch
import torch.nn.functional as F
from torch import Tensor

from profile_rec.errors import NumericError
from profile_rec.models import Objective


def unit_rows(embeddings: Tensor, *, what: str = "embedding") -> Tensor:
    norms = torch.linalg.vector_norm(embeddings, dim=-1, keepdim=True)
    if bool((norms == 0).any()):
        raise NumericError(f"Cosine similarity is undefined for a zero-norm {what}.")
    return embeddings / norms


def cosine_matrix(left: Tensor, right: Tensor) -> Tensor:
    return unit_rows(left) @ unit_rows(right).transpose(0, 1)


def contrastive_loss(
    user_embs: Tensor,
    pos_item_embs: Tensor,
    neg_item_embs: Tensor,
    temperature: float,
    mode: Objective | str = Objective.contrastive_paper,
) -> Tensor:
    """Supervised contrastive loss with in-batch negatives.

    Row r is scored against the candidates [pos_0..pos_B-1, neg_0..neg_B-1].
    Its denominator holds its own explicit negative and every other row's
    positive; the standard mode also keeps its own positive.
    """
    mode = Objective(mode)
    if not mode.is_contrastive:
        raise NumericError(f"Objective {mode.value} is not contrastive.")
    if temperature <= 0:
        raise NumericError("Temperature must be positive.")
    batch = user_embs.shape[0]
    candidates = torch.cat([pos_item_embs, neg_item_embs], dim=0)
    logits = cosine_matrix(user_embs, candidates) / temperature
    rows = torch.arange(batch, device=logits.device)

    keep = torch.zeros_like(logits, dtype=torch.bool)
    keep[:, :batch] = True
    keep[rows, batch + rows] = True
    if mode is Objective.contrastive_paper:
        keep[rows, rows] = False
    denominator = torch.logsumexp(logits.masked_fill(~keep, float("-inf")), dim=1)
    return (denominator - logits[rows, rows]).mean()


def bpr_loss(
    user_embs: Tensor, pos_item_embs: Tensor, neg_item_embs: Tensor, temperature: float
) -> Tensor:
    user = unit_rows(user_embs)
    positive = (user * unit_rows(pos_item_embs)).sum(dim=-1) / temperature
    negative = (user * unit_rows(neg_item_embs)).sum(dim=-1) / temperature
    return -F.logsigmoid(positive - negative).mean()


def dot_bpr_loss(user_embs: Tensor, pos_item_embs: Tensor, neg_item_embs: Tensor) -> Tensor:
    positive = (user_embs * pos_item_embs).sum(dim=-1)
    negative = (user_embs * neg_item_embs).sum(dim=-1)
    return -F.logsigmoid(positive - negative).mean()


def mlm_loss(
    token_states: Tensor,
    label_positions: Tensor,
    labels: Tensor,
    mlm_head: Callable[[Tensor], Tensor],
) -> Tensor:
    """Mean cross-entropy at labelled positions.

    ``label_positions`` is a (k, 2) tensor of (row, position) pairs aligned
    with the k ``labels``.
    """
    if labels.numel() == 0:
        return token_states.sum() * 0.0
    selected = token_states[label_positions[:, 0], label_positions[:, 1]]
    return F.cross_entropy(mlm_head(selected), labels)


def alignment_loss(
    cf_embs: Tensor,
    text_embs: Tensor,
    projection: Callable[[Tensor], Tensor],
    temperature: float,
) -> Tensor:
    """Symmetric in-batch InfoNCE between projected text and CF embeddings."""
    logits = cosine_matrix(projection(text_embs.detach()), cf_embs) / temperature
    targets = torch.arange(logits.shape[0], device=logits.device)
    return 0.5 * (F.cross_entropy(logits, targets) + F.cross_entropy(logits.transpose(0, 1), targets))
