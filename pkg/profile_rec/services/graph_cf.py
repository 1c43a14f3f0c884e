from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import torch
from torch import Tensor
from tqdm import tqdm

from profile_rec.errors import DataError, TrainingAborted
from profile_rec.models import CFConfig, EmbeddingStore, EntityKind, InteractionDataset, SplitName
from profile_rec.networks.graph_cf import GraphCF, Propagated
from profile_rec.services.evaluation import evaluate_all_rank, parse_metric
from profile_rec.services.losses import alignment_loss, dot_bpr_loss
from profile_rec.services.training import sample_negative

logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class NormalizedAdjacency:
    """Symmetric D^-1/2 A D^-1/2 over users then items, built from train pairs."""

    user_ids: tuple[str, ...]
    item_ids: tuple[str, ...]
    matrix: sp.csr_matrix
    dataset: InteractionDataset = field(repr=False)

    @property
    def num_nodes(self) -> int:
        return len(self.user_ids) + len(self.item_ids)

    def tensor(self, dtype: torch.dtype = torch.float32) -> Tensor:
        coo = self.matrix.tocoo()
        indices = torch.from_numpy(np.vstack([coo.row, coo.col]).astype(np.int64))
        values = torch.from_numpy(coo.data).to(dtype)
        return torch.sparse_coo_tensor(indices, values, coo.shape).coalesce()


def _drop_isolated(dataset: InteractionDataset) -> InteractionDataset:
    users = tuple(user_id for user_id in dataset.users if dataset.user_neighbors[user_id])
    items = tuple(item_id for item_id in dataset.items if dataset.item_neighbors[item_id])
    if len(users) == len(dataset.users) and len(items) == len(dataset.items):
        return dataset
    kept_users, kept_items = set(users), set(items)

    def keep(pairs: tuple[tuple[str, str], ...]) -> list[tuple[str, str]]:
        return [(user_id, item_id) for user_id, item_id in pairs if user_id in kept_users and item_id in kept_items]

    logger.warning(
        "Dropping %d users and %d items without train interactions",
        len(dataset.users) - len(users),
        len(dataset.items) - len(items),
    )
    return InteractionDataset.build(users, items, train=dataset.train, val=keep(dataset.val), test=keep(dataset.test))


def build_norm_adj(dataset: InteractionDataset, *, drop_isolated: bool = True) -> NormalizedAdjacency:
    if not dataset.train:
        raise DataError("Train split is empty.")
    if drop_isolated:
        dataset = _drop_isolated(dataset)
    else:
        for user_id in dataset.users:
            if not dataset.user_neighbors[user_id]:
                raise DataError(f"User {user_id!r} has no train interactions.")
        for item_id in dataset.items:
            if not dataset.item_neighbors[item_id]:
                raise DataError(f"Item {item_id!r} has no train interactions.")

    user_index = {user_id: row for row, user_id in enumerate(dataset.users)}
    item_index = {item_id: row for row, item_id in enumerate(dataset.items)}
    offset = len(dataset.users)
    rows = np.array([user_index[user_id] for user_id, _ in dataset.train], dtype=np.int64)
    cols = np.array([offset + item_index[item_id] for _, item_id in dataset.train], dtype=np.int64)
    user_degree = np.array([len(dataset.user_neighbors[dataset.users[row]]) for row in rows], dtype=np.float64)
    item_degree = np.array(
        [len(dataset.item_neighbors[dataset.items[col - offset]]) for col in cols], dtype=np.float64
    )
    values = 1.0 / np.sqrt(user_degree * item_degree)
    size = offset + len(dataset.items)
    matrix = sp.coo_matrix(
        (np.concatenate([values, values]), (np.concatenate([rows, cols]), np.concatenate([cols, rows]))),
        shape=(size, size),
    ).tocsr()
    matrix.sort_indices()
    return NormalizedAdjacency(dataset.users, dataset.items, matrix, dataset)


def propagate(model: GraphCF, adjacency: NormalizedAdjacency) -> Propagated:
    return model.propagate(adjacency.tensor(model.user_embeddings.weight.dtype))


def cf_stores(propagated: Propagated, adjacency: NormalizedAdjacency) -> tuple[EmbeddingStore, EmbeddingStore]:
    users = propagated.users.detach().to(torch.float32).numpy()
    items = propagated.items.detach().to(torch.float32).numpy()
    return (
        EmbeddingStore(EntityKind.user, adjacency.user_ids, users),
        EmbeddingStore(EntityKind.item, adjacency.item_ids, items),
    )


@dataclass(slots=True)
class CFResult:
    model: GraphCF
    adjacency: NormalizedAdjacency
    best_epoch: int
    val_metrics: dict[str, float]
    test_metrics: dict[str, float] = field(default_factory=dict)
    losses: list[float] = field(default_factory=list)


def _text_tensor(store: EmbeddingStore, ids: tuple[str, ...], dtype: torch.dtype) -> Tensor:
    missing = [entity_id for entity_id in ids if entity_id not in store]
    if missing:
        raise DataError(f"Text embeddings missing for {store.kind.value} {missing[0]!r}.")
    return torch.from_numpy(store.rows(ids).astype(np.float64)).to(dtype)


def evaluate_cf(
    model: GraphCF, adjacency: NormalizedAdjacency, split: SplitName, cutoffs: list[int]
) -> dict[str, float]:
    with torch.no_grad():
        user_store, item_store = cf_stores(propagate(model, adjacency), adjacency)
    return evaluate_all_rank(user_store, item_store, adjacency.dataset, split, cutoffs, scoring="dot")


def train_cf(
    dataset: InteractionDataset,
    config: CFConfig,
    user_text: EmbeddingStore | None = None,
    item_text: EmbeddingStore | None = None,
    *,
    dtype: torch.dtype = torch.float32,
    show_progress: bool = False,
) -> CFResult:
    """BPR training of a graph backbone, optionally aligned with frozen text embeddings."""
    if (user_text is None) != (item_text is None):
        raise DataError("Text enhancement needs both user and item embeddings.")
    adjacency = build_norm_adj(dataset, drop_isolated=config.drop_isolated)
    graph_data = adjacency.dataset
    if not graph_data.val:
        raise DataError("The val split is empty.")
    _, selection_cutoff = parse_metric(config.selection_metric)
    cutoffs = sorted({*config.cutoffs, selection_cutoff})

    torch.manual_seed(config.seed)
    rng = np.random.default_rng(config.seed)
    text_dim = user_text.dim if user_text is not None else None
    model = GraphCF(len(adjacency.user_ids), len(adjacency.item_ids), config, text_dim).to(dtype)
    adjacency_tensor = adjacency.tensor(dtype)
    user_text_rows = _text_tensor(user_text, adjacency.user_ids, dtype) if user_text is not None else None
    item_text_rows = _text_tensor(item_text, adjacency.item_ids, dtype) if item_text is not None else None
    align = model.enhanced and config.alignment_weight > 0

    user_index = {user_id: row for row, user_id in enumerate(adjacency.user_ids)}
    item_index = {item_id: row for row, item_id in enumerate(adjacency.item_ids)}
    pairs = np.array([(user_index[u], item_index[i]) for u, i in graph_data.train], dtype=np.int64)
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate, betas=(0.9, 0.999), eps=1e-8)

    best_state = {name: tensor.detach().clone() for name, tensor in model.state_dict().items()}
    result = CFResult(model, adjacency, best_epoch=0, val_metrics=evaluate_cf(model, adjacency, SplitName.val, cutoffs))
    logger.info(
        "Training %s for %d epochs (text alignment %s)",
        config.backbone.value,
        config.epochs,
        f"weight {config.alignment_weight}" if align else "off",
    )
    for epoch in tqdm(range(1, config.epochs + 1), disable=not show_progress, desc=config.backbone.value):
        order = rng.permutation(len(pairs))
        epoch_loss = 0.0
        for start in range(0, len(order), config.batch_size):
            chunk = pairs[order[start : start + config.batch_size]]
            negatives = np.array(
                [item_index[sample_negative(graph_data, adjacency.user_ids[row], rng)] for row in chunk[:, 0]],
                dtype=np.int64,
            )
            users_t = torch.from_numpy(chunk[:, 0])
            positives_t = torch.from_numpy(chunk[:, 1])
            negatives_t = torch.from_numpy(negatives)

            optimizer.zero_grad(set_to_none=True)
            final = model.propagate(adjacency_tensor)
            loss = dot_bpr_loss(final.users[users_t], final.items[positives_t], final.items[negatives_t])
            if align:
                batch_users = torch.from_numpy(np.unique(chunk[:, 0]))
                batch_items = torch.from_numpy(np.unique(chunk[:, 1]))
                loss = loss + config.alignment_weight * (
                    alignment_loss(
                        final.users[batch_users],
                        user_text_rows[batch_users],
                        model.text_projection,
                        config.alignment_temperature,
                    )
                    + alignment_loss(
                        final.items[batch_items],
                        item_text_rows[batch_items],
                        model.text_projection,
                        config.alignment_temperature,
                    )
                )
            if not bool(torch.isfinite(loss)):
                model.load_state_dict(best_state)
                raise TrainingAborted(f"Non-finite loss in epoch {epoch}.", result=result)
            loss.backward()
            optimizer.step()
            epoch_loss += float(loss) * len(chunk)
        result.losses.append(epoch_loss / len(pairs))

        metrics = evaluate_cf(model, adjacency, SplitName.val, cutoffs)
        logger.debug("Epoch %d loss=%.5f val=%s", epoch, result.losses[-1], metrics)
        if metrics[config.selection_metric] > result.val_metrics[config.selection_metric]:
            best_state = {name: tensor.detach().clone() for name, tensor in model.state_dict().items()}
            result.best_epoch = epoch
            result.val_metrics = metrics

    model.load_state_dict(best_state)
    if graph_data.test:
        result.test_metrics = evaluate_cf(model, adjacency, SplitName.test, cutoffs)
    logger.info(
        "Best %s=%.4f at epoch %d",
        config.selection_metric,
        result.val_metrics[config.selection_metric],
        result.best_epoch,
    )
    return result
