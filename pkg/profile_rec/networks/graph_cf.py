from __future__ import annotations

from typing import NamedTuple

import torch
from torch import Tensor, nn

from profile_rec.errors import UsageError
from profile_rec.models import BackboneKind, CFConfig


class Propagated(NamedTuple):
    users: Tensor
    items: Tensor


class GraphCF(nn.Module):
    """ID-embedding backbone propagated over the normalized bipartite graph.

    Node order in the adjacency is all users followed by all items.
    """

    def __init__(self, num_users: int, num_items: int, config: CFConfig, text_dim: int | None = None) -> None:
        super().__init__()
        self.config = config
        self.num_users = num_users
        self.num_items = num_items
        self.user_embeddings = nn.Embedding(num_users, config.dim)
        self.item_embeddings = nn.Embedding(num_items, config.dim)
        nn.init.normal_(self.user_embeddings.weight, std=0.1)
        nn.init.normal_(self.item_embeddings.weight, std=0.1)
        self.layer_projection = (
            nn.Linear(config.dim * (config.layers + 1), config.dim, bias=False)
            if config.backbone is BackboneKind.gccf
            else None
        )
        # created last so enabling text alignment leaves the backbone init untouched
        self.text_projection = nn.Linear(text_dim, config.dim) if text_dim is not None else None

    @property
    def enhanced(self) -> bool:
        return self.text_projection is not None

    def propagate(self, adjacency: Tensor) -> Propagated:
        return propagate_tables(
            self.user_embeddings.weight,
            self.item_embeddings.weight,
            adjacency,
            self.config.layers,
            self.config.backbone,
            self.layer_projection,
        )


def propagate_tables(
    user_table: Tensor,
    item_table: Tensor,
    adjacency: Tensor,
    layers: int,
    backbone: BackboneKind,
    layer_projection: nn.Module | None = None,
) -> Propagated:
    ego = torch.cat([user_table, item_table], dim=0)
    outputs = [ego]
    for _ in range(layers):
        ego = torch.sparse.mm(adjacency, ego) if adjacency.is_sparse else adjacency @ ego
        outputs.append(ego)
    if backbone is BackboneKind.lightgcn:
        final = torch.stack(outputs, dim=0).mean(dim=0)
    else:
        if layer_projection is None:
            raise UsageError("GCCF propagation needs a layer projection.")
        final = layer_projection(torch.cat(outputs, dim=1))
    return Propagated(final[: user_table.shape[0]], final[user_table.shape[0] :])
