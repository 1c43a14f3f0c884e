from profile_rec.networks.encoder import (
    TextEncoder,
    attention,
    backward,
    count_parameters,
    encode,
    init_params,
    record_forward,
)
from profile_rec.networks.graph_cf import GraphCF, propagate_tables
