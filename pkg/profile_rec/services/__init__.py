from profile_rec.services.evaluation import (
    evaluate_all_rank,
    evaluate_multi_profile,
    ndcg_at_k,
    recall_at_k,
)
from profile_rec.services.graph_cf import (
    CFResult,
    NormalizedAdjacency,
    build_norm_adj,
    propagate,
    train_cf,
)
from profile_rec.services.losses import alignment_loss, bpr_loss, contrastive_loss, mlm_loss
from profile_rec.services.llm_client import (
    HttpChatClient,
    TranscriptChatClient,
    build_client,
    request_hash,
)
from profile_rec.services.preprocessing import (
    dedupe_interactions,
    filter_ratings,
    kcore_filter,
    split_interactions,
)
from profile_rec.services.profiles import ProfileDiversifier, ProfileGenerator
from profile_rec.services.prompts import parse_revision, render_prompt, render_user_gen_input
from profile_rec.services.reports import demo_shift, report_scaling
from profile_rec.services.retrieval import embed_entities, recommend, score
from profile_rec.services.synthetic import generate
from profile_rec.services.tokenizer import ProfileTokenizer, build_vocab, tokenize
from profile_rec.services.training import (
    Trainer,
    TrainingResult,
    mlm_mask,
    sample_batch,
    sample_profile,
    train,
)
