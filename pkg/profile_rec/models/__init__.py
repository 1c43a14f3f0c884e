from .cf import BackboneKind, CFConfig
from .corpus import (
    Corpus,
    EntityKind,
    Interaction,
    InteractionDataset,
    Pair,
    ProfileSet,
    RawItemRecord,
    SplitName,
)
from .encoder import EncoderConfig, EncoderPreset, NormStyle, PRESETS
from .llm import (
    ChatMessage,
    LlmClientConfig,
    ProgressEntry,
    PromptTemplate,
    TemplateId,
    TranscriptEntry,
)
from .metrics import MetricsReport, metric_key
from .retrieval import EmbeddingStore, RankedList, ScoredItem
from .run import EncoderSection, RunConfig, RunSummary
from .synthetic import SyntheticSpec
from .tokens import (
    CLS_ID,
    MASK_ID,
    PAD_ID,
    RESERVED_TOKENS,
    UNK_ID,
    MaskedSequence,
    TokenSequence,
    Vocab,
)
from .training import Objective, TrainConfig, TrainingBatchReport, ValidationRecord
