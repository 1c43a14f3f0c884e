from __future__ import annotations

import logging
import math
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np
import torch
from torch import Tensor
from tqdm import tqdm

from profile_rec.errors import DataError, TrainingAborted, UsageError
from profile_rec.models import (
    MASK_ID,
    RESERVED_TOKENS,
    Corpus,
    EncoderConfig,
    EntityKind,
    InteractionDataset,
    MaskedSequence,
    Objective,
    ProfileSet,
    SplitName,
    TokenSequence,
    TrainConfig,
    TrainingBatchReport,
    ValidationRecord,
    Vocab,
)
from profile_rec.networks.encoder import TextEncoder, collate, init_params, record_forward
from profile_rec.services.evaluation import evaluate_all_rank, parse_metric
from profile_rec.services.losses import bpr_loss, contrastive_loss, mlm_loss
from profile_rec.services.retrieval import embed_entities
from profile_rec.services.tokenizer import ProfileTokenizer

logger = logging.getLogger(__name__)

VALIDATION_CUTOFFS = (10, 20)
NEGATIVE_RETRIES = 32


def mlm_mask(
    sequence: TokenSequence,
    ratio: float,
    seed: int | np.random.Generator,
    *,
    vocab_size: int,
    mask_only: bool = False,
) -> MaskedSequence:
    """Select word-token positions with probability ``ratio`` and corrupt them.

    Selected positions become [MASK] 80% of the time, a random word token 10%
    and stay unchanged 10%, unless ``mask_only`` forces [MASK] everywhere.
    """
    if not 0.0 <= ratio < 1.0:
        raise UsageError("Mask ratio must be in [0, 1).")
    rng = np.random.default_rng(seed)
    ids = np.array(sequence.ids, dtype=np.int64)
    candidates = np.arange(1, sequence.true_len)
    candidates = candidates[ids[candidates] >= len(RESERVED_TOKENS)]
    selected = candidates[rng.random(candidates.size) < ratio]
    labels = ids[selected].copy()
    if mask_only:
        ids[selected] = MASK_ID
    else:
        rolls = rng.random(selected.size)
        first_word = len(RESERVED_TOKENS)
        if vocab_size > first_word:
            random_ids = rng.integers(first_word, vocab_size, size=selected.size)
        else:
            random_ids = np.full(selected.size, MASK_ID)
        ids[selected[rolls < 0.8]] = MASK_ID
        swap = (rolls >= 0.8) & (rolls < 0.9)
        ids[selected[swap]] = random_ids[swap]
    masked = TokenSequence(
        ids=tuple(int(token) for token in ids),
        attention_mask=sequence.attention_mask,
        true_len=sequence.true_len,
    )
    return MaskedSequence(
        masked,
        label_positions=tuple(int(position) for position in selected),
        labels=tuple(int(label) for label in labels),
    )


def sample_profile(profile_set: ProfileSet, rng: np.random.Generator) -> str:
    return profile_set.profiles[int(rng.integers(len(profile_set.profiles)))]


def sample_negative(
    dataset: InteractionDataset,
    user_id: str,
    rng: np.random.Generator,
    *,
    max_retries: int = NEGATIVE_RETRIES,
) -> str:
    owned = dataset.user_neighbors[user_id]
    for _ in range(max_retries):
        candidate = dataset.items[int(rng.integers(len(dataset.items)))]
        if candidate not in owned:
            return candidate
    remaining = [item_id for item_id in dataset.items if item_id not in owned]
    if not remaining:
        raise DataError(f"User {user_id!r} interacts with every item; no negative to sample.")
    return remaining[int(rng.integers(len(remaining)))]


@dataclass(frozen=True, slots=True)
class Triplet:
    corpus: str
    user_id: str
    positive_id: str
    negative_id: str


@dataclass(slots=True)
class TrainingBatch:
    triplets: list[Triplet] = field(default_factory=list)
    users: list[TokenSequence] = field(default_factory=list)
    positives: list[TokenSequence] = field(default_factory=list)
    negatives: list[TokenSequence] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.triplets)

    @property
    def sequences(self) -> list[TokenSequence]:
        return self.users + self.positives + self.negatives


def _profiles_of(profiles: Mapping[str, ProfileSet], entity_id: str, kind: EntityKind) -> ProfileSet:
    profile_set = profiles.get(entity_id)
    if profile_set is None:
        raise DataError(f"No profiles for {kind.value} {entity_id!r}.")
    return profile_set


def sample_batch(
    corpora: Sequence[Corpus],
    tokenizer: ProfileTokenizer,
    batch_size: int,
    rng: np.random.Generator,
    *,
    objective: Objective = Objective.contrastive_paper,
) -> TrainingBatch:
    """Draw train pairs uniformly over every corpus and attach one negative each."""
    if objective.is_contrastive and batch_size < 2:
        raise UsageError("Contrastive objectives need a batch size of at least 2.")
    sizes = np.array([len(corpus.dataset.train) for corpus in corpora], dtype=np.int64)
    total = int(sizes.sum())
    if total == 0:
        raise DataError("Train split is empty.")
    ends = np.cumsum(sizes)
    batch = TrainingBatch()
    for draw in rng.integers(total, size=batch_size):
        index = int(np.searchsorted(ends, draw, side="right"))
        corpus = corpora[index]
        offset = int(draw - (ends[index] - sizes[index]))
        user_id, positive_id = corpus.dataset.train[offset]
        negative_id = sample_negative(corpus.dataset, user_id, rng)
        batch.triplets.append(Triplet(corpus.name, user_id, positive_id, negative_id))
        user_text = sample_profile(_profiles_of(corpus.user_profiles, user_id, EntityKind.user), rng)
        positive_text = sample_profile(_profiles_of(corpus.item_profiles, positive_id, EntityKind.item), rng)
        negative_text = sample_profile(_profiles_of(corpus.item_profiles, negative_id, EntityKind.item), rng)
        batch.users.append(tokenizer(user_text))
        batch.positives.append(tokenizer(positive_text))
        batch.negatives.append(tokenizer(negative_text))
    return batch


def restrict_augmentation(corpus: Corpus, augmentation_count: int | None) -> Corpus:
    if augmentation_count is None:
        return corpus
    return Corpus(
        name=corpus.name,
        records=corpus.records,
        item_profiles={key: value.truncated(augmentation_count) for key, value in corpus.item_profiles.items()},
        user_profiles={key: value.truncated(augmentation_count) for key, value in corpus.user_profiles.items()},
        dataset=corpus.dataset,
    )


def validation_cutoffs(selection_metric: str) -> list[int]:
    _, cutoff = parse_metric(selection_metric)
    return sorted({*VALIDATION_CUTOFFS, cutoff})


def validate(
    encoder: TextEncoder,
    tokenizer: ProfileTokenizer,
    corpora: Sequence[Corpus],
    cutoffs: Sequence[int],
    split: SplitName = SplitName.val,
) -> dict[str, float]:
    """Mean over corpora of all-rank metrics computed on original profiles."""
    per_corpus: list[dict[str, float]] = []
    for corpus in corpora:
        if not corpus.dataset.split(split):
            continue
        user_store = embed_entities(
            encoder, tokenizer, corpus.user_profiles, 0, EntityKind.user, entity_ids=corpus.dataset.users
        )
        item_store = embed_entities(
            encoder, tokenizer, corpus.item_profiles, 0, EntityKind.item, entity_ids=corpus.dataset.items
        )
        per_corpus.append(evaluate_all_rank(user_store, item_store, corpus.dataset, split, cutoffs))
    if not per_corpus:
        raise DataError(f"The {split.value} split is empty.")
    return {key: sum(metrics[key] for metrics in per_corpus) / len(per_corpus) for key in per_corpus[0]}


@dataclass(slots=True)
class TrainingResult:
    encoder: TextEncoder
    best_step: int
    best_metrics: dict[str, float]
    reports: list[TrainingBatchReport] = field(default_factory=list)
    validations: list[ValidationRecord] = field(default_factory=list)
    aborted: bool = False


def _snapshot(encoder: TextEncoder) -> dict[str, Tensor]:
    return {name: tensor.detach().clone() for name, tensor in encoder.state_dict().items()}


class Trainer:
    """Single-owner training loop for the text encoder."""

    def __init__(
        self,
        config: TrainConfig,
        encoder_config: EncoderConfig,
        vocab: Vocab,
        *,
        dtype: torch.dtype = torch.float32,
        show_progress: bool = False,
        on_report: Callable[[TrainingBatchReport], None] | None = None,
        on_validation: Callable[[ValidationRecord], None] | None = None,
    ) -> None:
        if vocab.size != encoder_config.vocab_size:
            raise UsageError(
                f"Vocabulary size {vocab.size} does not match encoder vocab_size {encoder_config.vocab_size}."
            )
        self.config = config
        self.encoder_config = encoder_config
        self.tokenizer = ProfileTokenizer(vocab, encoder_config.max_len)
        self.cutoffs = validation_cutoffs(config.selection_metric)
        self.dtype = dtype
        self.show_progress = show_progress
        self.on_report = on_report
        self.on_validation = on_validation

    def total_steps(self, corpora: Sequence[Corpus]) -> int:
        pairs = sum(len(corpus.dataset.train) for corpus in corpora)
        steps = self.config.epochs * max(1, math.ceil(pairs / self.config.batch_size))
        if self.config.max_steps is not None:
            steps = min(steps, self.config.max_steps)
        return steps

    def _masked_batch(
        self, sequences: Sequence[TokenSequence], rng: np.random.Generator
    ) -> tuple[list[TokenSequence], Tensor, Tensor]:
        masked = [
            mlm_mask(
                sequence,
                self.config.mask_ratio,
                rng,
                vocab_size=self.encoder_config.vocab_size,
                mask_only=self.config.mask_only,
            )
            for sequence in sequences
        ]
        positions = [(row, position) for row, entry in enumerate(masked) for position in entry.label_positions]
        labels = [label for entry in masked for label in entry.labels]
        return (
            [entry.sequence for entry in masked],
            torch.tensor(positions, dtype=torch.long).reshape(-1, 2),
            torch.tensor(labels, dtype=torch.long),
        )

    def compute_losses(
        self, encoder: TextEncoder, batch: TrainingBatch, rng: np.random.Generator
    ) -> tuple[Tensor, Tensor, Tensor]:
        """Return (total, contrastive-or-bpr, mlm) losses for one batch."""
        size = len(batch)
        embeddings = record_forward(encoder, batch.sequences).output.embeddings
        users, positives, negatives = embeddings[:size], embeddings[size : 2 * size], embeddings[2 * size :]
        if self.config.objective.is_contrastive:
            loss_con = contrastive_loss(users, positives, negatives, self.config.temperature, self.config.objective)
        else:
            loss_con = bpr_loss(users, positives, negatives, self.config.temperature)

        if self.config.mlm_weight > 0 and self.config.mask_ratio > 0:
            masked, positions, labels = self._masked_batch(batch.sequences, rng)
            ids, mask = collate(masked, self.encoder_config.max_len)
            token_states = encoder(ids, mask).token_states
            loss_mlm = mlm_loss(token_states, positions, labels, encoder.mlm_logits)
        else:
            loss_mlm = torch.zeros((), dtype=loss_con.dtype)
        return loss_con + self.config.mlm_weight * loss_mlm, loss_con, loss_mlm

    def train(self, corpora: Sequence[Corpus]) -> TrainingResult:
        if not corpora:
            raise UsageError("At least one corpus is required for training.")
        corpora = [restrict_augmentation(corpus, self.config.augmentation_count) for corpus in corpora]
        torch.manual_seed(self.config.seed)
        rng = np.random.default_rng(self.config.seed)
        encoder = init_params(self.encoder_config, self.config.seed, dtype=self.dtype)
        optimizer = torch.optim.Adam(
            encoder.parameters(), lr=self.config.learning_rate, betas=(0.9, 0.999), eps=1e-8
        )
        selection_key = self.config.selection_metric
        total_steps = self.total_steps(corpora)
        logger.info(
            "Training %d steps: objective=%s temperature=%s mlm_weight=%s lr=%s batch_size=%d",
            total_steps,
            self.config.objective.value,
            self.config.temperature,
            self.config.mlm_weight,
            self.config.learning_rate,
            self.config.batch_size,
        )

        metrics = validate(encoder, self.tokenizer, corpora, self.cutoffs)
        result = TrainingResult(encoder=encoder, best_step=0, best_metrics=metrics)
        best_state = _snapshot(encoder)
        self._record_validation(result, ValidationRecord(step=0, metrics=metrics, selected=True))

        progress = tqdm(total=total_steps, disable=not self.show_progress, desc="train", unit="step")
        try:
            for step in range(1, total_steps + 1):
                batch = sample_batch(
                    corpora, self.tokenizer, self.config.batch_size, rng, objective=self.config.objective
                )
                optimizer.zero_grad(set_to_none=True)
                loss, loss_con, loss_mlm = self.compute_losses(encoder, batch, rng)
                if not bool(torch.isfinite(loss)):
                    encoder.load_state_dict(best_state)
                    result.aborted = True
                    raise TrainingAborted(f"Non-finite loss at step {step}.", result=result)
                loss.backward()
                grad_norm = torch.nn.utils.clip_grad_norm_(
                    encoder.parameters(), self.config.grad_clip or float("inf")
                )
                optimizer.step()

                report = TrainingBatchReport(
                    step=step,
                    loss_con=float(loss_con),
                    loss_mlm=float(loss_mlm),
                    loss=float(loss),
                    grad_norm=float(grad_norm),
                )
                result.reports.append(report)
                if self.on_report is not None:
                    self.on_report(report)
                progress.update(1)
                progress.set_postfix(loss=f"{report.loss:.4f}")

                if step % self.config.eval_interval == 0 or step == total_steps:
                    metrics = validate(encoder, self.tokenizer, corpora, self.cutoffs)
                    improved = metrics[selection_key] > result.best_metrics[selection_key]
                    if improved:
                        best_state = _snapshot(encoder)
                        result.best_step = step
                        result.best_metrics = metrics
                    self._record_validation(result, ValidationRecord(step=step, metrics=metrics, selected=improved))
        finally:
            progress.close()

        encoder.load_state_dict(best_state)
        encoder.eval()
        logger.info("Best %s=%.4f at step %d", selection_key, result.best_metrics[selection_key], result.best_step)
        return result

    def _record_validation(self, result: TrainingResult, record: ValidationRecord) -> None:
        result.validations.append(record)
        logger.info("Validation at step %d: %s", record.step, record.metrics)
        if self.on_validation is not None:
            self.on_validation(record)


def train(
    config: TrainConfig,
    corpora: Sequence[Corpus],
    encoder_config: EncoderConfig,
    vocab: Vocab,
    **options,
) -> TrainingResult:
    return Trainer(config, encoder_config, vocab, **options).train(corpora)
