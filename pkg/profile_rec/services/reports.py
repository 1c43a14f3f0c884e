from __future__ import annotations

from collections import Counter
from collections.abc import Collection, Mapping, Sequence
from dataclasses import dataclass

from profile_rec.errors import DataError
from profile_rec.models import EmbeddingStore, RankedList, RunSummary
from profile_rec.networks.encoder import TextEncoder, encode
from profile_rec.services.retrieval import recommend_for_vector
from profile_rec.services.tokenizer import ProfileTokenizer

SCALING_COLUMNS = ("recall@10", "ndcg@10")


def report_scaling(summaries: Sequence[RunSummary]) -> list[list[str]]:
    """Rows of (preset, t, recall@10, ndcg@10) copied from each run's mean metrics."""
    if not summaries:
        raise DataError("No completed runs to report.")
    keys = set(summaries[0].metrics.mean)
    for summary in summaries[1:]:
        if set(summary.metrics.mean) != keys:
            raise DataError("Runs report different metric keys.")
    missing = [column for column in SCALING_COLUMNS if column not in keys]
    if missing:
        raise DataError(f"Runs do not report {missing[0]}.")
    rows = [["preset", "augmentation_count", *SCALING_COLUMNS]]
    for summary in summaries:
        rows.append(
            [
                summary.preset,
                str(summary.augmentation_count),
                *(repr(summary.metrics.mean[column]) for column in SCALING_COLUMNS),
            ]
        )
    return rows


def format_table(rows: Sequence[Sequence[str]]) -> str:
    return "".join("\t".join(row) + "\n" for row in rows)


@dataclass(frozen=True, slots=True)
class ShiftReport:
    before: RankedList
    after: RankedList
    overlap: tuple[str, ...]
    before_topic: str | None = None
    after_topic: str | None = None

    def as_dict(self) -> dict[str, object]:
        def ranked(entries: RankedList) -> list[dict[str, object]]:
            return [{"item_id": entry.item_id, "score": entry.score} for entry in entries.items]

        return {
            "before": ranked(self.before),
            "after": ranked(self.after),
            "overlap": list(self.overlap),
            "before_majority_topic": self.before_topic,
            "after_majority_topic": self.after_topic,
        }


def majority_topic(item_ids: Sequence[str], topics: Mapping[str, int | str]) -> str | None:
    labels = [str(topics[item_id]) for item_id in item_ids if item_id in topics]
    if not labels:
        return None
    counts = Counter(labels)
    best = max(counts.values())
    # ties resolve to the label seen first in rank order
    return next(label for label in labels if counts[label] == best)


def demo_shift(
    encoder: TextEncoder,
    tokenizer: ProfileTokenizer,
    before_profile: str,
    after_profile: str,
    item_store: EmbeddingStore,
    k: int,
    *,
    exclusions: Collection[str] = (),
    topics: Mapping[str, int | str] | None = None,
) -> ShiftReport:
    """Re-embed one user under two profile texts and compare the top-k lists."""
    vectors = encode(encoder, [tokenizer(before_profile), tokenizer(after_profile)])
    before = recommend_for_vector(vectors[0], k, item_store, exclusions, label="before")
    after = recommend_for_vector(vectors[1], k, item_store, exclusions, label="after")
    after_ids = set(after.item_ids)
    overlap = tuple(item_id for item_id in before.item_ids if item_id in after_ids)
    return ShiftReport(
        before=before,
        after=after,
        overlap=overlap,
        before_topic=majority_topic(before.item_ids, topics) if topics else None,
        after_topic=majority_topic(after.item_ids, topics) if topics else None,
    )
