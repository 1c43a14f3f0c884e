from __future__ import annotations

from pathlib import Path

from profile_rec.data_access.jsonl import append_rows, read_rows
from profile_rec.models import TrainingBatchReport, ValidationRecord

TRAINING_LOG_FILE = "training_log.jsonl"
VALIDATION_LOG_FILE = "validation_log.jsonl"


class TrainingLog:
    """Append-only JSON-lines sinks for per-step reports and validation records."""

    def __init__(self, run_dir: Path) -> None:
        self.reports_path = run_dir / TRAINING_LOG_FILE
        self.validations_path = run_dir / VALIDATION_LOG_FILE
        for path in (self.reports_path, self.validations_path):
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text("", encoding="utf-8")

    def report(self, report: TrainingBatchReport) -> None:
        append_rows(self.reports_path, [report])

    def validation(self, record: ValidationRecord) -> None:
        append_rows(self.validations_path, [record])


def read_reports(path: Path) -> list[TrainingBatchReport]:
    return read_rows(path, TrainingBatchReport)
