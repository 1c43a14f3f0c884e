from __future__ import annotations

from pydantic import BaseModel, Field

from profile_rec.errors import DataError


def metric_key(name: str, cutoff: int) -> str:
    return f"{name}@{cutoff}"


class MetricsReport(BaseModel):
    rounds: list[dict[str, float]]
    mean: dict[str, float] = Field(default_factory=dict)

    @classmethod
    def from_rounds(cls, rounds: list[dict[str, float]]) -> MetricsReport:
        keys = list(rounds[0]) if rounds else []
        for entry in rounds:
            if list(entry) != keys:
                raise DataError("Metric keys differ between rounds.")
        mean = {key: sum(entry[key] for entry in rounds) / len(rounds) for key in keys}
        return cls(rounds=rounds, mean=mean)

    @property
    def cutoffs(self) -> list[int]:
        return sorted({int(key.split("@", 1)[1]) for key in self.mean})
