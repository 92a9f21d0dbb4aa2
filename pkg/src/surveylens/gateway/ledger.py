"""Token usage ledger and exact-decimal cost reporting."""

from __future__ import annotations

import csv
import threading
from dataclasses import dataclass
from decimal import ROUND_HALF_EVEN, Decimal
from pathlib import Path
from typing import Iterable, Mapping, Sequence

_CENT4 = Decimal("0.0001")


class MissingPricingError(KeyError):
    def __init__(self, model_id: str) -> None:
        super().__init__(model_id)
        self.model_id = model_id

    def __str__(self) -> str:
        return f"no pricing configured for model {self.model_id!r}"


@dataclass(frozen=True)
class UsageEntry:
    task_kind: str
    model_id: str
    prompt_tokens: int
    completion_tokens: int

    def __post_init__(self) -> None:
        if self.prompt_tokens < 0 or self.completion_tokens < 0:
            raise ValueError("token counts must be >= 0")


@dataclass(frozen=True)
class ModelPricing:
    """Price per 1000 tokens, kept as exact decimals."""

    prompt_per_1k: Decimal
    completion_per_1k: Decimal

    @classmethod
    def of(cls, prompt_per_1k: str | float | Decimal, completion_per_1k: str | float | Decimal) -> "ModelPricing":
        return cls(Decimal(str(prompt_per_1k)), Decimal(str(completion_per_1k)))


class UsageLedger:
    """Thread-safe append-only record of per-call token usage."""

    def __init__(self, pricing: Mapping[str, ModelPricing] | None = None) -> None:
        self._entries: list[UsageEntry] = []
        self._pricing: dict[str, ModelPricing] = dict(pricing or {})
        self._lock = threading.Lock()

    def record(self, task_kind: str, model_id: str, prompt_tokens: int, completion_tokens: int) -> None:
        entry = UsageEntry(task_kind, model_id, prompt_tokens, completion_tokens)
        with self._lock:
            self._entries.append(entry)

    def set_pricing(self, model_id: str, prompt_per_1k, completion_per_1k) -> None:
        with self._lock:
            self._pricing[model_id] = ModelPricing.of(prompt_per_1k, completion_per_1k)

    @property
    def entries(self) -> tuple[UsageEntry, ...]:
        with self._lock:
            return tuple(self._entries)

    def pricing_for(self, model_id: str) -> ModelPricing:
        with self._lock:
            if model_id not in self._pricing:
                raise MissingPricingError(model_id)
            return self._pricing[model_id]

    def cost_of(self, entry: UsageEntry) -> Decimal:
        pricing = self.pricing_for(entry.model_id)
        return (
            pricing.prompt_per_1k * entry.prompt_tokens
            + pricing.completion_per_1k * entry.completion_tokens
        ) / Decimal(1000)

    def total_cost(self, entries: Iterable[UsageEntry] | None = None) -> Decimal:
        chosen = self.entries if entries is None else tuple(entries)
        return sum((self.cost_of(e) for e in chosen), Decimal(0))

    def export_csv(self, path: str | Path) -> None:
        path = Path(path)
        with path.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(["task_kind", "model_id", "prompt_tokens", "completion_tokens"])
            for entry in self.entries:
                writer.writerow(
                    [entry.task_kind, entry.model_id, entry.prompt_tokens, entry.completion_tokens]
                )

    @classmethod
    def import_csv(cls, path: str | Path, pricing: Mapping[str, ModelPricing] | None = None) -> "UsageLedger":
        ledger = cls(pricing)
        with Path(path).open(newline="", encoding="utf-8") as handle:
            reader = csv.DictReader(handle)
            expected = {"task_kind", "model_id", "prompt_tokens", "completion_tokens"}
            if reader.fieldnames is None or not expected.issubset(reader.fieldnames):
                raise ValueError(f"{path}: expected header columns {sorted(expected)}")
            for number, row in enumerate(reader, start=2):
                try:
                    ledger.record(
                        row["task_kind"],
                        row["model_id"],
                        int(row["prompt_tokens"]),
                        int(row["completion_tokens"]),
                    )
                except (TypeError, ValueError) as exc:
                    raise ValueError(f"{path}: row {number}: {exc}") from exc
        return ledger


@dataclass(frozen=True)
class CostRow:
    task_kind: str
    model_id: str
    calls: int
    prompt_tokens: int
    completion_tokens: int
    total_cost: Decimal
    cost_per_n: Decimal


def cost_report(ledger: UsageLedger, per_n: int = 100) -> list[CostRow]:
    """Aggregate the ledger per (task_kind, model_id), first-seen order.

    cost_per_n scales the group's total cost to `per_n` ledger entries
    (one entry per processed comment), rounded half-even to 4 places.
    """
    if per_n <= 0:
        raise ValueError("per_n must be >= 1")
    order: list[tuple[str, str]] = []
    groups: dict[tuple[str, str], list[UsageEntry]] = {}
    for entry in ledger.entries:
        key = (entry.task_kind, entry.model_id)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(entry)

    rows: list[CostRow] = []
    for task_kind, model_id in order:
        entries = groups[(task_kind, model_id)]
        total = ledger.total_cost(entries)
        per_n_cost = (total * per_n / len(entries)).quantize(_CENT4, rounding=ROUND_HALF_EVEN)
        rows.append(
            CostRow(
                task_kind=task_kind,
                model_id=model_id,
                calls=len(entries),
                prompt_tokens=sum(e.prompt_tokens for e in entries),
                completion_tokens=sum(e.completion_tokens for e in entries),
                total_cost=total.quantize(_CENT4, rounding=ROUND_HALF_EVEN),
                cost_per_n=per_n_cost,
            )
        )
    return rows


def write_cost_report_csv(rows: Sequence[CostRow], path: str | Path, per_n: int = 100) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            ["task_kind", "model_id", "calls", "prompt_tokens", "completion_tokens",
             "total_cost", f"cost_per_{per_n}"]
        )
        for row in rows:
            writer.writerow(
                [row.task_kind, row.model_id, row.calls, row.prompt_tokens,
                 row.completion_tokens, f"{row.total_cost}", f"{row.cost_per_n}"]
            )
