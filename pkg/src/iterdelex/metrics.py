"""Exact-span slot F1 and intent accuracy.

A predicted span counts only when start, end, and slot type all match a
gold span. Precision, recall, and F1 use 0.0 whenever a denominator is
empty, so an absent category scores zero rather than raising.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from iterdelex.corpus import Dataset, bio_spans


def _prf(matched: int, predicted: int, gold: int) -> tuple[float, float, float]:
    precision = matched / predicted if predicted else 0.0
    recall = matched / gold if gold else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


@dataclass(frozen=True)
class SlotScore:
    precision: float
    recall: float
    f1: float
    gold_count: int
    predicted_count: int
    matched: int


@dataclass(frozen=True)
class EvalReport:
    slot_precision: float
    slot_recall: float
    slot_f1: float
    per_slot: Mapping[str, SlotScore]
    intent_accuracy: Optional[float]
    intent_correct: int
    utterance_count: int

    def format(self, categories: Optional[Sequence[str]] = None) -> str:
        rows = sorted(self.per_slot) if categories is None else list(categories)
        width = max([len("overall (micro)")] + [len(r) for r in rows])
        lines = [
            f"{'slot':<{width}}  {'precision':>9}  {'recall':>9}  "
            f"{'f1':>9}  {'gold':>6}  {'pred':>6}"
        ]
        for name in rows:
            s = self.per_slot.get(name, SlotScore(0.0, 0.0, 0.0, 0, 0, 0))
            lines.append(
                f"{name:<{width}}  {s.precision:>9.4f}  {s.recall:>9.4f}  "
                f"{s.f1:>9.4f}  {s.gold_count:>6}  {s.predicted_count:>6}"
            )
        lines.append(
            f"{'overall (micro)':<{width}}  {self.slot_precision:>9.4f}  "
            f"{self.slot_recall:>9.4f}  {self.slot_f1:>9.4f}"
        )
        if self.intent_accuracy is not None:
            lines.append(
                f"intent accuracy {self.intent_accuracy:.4f} "
                f"({self.intent_correct}/{self.utterance_count})"
            )
        lines.append(f"utterances {self.utterance_count}")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "slot_precision": self.slot_precision,
            "slot_recall": self.slot_recall,
            "slot_f1": self.slot_f1,
            "per_slot": {
                name: {
                    "precision": s.precision,
                    "recall": s.recall,
                    "f1": s.f1,
                    "gold": s.gold_count,
                    "predicted": s.predicted_count,
                }
                for name, s in sorted(self.per_slot.items())
            },
            "intent_accuracy": self.intent_accuracy,
            "utterances": self.utterance_count,
        }


def evaluate(gold: Dataset, predicted: Dataset) -> EvalReport:
    """Score predictions against gold; both sides must contain the same
    utterances (same tokens, same order) with slot labels."""
    if len(gold) != len(predicted):
        raise ValueError(
            f"gold has {len(gold)} utterances but predictions have {len(predicted)}"
        )
    matched: dict[str, int] = {}
    gold_counts: dict[str, int] = {}
    pred_counts: dict[str, int] = {}
    intent_scored = 0
    intent_correct = 0
    for i, (g, p) in enumerate(zip(gold, predicted)):
        if g.tokens != p.tokens:
            raise ValueError(f"utterance {i}: token mismatch between gold and predictions")
        if g.gold_labels is None or p.gold_labels is None:
            raise ValueError(f"utterance {i}: both sides need slot labels")
        gold_spans = set(bio_spans(g.gold_labels))
        pred_spans = set(bio_spans(p.gold_labels))
        for _, _, slot in gold_spans:
            gold_counts[slot] = gold_counts.get(slot, 0) + 1
        for _, _, slot in pred_spans:
            pred_counts[slot] = pred_counts.get(slot, 0) + 1
        for _, _, slot in gold_spans & pred_spans:
            matched[slot] = matched.get(slot, 0) + 1
        if g.gold_intent is not None and p.gold_intent is not None:
            intent_scored += 1
            intent_correct += int(g.gold_intent == p.gold_intent)

    per_slot = {}
    for slot in sorted(set(gold_counts) | set(pred_counts)):
        m = matched.get(slot, 0)
        pc = pred_counts.get(slot, 0)
        gc = gold_counts.get(slot, 0)
        precision, recall, f1 = _prf(m, pc, gc)
        per_slot[slot] = SlotScore(precision, recall, f1, gc, pc, m)

    total_m = sum(matched.values())
    total_p = sum(pred_counts.values())
    total_g = sum(gold_counts.values())
    precision, recall, f1 = _prf(total_m, total_p, total_g)
    accuracy = intent_correct / intent_scored if intent_scored == len(gold) and len(gold) else None
    return EvalReport(
        slot_precision=precision,
        slot_recall=recall,
        slot_f1=f1,
        per_slot=per_slot,
        intent_accuracy=accuracy,
        intent_correct=intent_correct,
        utterance_count=len(gold),
    )
