"""Placeholder-substituted training data generation.

Training a parser that must understand placeholder tokens requires seeing
them in context: each gold slot span is independently replaced by its
placeholder with probability ``substitution_prob``, collapsing the span's
labels to a single Begin tag on the placeholder. Utterances where nothing
was replaced are dropped (they would duplicate the source corpus). The
parser is then trained on the concatenation of the original and the
substituted corpora.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from iterdelex.corpus import Dataset, SlotLabel, Utterance, bio_spans
from iterdelex.gazetteer import TokenTable


@dataclass(frozen=True)
class AugmentConfig:
    substitution_prob: float
    rng_seed: int
    token_table: TokenTable

    def __post_init__(self) -> None:
        if not 0.0 < self.substitution_prob < 1.0:
            raise ValueError(
                f"substitution probability must be in (0, 1), got {self.substitution_prob}"
            )


@dataclass(frozen=True)
class AugmentStats:
    total_spans: int
    replaced_spans: int

    @property
    def replaced_fraction(self) -> float:
        return self.replaced_spans / self.total_spans if self.total_spans else 0.0


def delexicalize_utterance(
    utt: Utterance, token_table: TokenTable, replace_span: list[bool] | None = None
) -> tuple[Utterance, int, int]:
    """Replace gold spans by placeholders; returns (utterance, spans, replaced).

    ``replace_span`` selects which spans to replace, in span order; ``None``
    replaces all of them.
    """
    if utt.gold_labels is None:
        raise ValueError("delexicalization requires gold labels")
    spans = bio_spans(utt.gold_labels)
    tokens: list[str] = []
    labels: list[SlotLabel] = []
    pos = 0
    replaced = 0
    for idx, (start, end, slot) in enumerate(spans):
        tokens.extend(utt.tokens[pos:start])
        labels.extend(utt.gold_labels[pos:start])
        take = replace_span[idx] if replace_span is not None else True
        if take:
            tokens.append(token_table.surface_for(slot))
            labels.append(SlotLabel.begin(slot))
            replaced += 1
        else:
            tokens.extend(utt.tokens[start:end])
            labels.extend(utt.gold_labels[start:end])
        pos = end
    tokens.extend(utt.tokens[pos:])
    labels.extend(utt.gold_labels[pos:])
    out = Utterance(tuple(tokens), tuple(labels), utt.gold_intent)
    return out, len(spans), replaced


def delexicalize_training(train: Dataset, cfg: AugmentConfig) -> tuple[Dataset, AugmentStats]:
    """Produce the placeholder-substituted copy of ``train``.

    Each utterance draws from its own seed-derived random stream, so the
    result is deterministic for a fixed ``rng_seed`` and independent of
    processing order.
    """
    out: list[Utterance] = []
    total = 0
    replaced_total = 0
    for i, utt in enumerate(train):
        if utt.gold_labels is None:
            raise ValueError("delexicalization requires gold labels")
        rng = random.Random(f"{cfg.rng_seed}:{i}")
        spans = bio_spans(utt.gold_labels)
        total += len(spans)
        if not spans:
            continue
        choices = [rng.random() < cfg.substitution_prob for _ in spans]
        delexed, _, replaced = delexicalize_utterance(utt, cfg.token_table, choices)
        replaced_total += replaced
        if replaced:
            out.append(delexed)
    return Dataset.from_utterances(out), AugmentStats(total, replaced_total)


def combine(train: Dataset, delexed: Dataset) -> Dataset:
    """Concatenate the original and substituted corpora.

    The label inventory is the union of both; the intent inventory must not
    grow (substitution never invents intents).
    """
    extra_intents = set(delexed.intent_set) - set(train.intent_set)
    if extra_intents:
        raise ValueError(f"substituted corpus introduces new intents: {sorted(extra_intents)}")
    labels = tuple(sorted(set(train.label_set) | set(delexed.label_set)))
    return Dataset(
        utterances=train.utterances + delexed.utterances,
        label_set=labels,
        intent_set=train.intent_set,
    )
