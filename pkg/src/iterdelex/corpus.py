"""Utterance/label data model and dataset I/O.

Two on-disk formats are supported:

* CoNLL-style: one ``token<TAB>label`` pair per line, a blank line ends an
  utterance, and an optional ``#intent=<name>`` line precedes each block.
* JSONL: one object per line with ``tokens`` (array of strings), plus
  optional ``labels`` (BIO strings) and ``intent``.

Labels use the BIO scheme. Loaders repair orphan Inside labels (an ``I-x``
not preceded by ``B-x``/``I-x`` of the same type) to Begin and report the
repair count through the module logger; gold data kept in memory is always
canonical BIO.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

log = logging.getLogger(__name__)

OUTSIDE = "O"
BEGIN = "B"
INSIDE = "I"


@dataclass(frozen=True, order=True)
class SlotLabel:
    """A single BIO tag: Outside, or Begin/Inside of a slot type."""

    kind: str  # "O", "B" or "I"
    slot_type: str = ""

    def __post_init__(self) -> None:
        if self.kind not in (OUTSIDE, BEGIN, INSIDE):
            raise ValueError(f"invalid label kind: {self.kind!r}")
        if self.kind == OUTSIDE and self.slot_type:
            raise ValueError("Outside label must not carry a slot type")
        if self.kind != OUTSIDE and not self.slot_type:
            raise ValueError(f"{self.kind}-label requires a slot type")

    @classmethod
    def outside(cls) -> SlotLabel:
        return cls(OUTSIDE)

    @classmethod
    def begin(cls, slot_type: str) -> SlotLabel:
        return cls(BEGIN, slot_type)

    @classmethod
    def inside(cls, slot_type: str) -> SlotLabel:
        return cls(INSIDE, slot_type)

    @classmethod
    def parse(cls, text: str) -> SlotLabel:
        """Parse ``"O"`` / ``"B-x"`` / ``"I-x"``."""
        if text == OUTSIDE:
            return cls(OUTSIDE)
        if len(text) > 2 and text[0] in (BEGIN, INSIDE) and text[1] == "-":
            return cls(text[0], text[2:])
        raise ValueError(f"invalid BIO label: {text!r}")

    def __str__(self) -> str:
        if self.kind == OUTSIDE:
            return OUTSIDE
        return f"{self.kind}-{self.slot_type}"

    @property
    def is_outside(self) -> bool:
        return self.kind == OUTSIDE


@dataclass(frozen=True)
class Utterance:
    """A token sequence with optional gold BIO labels and gold intent."""

    tokens: tuple[str, ...]
    gold_labels: Optional[tuple[SlotLabel, ...]] = None
    gold_intent: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.tokens:
            raise ValueError("utterance must contain at least one token")
        if self.gold_labels is not None and len(self.gold_labels) != len(self.tokens):
            raise ValueError(
                f"label count {len(self.gold_labels)} != token count {len(self.tokens)}"
            )

    @property
    def labeled(self) -> bool:
        return self.gold_labels is not None


@dataclass(frozen=True)
class Dataset:
    """Immutable collection of utterances plus the label/intent inventories."""

    utterances: tuple[Utterance, ...]
    label_set: tuple[SlotLabel, ...]
    intent_set: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.utterances)

    def __iter__(self):
        return iter(self.utterances)

    @classmethod
    def from_utterances(cls, utterances: Iterable[Utterance]) -> Dataset:
        """Build a Dataset, deriving sorted label and intent inventories."""
        utts = tuple(utterances)
        labels: set[SlotLabel] = {SlotLabel.outside()}
        intents: set[str] = set()
        for utt in utts:
            if utt.gold_labels:
                labels.update(utt.gold_labels)
            if utt.gold_intent is not None:
                intents.add(utt.gold_intent)
        return cls(utts, tuple(sorted(labels)), tuple(sorted(intents)))

    @property
    def slot_types(self) -> tuple[str, ...]:
        seen = sorted({lab.slot_type for lab in self.label_set if not lab.is_outside})
        return tuple(seen)


def is_valid_bio(labels: Sequence[SlotLabel]) -> bool:
    """True when every Inside follows a Begin/Inside of the same slot type."""
    prev: Optional[SlotLabel] = None
    for lab in labels:
        if lab.kind == INSIDE:
            if prev is None or prev.is_outside or prev.slot_type != lab.slot_type:
                return False
        prev = lab
    return True


def repair_bio(labels: Sequence[SlotLabel]) -> tuple[tuple[SlotLabel, ...], int]:
    """Turn orphan Inside labels into Begin; returns (labels, repair count)."""
    out: list[SlotLabel] = []
    repairs = 0
    for lab in labels:
        if lab.kind == INSIDE:
            prev = out[-1] if out else None
            if prev is None or prev.is_outside or prev.slot_type != lab.slot_type:
                lab = SlotLabel.begin(lab.slot_type)
                repairs += 1
        out.append(lab)
    return tuple(out), repairs


def bio_spans(labels: Sequence[SlotLabel]) -> list[tuple[int, int, str]]:
    """Extract (start, end, slot_type) spans, end exclusive, repairing orphans."""
    spans: list[tuple[int, int, str]] = []
    start = -1
    cur = ""
    for i, lab in enumerate(labels):
        if lab.kind == BEGIN or (lab.kind == INSIDE and (not cur or cur != lab.slot_type)):
            if cur:
                spans.append((start, i, cur))
            start, cur = i, lab.slot_type
        elif lab.is_outside:
            if cur:
                spans.append((start, i, cur))
            start, cur = -1, ""
        # else: Inside continuing the open span
    if cur:
        spans.append((start, len(labels), cur))
    return spans


@dataclass
class _LoaderState:
    lowercase: bool
    repairs: int = 0
    utterances: list[Utterance] = field(default_factory=list)

    def add(self, tokens: list[str], labels: Optional[list[SlotLabel]], intent: Optional[str]) -> None:
        if self.lowercase:
            tokens = [t.lower() for t in tokens]
        fixed: Optional[tuple[SlotLabel, ...]] = None
        if labels is not None:
            fixed, n = repair_bio(labels)
            self.repairs += n
        self.utterances.append(Utterance(tuple(tokens), fixed, intent))


def _load_conll(path: Path, state: _LoaderState) -> None:
    tokens: list[str] = []
    labels: list[SlotLabel] = []
    intent: Optional[str] = None
    with path.open("r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.rstrip("\n")
            if not line.strip():
                if tokens:
                    state.add(tokens, labels, intent)
                    tokens, labels, intent = [], [], None
                continue
            if line.startswith("#intent="):
                intent = line[len("#intent="):].strip()
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ValueError(
                    f"{path}:{lineno}: expected 'token<TAB>label', got {line!r}"
                )
            try:
                label = SlotLabel.parse(parts[1])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
            tokens.append(parts[0])
            labels.append(label)
    if tokens:
        state.add(tokens, labels, intent)


def _load_jsonl(path: Path, state: _LoaderState) -> None:
    with path.open("r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: invalid JSON: {exc.msg}") from exc
            if "tokens" not in record or not record["tokens"]:
                raise ValueError(f"{path}:{lineno}: record has no tokens")
            tokens = [str(t) for t in record["tokens"]]
            labels: Optional[list[SlotLabel]] = None
            if record.get("labels") is not None:
                raw_labels = record["labels"]
                if len(raw_labels) != len(tokens):
                    raise ValueError(
                        f"{path}:{lineno}: record {lineno} has {len(tokens)} tokens "
                        f"but {len(raw_labels)} labels"
                    )
                try:
                    labels = [SlotLabel.parse(str(s)) for s in raw_labels]
                except ValueError as exc:
                    raise ValueError(f"{path}:{lineno}: {exc}") from exc
            state.add(tokens, labels, record.get("intent"))


def load_dataset(path: str | Path, fmt: str = "auto", *, lowercase: bool = True) -> Dataset:
    """Load a Dataset from ``path`` in the given format ("conll" or "jsonl").

    ``fmt="auto"`` picks jsonl for ``.jsonl``/``.json`` suffixes, conll
    otherwise. Orphan Inside labels are repaired to Begin; the repair count
    is logged as a warning.
    """
    p = Path(path)
    if fmt == "auto":
        fmt = "jsonl" if p.suffix in (".jsonl", ".json") else "conll"
    if fmt not in ("conll", "jsonl"):
        raise ValueError(f"unknown dataset format: {fmt!r}")
    state = _LoaderState(lowercase=lowercase)
    if fmt == "conll":
        _load_conll(p, state)
    else:
        _load_jsonl(p, state)
    if not state.utterances:
        raise ValueError(f"{p}: no utterances")
    if state.repairs:
        log.warning("%s: repaired %d orphan Inside label(s)", p, state.repairs)
    return Dataset.from_utterances(state.utterances)


def save_dataset(dataset: Dataset, path: str | Path, fmt: str = "auto") -> None:
    """Write ``dataset`` to ``path``; round-trips exactly through load_dataset."""
    p = Path(path)
    if fmt == "auto":
        fmt = "jsonl" if p.suffix in (".jsonl", ".json") else "conll"
    if fmt == "conll":
        with p.open("w", encoding="utf-8") as f:
            for utt in dataset:
                if utt.gold_intent is not None:
                    f.write(f"#intent={utt.gold_intent}\n")
                labels = utt.gold_labels or tuple(SlotLabel.outside() for _ in utt.tokens)
                for tok, lab in zip(utt.tokens, labels):
                    f.write(f"{tok}\t{lab}\n")
                f.write("\n")
    elif fmt == "jsonl":
        with p.open("w", encoding="utf-8") as f:
            for utt in dataset:
                record: dict = {"tokens": list(utt.tokens)}
                if utt.gold_labels is not None:
                    record["labels"] = [str(lab) for lab in utt.gold_labels]
                if utt.gold_intent is not None:
                    record["intent"] = utt.gold_intent
                f.write(json.dumps(record) + "\n")
    else:
        raise ValueError(f"unknown dataset format: {fmt!r}")
