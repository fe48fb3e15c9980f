"""Phrase gazetteer and placeholder-token table built from labeled training data.

The gazetteer records three phrase inventories used by seed candidate
generation:

* ``slot_phrases`` — the gold slot spans per slot type,
* ``context_phrases`` — n-grams that occurred fully outside any slot
  (these must never be matched as slot values),
* ``ambiguous_phrases`` — phrases attested under two or more slot types
  that do not share a placeholder group (matching them would guess).

The placeholder table assigns one surface per slot type, except that slot
types declared in the same shared group (e.g. two city-typed slots) map to
a single shared surface.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

from iterdelex.corpus import Dataset, bio_spans

log = logging.getLogger(__name__)

Phrase = tuple[str, ...]

DEFAULT_CONTEXT_NGRAM_CAP = 4


@dataclass(frozen=True)
class SpecialToken:
    """Placeholder surface standing in for values of one slot type."""

    surface: str
    slot_type: str
    shared_group: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.surface or not self.slot_type:
            raise ValueError("special token needs a surface and a slot type")


class TokenTable:
    """Slot-type <-> placeholder-surface mapping with shared-group support."""

    def __init__(self, tokens: Iterable[SpecialToken]):
        self.tokens = tuple(tokens)
        self._by_slot: dict[str, SpecialToken] = {}
        self._by_surface: dict[str, list[SpecialToken]] = {}
        for tok in self.tokens:
            if tok.slot_type in self._by_slot:
                raise ValueError(f"duplicate special token for slot {tok.slot_type!r}")
            self._by_slot[tok.slot_type] = tok
            self._by_surface.setdefault(tok.surface, []).append(tok)
        for surface, toks in self._by_surface.items():
            groups = {t.shared_group for t in toks}
            if len(toks) > 1 and (None in groups or len(groups) > 1):
                raise ValueError(
                    f"surface {surface!r} shared by slots outside a common group"
                )

    def surface_for(self, slot_type: str) -> str:
        return self._by_slot[slot_type].surface

    def slot_for_surface(self, surface: str) -> Optional[str]:
        """Canonical slot type for a surface (first by sort order for groups)."""
        toks = self._by_surface.get(surface)
        if not toks:
            return None
        return min(t.slot_type for t in toks)

    def is_special(self, token: str) -> bool:
        return token in self._by_surface

    @property
    def surfaces(self) -> tuple[str, ...]:
        return tuple(sorted(self._by_surface))

    @property
    def slot_types(self) -> tuple[str, ...]:
        return tuple(sorted(self._by_slot))

    def group_of(self, slot_type: str) -> Optional[str]:
        tok = self._by_slot.get(slot_type)
        return tok.shared_group if tok else None


def build_token_table(
    slot_types: Sequence[str],
    shared_groups: Optional[Mapping[str, Sequence[str]]] = None,
    *,
    vocabulary: Optional[set[str]] = None,
) -> TokenTable:
    """Create one placeholder per slot type, one shared surface per group.

    Surfaces follow the ``<slot_type>`` convention. When ``vocabulary`` is
    given, any collision between a surface and a natural token is rejected.
    """
    groups = {g: tuple(slots) for g, slots in (shared_groups or {}).items()}
    slot_to_group: dict[str, str] = {}
    for gname, slots in groups.items():
        for s in slots:
            if s in slot_to_group:
                raise ValueError(f"slot {s!r} appears in two shared groups")
            slot_to_group[s] = gname
    tokens = []
    for slot in sorted(set(slot_types)):
        group = slot_to_group.get(slot)
        surface = f"<{group}>" if group else f"<{slot}>"
        if vocabulary and surface in vocabulary:
            raise ValueError(
                f"placeholder surface {surface!r} collides with a training token"
            )
        tokens.append(SpecialToken(surface, slot, group))
    return TokenTable(tokens)


@dataclass(frozen=True)
class Gazetteer:
    """Immutable phrase inventories extracted from a labeled dataset."""

    slot_phrases: Mapping[str, frozenset[Phrase]]
    context_phrases: frozenset[Phrase]
    ambiguous_phrases: frozenset[Phrase]
    shared_groups: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    def token_table(self, *, vocabulary: Optional[set[str]] = None) -> TokenTable:
        """Placeholder table for exactly the slot types this gazetteer covers."""
        return build_token_table(
            sorted(self.slot_phrases), self.shared_groups, vocabulary=vocabulary
        )

    def phrases_with_types(self) -> dict[Phrase, list[str]]:
        """All slot phrases with the sorted list of slot types attesting them."""
        out: dict[Phrase, list[str]] = {}
        for slot in sorted(self.slot_phrases):
            for phrase in self.slot_phrases[slot]:
                out.setdefault(phrase, []).append(slot)
        return out

    @property
    def max_phrase_len(self) -> int:
        lengths = [len(p) for phrases in self.slot_phrases.values() for p in phrases]
        return max(lengths, default=0)


def build_gazetteer(
    train: Dataset,
    shared_groups: Optional[Mapping[str, Sequence[str]]] = None,
    *,
    context_ngram_cap: int = DEFAULT_CONTEXT_NGRAM_CAP,
) -> Gazetteer:
    """Collect slot, context and ambiguous phrase sets from gold labels.

    A phrase is ambiguous when it is attested under two or more slot types
    that are not members of one shared group. Context phrases are all
    n-grams (up to ``context_ngram_cap`` tokens) inside maximal all-Outside
    runs.
    """
    groups = {g: frozenset(slots) for g, slots in (shared_groups or {}).items()}
    slot_to_group = {s: g for g, slots in groups.items() for s in slots}

    slot_phrases: dict[str, set[Phrase]] = {}
    context: set[Phrase] = set()
    for utt in train:
        if utt.gold_labels is None:
            raise ValueError("gazetteer construction requires gold labels")
        for start, end, slot in bio_spans(utt.gold_labels):
            slot_phrases.setdefault(slot, set()).add(utt.tokens[start:end])
        # maximal all-Outside runs -> every contained n-gram up to the cap
        run_start = None
        bounds = list(enumerate(utt.gold_labels)) + [(len(utt.tokens), None)]
        for i, lab in bounds:
            if lab is not None and lab.is_outside:
                if run_start is None:
                    run_start = i
                continue
            if run_start is not None:
                run = utt.tokens[run_start:i]
                for n in range(1, min(len(run), context_ngram_cap) + 1):
                    for j in range(len(run) - n + 1):
                        context.add(run[j:j + n])
                run_start = None

    ambiguous: set[Phrase] = set()
    attestations: dict[Phrase, set[str]] = {}
    for slot, phrases in slot_phrases.items():
        for phrase in phrases:
            attestations.setdefault(phrase, set()).add(slot)
    for phrase, slots in attestations.items():
        if len(slots) < 2:
            continue
        phrase_groups = {slot_to_group.get(s, f"__solo__{s}") for s in slots}
        if len(phrase_groups) > 1:
            ambiguous.add(phrase)

    return Gazetteer(
        slot_phrases={s: frozenset(p) for s, p in slot_phrases.items()},
        context_phrases=frozenset(context),
        ambiguous_phrases=frozenset(ambiguous),
        shared_groups={g: tuple(sorted(slots)) for g, slots in groups.items()},
    )


def training_vocabulary(train: Dataset) -> set[str]:
    return {tok for utt in train for tok in utt.tokens}


def save_gazetteer(gazetteer: Gazetteer, path: str | Path) -> None:
    """Write the gazetteer as TSV: kind, slot type (or empty), phrase."""
    p = Path(path)
    with p.open("w", encoding="utf-8") as f:
        for group in sorted(gazetteer.shared_groups):
            slots = " ".join(sorted(gazetteer.shared_groups[group]))
            f.write(f"group\t{group}\t{slots}\n")
        for slot in sorted(gazetteer.slot_phrases):
            for phrase in sorted(gazetteer.slot_phrases[slot]):
                f.write(f"slot\t{slot}\t{' '.join(phrase)}\n")
        for phrase in sorted(gazetteer.context_phrases):
            f.write(f"context\t\t{' '.join(phrase)}\n")
        for phrase in sorted(gazetteer.ambiguous_phrases):
            f.write(f"ambiguous\t\t{' '.join(phrase)}\n")


def load_gazetteer(path: str | Path) -> Gazetteer:
    p = Path(path)
    slot_phrases: dict[str, set[Phrase]] = {}
    context: set[Phrase] = set()
    ambiguous: set[Phrase] = set()
    groups: dict[str, tuple[str, ...]] = {}
    with p.open("r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ValueError(f"{p}:{lineno}: expected 3 tab-separated columns")
            kind, slot, phrase_text = parts
            phrase = tuple(phrase_text.split())
            if not phrase:
                raise ValueError(f"{p}:{lineno}: empty phrase")
            if kind == "slot":
                if not slot:
                    raise ValueError(f"{p}:{lineno}: slot row without a slot type")
                slot_phrases.setdefault(slot, set()).add(phrase)
            elif kind == "context":
                context.add(phrase)
            elif kind == "ambiguous":
                ambiguous.add(phrase)
            elif kind == "group":
                if not slot:
                    raise ValueError(f"{p}:{lineno}: group row without a group name")
                groups[slot] = phrase
            else:
                raise ValueError(f"{p}:{lineno}: unknown row kind {kind!r}")
    return Gazetteer(
        slot_phrases={s: frozenset(p) for s, p in slot_phrases.items()},
        context_phrases=frozenset(context),
        ambiguous_phrases=frozenset(ambiguous),
        shared_groups=groups,
    )
