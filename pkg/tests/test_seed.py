import pytest

from iterdelex.gazetteer import Gazetteer, build_token_table
from iterdelex.seed import (
    Candidate,
    Span,
    find_matches,
    original_candidate,
    seed_candidates,
)


def gaz(slot_phrases, context=(), ambiguous=(), groups=None):
    return Gazetteer(
        slot_phrases={s: frozenset(p) for s, p in slot_phrases.items()},
        context_phrases=frozenset(context),
        ambiguous_phrases=frozenset(ambiguous),
        shared_groups=dict(groups or {}),
    )


TABLE = build_token_table(["contact", "song"])


class TestSpan:
    def test_length(self):
        assert len(Span(2, 5, "contact")) == 3

    @pytest.mark.parametrize("start,end", [(-1, 2), (3, 3), (4, 2)])
    def test_invalid_ranges_rejected(self, start, end):
        with pytest.raises(ValueError):
            Span(start, end, "contact")

    def test_ordering(self):
        assert Span(1, 2, "a") < Span(2, 3, "a")


class TestCandidate:
    def test_original(self):
        cand = original_candidate(("call", "mom"))
        assert cand.tokens == ("call", "mom")
        assert cand.alignment == (None, None)
        assert cand.natural_count == 2
        assert cand.source_length == 2
        assert cand.provenance == "original"

    def test_alignment_must_tile(self):
        # span starting past the cursor leaves original token 1 uncovered
        with pytest.raises(ValueError, match="alignment gap"):
            Candidate(("a", "<contact>"), (None, Span(2, 3, "contact")), "seed")

    def test_alignment_length_must_match(self):
        with pytest.raises(ValueError, match="one entry per token"):
            Candidate(("a", "b"), (None,), "seed")

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            Candidate((), (), "seed")

    def test_source_extents(self):
        cand = Candidate(
            ("call", "<contact>", "now"),
            (None, Span(1, 3, "contact"), None),
            "seed",
        )
        assert cand.source_extents() == ((0, 1), (1, 3), (3, 4))
        assert cand.source_length == 4
        assert cand.natural_count == 2

    def test_key_ignores_provenance(self):
        a = Candidate(("x",), (Span(0, 1, "s"),), "seed")
        b = Candidate(("x",), (Span(0, 1, "s"),), "proper_span")
        assert a.key() == b.key()
        assert a != b


class TestFindMatches:
    def test_simple_match(self):
        g = gaz({"contact": [("john", "smith")]})
        got = find_matches(("call", "john", "smith", "now"), g)
        assert got == (Span(1, 3, "contact"),)

    def test_longest_first_wins(self):
        g = gaz({"contact": [("john",), ("john", "smith")]})
        got = find_matches(("john", "smith",), g)
        assert got == (Span(0, 2, "contact"),)

    def test_non_overlapping_left_to_right(self):
        g = gaz({"song": [("hey", "jude"), ("jude", "blues")]})
        got = find_matches(("hey", "jude", "blues"), g)
        # same length: leftmost claims its tokens first
        assert got == (Span(0, 2, "song"),)

    def test_multiple_matches_sorted(self):
        g = gaz({"contact": [("mom",)], "song": [("jazz",)]})
        got = find_matches(("play", "jazz", "for", "mom"), g)
        assert got == (Span(1, 2, "song"), Span(3, 4, "contact"))

    def test_context_phrases_never_match(self):
        g = gaz({"song": [("play",), ("jazz",)]}, context=[("play",)])
        got = find_matches(("play", "jazz"), g)
        assert got == (Span(1, 2, "song"),)

    def test_ambiguous_phrases_never_match(self):
        g = gaz({"song": [("yesterday",)], "date": [("yesterday",)]},
                ambiguous=[("yesterday",)])
        assert find_matches(("yesterday",), g) == ()

    def test_shared_group_phrase_resolves_to_smallest_slot(self):
        g = gaz(
            {"song": [("thriller",)], "album": [("thriller",)]},
            groups={"media": ("album", "song")},
        )
        got = find_matches(("play", "thriller"), g)
        assert got == (Span(1, 2, "album"),)

    def test_no_usable_phrases(self):
        assert find_matches(("hi",), gaz({})) == ()

    def test_same_token_not_claimed_twice(self):
        g = gaz({"contact": [("ana",)]})
        got = find_matches(("ana", "calls", "ana"), g)
        assert got == (Span(0, 1, "contact"), Span(2, 3, "contact"))


class TestSeedCandidates:
    G = gaz({"contact": [("mom",)], "song": [("jazz",)]})

    def test_original_always_first(self):
        seeds = seed_candidates(("play", "jazz", "for", "mom"), self.G, TABLE)
        assert seeds[0].tokens == ("play", "jazz", "for", "mom")
        assert seeds[0].provenance == "original"

    def test_power_set_of_matches(self):
        seeds = seed_candidates(("play", "jazz", "for", "mom"), self.G, TABLE)
        token_sets = {s.tokens for s in seeds}
        assert token_sets == {
            ("play", "jazz", "for", "mom"),
            ("play", "<song>", "for", "mom"),
            ("play", "jazz", "for", "<contact>"),
            ("play", "<song>", "for", "<contact>"),
        }
        assert len(seeds) == 4

    def test_most_substituted_first_after_original(self):
        seeds = seed_candidates(("play", "jazz", "for", "mom"), self.G, TABLE)
        assert seeds[1].tokens == ("play", "<song>", "for", "<contact>")
        assert seeds[1].natural_count == 2

    def test_alignments_record_original_spans(self):
        seeds = seed_candidates(("play", "jazz", "for", "mom"), self.G, TABLE)
        both = seeds[1]
        assert both.alignment == (None, Span(1, 2, "song"), None, Span(3, 4, "contact"))
        assert both.source_length == 4

    def test_cap_truncates_but_keeps_original(self):
        tokens = ("jazz", "mom", "jazz", "mom", "jazz")
        seeds = seed_candidates(tokens, self.G, TABLE, cap=4)
        assert len(seeds) == 4
        assert seeds[0].provenance == "original"
        # 5 matches -> the first kept subset substitutes all of them
        assert seeds[1].natural_count == 0

    def test_cap_validation(self):
        with pytest.raises(ValueError, match="at least 1"):
            seed_candidates(("x",), self.G, TABLE, cap=0)

    def test_no_matches_yields_only_original(self):
        seeds = seed_candidates(("nothing", "here"), self.G, TABLE)
        assert len(seeds) == 1
