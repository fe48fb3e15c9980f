import pytest

from iterdelex.corpus import Dataset, SlotLabel, Utterance
from iterdelex.gazetteer import (
    Gazetteer,
    SpecialToken,
    TokenTable,
    build_gazetteer,
    build_token_table,
    load_gazetteer,
    save_gazetteer,
    training_vocabulary,
)


def labels(*texts):
    return tuple(SlotLabel.parse(t) for t in texts)


def utt(text, tags, intent="x"):
    return Utterance(tuple(text.split()), labels(*tags.split()), intent)


class TestTokenTable:
    def test_build_surfaces_follow_convention(self):
        table = build_token_table(["contact", "song"])
        assert table.surface_for("contact") == "<contact>"
        assert table.surface_for("song") == "<song>"
        assert table.surfaces == ("<contact>", "<song>")
        assert table.slot_types == ("contact", "song")

    def test_shared_group_uses_one_surface(self):
        table = build_token_table(
            ["song", "artist", "city"], {"media": ["song", "artist"]}
        )
        assert table.surface_for("song") == "<media>"
        assert table.surface_for("artist") == "<media>"
        assert table.surface_for("city") == "<city>"
        assert table.group_of("song") == "media"
        assert table.group_of("city") is None
        # canonical slot for a shared surface: alphabetically first member
        assert table.slot_for_surface("<media>") == "artist"

    def test_is_special_and_unknown_surface(self):
        table = build_token_table(["time"])
        assert table.is_special("<time>")
        assert not table.is_special("time")
        assert table.slot_for_surface("plain") is None

    def test_slot_in_two_groups_rejected(self):
        with pytest.raises(ValueError, match="two shared groups"):
            build_token_table(["a", "b"], {"g1": ["a"], "g2": ["a", "b"]})

    def test_vocabulary_collision_rejected(self):
        with pytest.raises(ValueError, match="collides"):
            build_token_table(["contact"], vocabulary={"<contact>", "call"})
        build_token_table(["contact"], vocabulary={"call"})  # fine

    def test_duplicate_slot_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            TokenTable([SpecialToken("<a>", "a"), SpecialToken("<x>", "a")])

    def test_shared_surface_requires_common_group(self):
        with pytest.raises(ValueError, match="common group"):
            TokenTable([SpecialToken("<m>", "a"), SpecialToken("<m>", "b")])
        with pytest.raises(ValueError, match="common group"):
            TokenTable(
                [SpecialToken("<m>", "a", "g1"), SpecialToken("<m>", "b", "g2")]
            )
        TokenTable([SpecialToken("<m>", "a", "g"), SpecialToken("<m>", "b", "g")])

    def test_special_token_validation(self):
        with pytest.raises(ValueError):
            SpecialToken("", "slot")
        with pytest.raises(ValueError):
            SpecialToken("<x>", "")


TRAIN = Dataset.from_utterances(
    [
        utt("call john smith now", "O B-contact I-contact O"),
        utt("play yesterday by the beatles", "O B-song O B-artist I-artist"),
        utt("set a reminder for tomorrow morning ok", "O O O O O O O"),
        utt("play yesterday", "O B-song"),
        utt("remind me about yesterday", "O O O B-date"),
    ]
)


class TestBuildGazetteer:
    def test_slot_phrases_collected_per_type(self):
        gaz = build_gazetteer(TRAIN)
        assert ("john", "smith") in gaz.slot_phrases["contact"]
        assert ("the", "beatles") in gaz.slot_phrases["artist"]
        assert ("yesterday",) in gaz.slot_phrases["song"]
        assert ("yesterday",) in gaz.slot_phrases["date"]

    def test_context_phrases_are_outside_run_ngrams(self):
        gaz = build_gazetteer(TRAIN)
        assert ("call",) in gaz.context_phrases
        assert ("by",) in gaz.context_phrases
        assert ("set", "a", "reminder", "for") in gaz.context_phrases
        # n-grams never cross a slot span
        assert ("call", "john") not in gaz.context_phrases
        # cap: the 7-token all-Outside utterance contributes nothing longer than 4
        assert all(len(p) <= 4 for p in gaz.context_phrases)

    def test_context_cap_configurable(self):
        gaz = build_gazetteer(TRAIN, context_ngram_cap=2)
        assert all(len(p) <= 2 for p in gaz.context_phrases)

    def test_cross_type_phrase_marked_ambiguous(self):
        gaz = build_gazetteer(TRAIN)
        assert ("yesterday",) in gaz.ambiguous_phrases
        assert ("john", "smith") not in gaz.ambiguous_phrases

    def test_shared_group_suppresses_ambiguity(self):
        gaz = build_gazetteer(TRAIN, {"when": ["song", "date"]})
        assert ("yesterday",) not in gaz.ambiguous_phrases
        assert gaz.shared_groups == {"when": ("date", "song")}

    def test_requires_gold_labels(self):
        data = Dataset.from_utterances([Utterance(("hi",))])
        with pytest.raises(ValueError, match="gold labels"):
            build_gazetteer(data)

    def test_phrases_with_types_sorted(self):
        gaz = build_gazetteer(TRAIN)
        assert gaz.phrases_with_types()[("yesterday",)] == ["date", "song"]

    def test_max_phrase_len(self):
        gaz = build_gazetteer(TRAIN)
        assert gaz.max_phrase_len == 2
        empty = Gazetteer({}, frozenset(), frozenset())
        assert empty.max_phrase_len == 0

    def test_token_table_from_gazetteer(self):
        gaz = build_gazetteer(TRAIN, {"when": ["song", "date"]})
        table = gaz.token_table()
        assert table.surface_for("song") == "<when>"
        assert table.surface_for("date") == "<when>"
        assert table.surface_for("contact") == "<contact>"

    def test_training_vocabulary(self):
        vocab = training_vocabulary(TRAIN)
        assert {"call", "john", "yesterday"} <= vocab
        assert "<contact>" not in vocab


class TestGazetteerIO:
    def test_round_trip(self, tmp_path):
        gaz = build_gazetteer(TRAIN, {"when": ["song", "date"]})
        path = tmp_path / "gaz.tsv"
        save_gazetteer(gaz, path)
        loaded = load_gazetteer(path)
        assert loaded == gaz

    def test_rows_are_three_columns(self, tmp_path):
        gaz = build_gazetteer(TRAIN)
        path = tmp_path / "gaz.tsv"
        save_gazetteer(gaz, path)
        for line in path.read_text().splitlines():
            assert len(line.split("\t")) == 3

    @pytest.mark.parametrize(
        "row,message",
        [
            ("slot\tcontact", "3 tab-separated"),
            ("slot\tcontact\t", "empty phrase"),
            ("slot\t\tjohn", "without a slot type"),
            ("group\t\tsong date", "without a group name"),
            ("mystery\t\tjohn", "unknown row kind"),
        ],
    )
    def test_malformed_rows_rejected(self, tmp_path, row, message):
        path = tmp_path / "gaz.tsv"
        path.write_text(row + "\n")
        with pytest.raises(ValueError, match=message):
            load_gazetteer(path)

    def test_error_includes_line_number(self, tmp_path):
        path = tmp_path / "gaz.tsv"
        path.write_text("slot\tcontact\tjohn\nbroken line\n")
        with pytest.raises(ValueError, match=r"gaz\.tsv:2"):
            load_gazetteer(path)

    def test_blank_lines_skipped(self, tmp_path):
        path = tmp_path / "gaz.tsv"
        path.write_text("slot\tcontact\tjohn\n\n\ncontext\t\tcall\n")
        loaded = load_gazetteer(path)
        assert ("john",) in loaded.slot_phrases["contact"]
        assert ("call",) in loaded.context_phrases
