import random

import pytest

from tagmt.corpus import (
    Corpus,
    ParallelRecord,
    Region,
    corpus_stats,
    parse_bitext,
    parse_vg_corpus,
    read_pairs_tsv,
    serialize_vg_corpus,
    write_pairs_tsv,
)
from tagmt.errors import EmptyText, LengthMismatch, MalformedLine


def test_parse_vg_single_line():
    corpus = parse_vg_corpus(["42\t10\t20\t50\t60\ta man\tएक आदमी"], "train")
    assert len(corpus) == 1
    rec = corpus.records[0]
    assert rec.image_id == "42"
    assert rec.region == Region(10, 20, 50, 60)
    assert rec.source_text == "a man"
    assert rec.target_text == "एक आदमी"
    assert corpus.split_label == "train"


def test_parse_vg_wrong_field_count():
    with pytest.raises(MalformedLine) as err:
        parse_vg_corpus(["42\t10\t20\t50"])
    assert err.value.line_number == 1


def test_parse_vg_empty_stream():
    assert len(parse_vg_corpus([])) == 0


def test_parse_vg_skips_blank_lines_but_counts_them():
    lines = ["", "42\t0\t0\t5\t5\ta\tb", "", "bad line"]
    with pytest.raises(MalformedLine) as err:
        parse_vg_corpus(lines)
    assert err.value.line_number == 4


def test_parse_vg_non_integer_geometry():
    with pytest.raises(MalformedLine):
        parse_vg_corpus(["42\t10\tx\t50\t60\ta\tb"])


def test_parse_vg_zero_size_region():
    with pytest.raises(MalformedLine):
        parse_vg_corpus(["42\t10\t20\t0\t60\ta\tb"])


def test_parse_vg_blank_text_fields():
    with pytest.raises(EmptyText) as err:
        parse_vg_corpus(["42\t1\t1\t5\t5\t   \ttgt"])
    assert err.value.line_number == 1
    with pytest.raises(EmptyText):
        parse_vg_corpus(["42\t1\t1\t5\t5\tsrc\t"])


def test_parse_vg_trims_outer_whitespace_only():
    corpus = parse_vg_corpus(["7\t1\t1\t2\t2\t  a  man \tतीन  लोग "])
    assert corpus.records[0].source_text == "a  man"
    assert corpus.records[0].target_text == "तीन  लोग"


def test_parse_serialize_round_trip_random():
    rng = random.Random(99)
    words = ["a", "man", "रथ", "नदी", "dog", "πλοίο", "x1"]
    lines = []
    for i in range(200):
        src = " ".join(rng.choices(words, k=rng.randint(1, 6)))
        tgt = " ".join(rng.choices(words, k=rng.randint(1, 6)))
        lines.append(
            f"im{i}\t{rng.randint(0, 99)}\t{rng.randint(0, 99)}"
            f"\t{rng.randint(1, 99)}\t{rng.randint(1, 99)}\t{src}\t{tgt}"
        )
    corpus = parse_vg_corpus(lines, "etest")
    again = parse_vg_corpus(serialize_vg_corpus(corpus), "etest")
    assert again.records == corpus.records
    assert serialize_vg_corpus(again) == lines


def test_serialize_requires_region():
    corpus = Corpus(records=[ParallelRecord(source_text="a", target_text="b")])
    with pytest.raises(ValueError):
        serialize_vg_corpus(corpus)


def test_parse_bitext_pairs_lines():
    corpus = parse_bitext(["a dog"], ["एक कुत्ता"])
    assert len(corpus) == 1
    rec = corpus.records[0]
    assert (rec.source_text, rec.target_text) == ("a dog", "एक कुत्ता")
    assert rec.image_id == ""
    assert rec.region is None


def test_parse_bitext_length_mismatch():
    with pytest.raises(LengthMismatch) as err:
        parse_bitext(["a", "b"], ["x", "y", "z"])
    assert (err.value.n_source, err.value.n_target) == (2, 3)


def test_parse_bitext_empty():
    assert len(parse_bitext([], [])) == 0


def test_parse_bitext_preserves_pairing():
    rng = random.Random(3)
    src = [f"s{i} {rng.randint(0, 9)}" for i in range(50)]
    tgt = [f"t{i}" for i in range(50)]
    corpus = parse_bitext(src, tgt)
    for i, rec in enumerate(corpus.records):
        assert rec.source_text == src[i]
        assert rec.target_text == tgt[i]


def test_corpus_stats_hand_counted():
    corpus = parse_bitext(["a b"], ["c"])
    stats = corpus_stats(corpus)
    assert (stats.sentence_count, stats.source_token_count, stats.target_token_count) == (1, 2, 1)


def test_corpus_stats_sentence_count_matches_len():
    rng = random.Random(17)
    for trial in range(20):
        n = rng.randint(0, 30)
        src = [f"w{rng.randint(0, 5)} y" for _ in range(n)]
        tgt = [f"z{i}" for i in range(n)]
        corpus = parse_bitext(src, tgt)
        assert corpus_stats(corpus).sentence_count == len(corpus.records) == n


def test_pairs_tsv_round_trip(tmp_path):
    path = tmp_path / "pairs.tsv"
    pairs = [("a b", "c d"), ("x", "y z")]
    write_pairs_tsv(pairs, path)
    assert read_pairs_tsv(path) == pairs


def test_pairs_tsv_bad_column_count(tmp_path):
    path = tmp_path / "pairs.tsv"
    path.write_text("a\tb\tc\n", encoding="utf-8")
    with pytest.raises(MalformedLine) as err:
        read_pairs_tsv(path)
    assert err.value.line_number == 1
