"""Decomposition and reversible Latin transliteration."""

import random
import unicodedata
from importlib import resources

import pytest

from lexnorm.corpus import parse_corpus
from lexnorm.errors import CoverageError, ParseError, TranslitDecodeError
from lexnorm.metrics import RunOutput, word_accuracy
from lexnorm.translit import (
    MappingTable,
    decompose,
    from_latin,
    invert_corpus,
    load_mapping,
    save_mapping,
    to_latin,
    transform_corpus,
)


@pytest.fixture(scope="module")
def combining() -> MappingTable:
    with resources.as_file(
        resources.files("lexnorm").joinpath("data/combining_marks.tsv")
    ) as p:
        return load_mapping(p)


@pytest.fixture(scope="module")
def thai() -> MappingTable:
    with resources.as_file(
        resources.files("lexnorm").joinpath("data/thai_latin.tsv")
    ) as p:
        return load_mapping(p)


def test_decompose_e_acute():
    assert decompose("é") == ["e", "́"]


def test_decompose_ascii():
    assert decompose("cat") == ["c", "a", "t"]


def test_decompose_korean_syllable():
    want = list(unicodedata.normalize("NFD", "한"))
    assert decompose("한") == want
    assert len(want) == 3


def test_to_latin_e_acute(combining):
    assert to_latin("é", combining) == "e'"


def test_to_latin_ascii_passthrough(combining):
    assert to_latin("cat", combining) == "cat"


def test_to_latin_creme(combining):
    assert to_latin("crème", combining) == "cre1me"


def test_to_latin_identity_mapping_ascii():
    table = MappingTable(forward={"a": "a", "b": "b"}, separator="")
    assert to_latin("ab", table) == "ab"
    assert from_latin("ab", table) == "ab"


def test_to_latin_unmapped_scalar(combining):
    with pytest.raises(CoverageError, match="U\\+0E01"):
        to_latin("ก", combining)


def test_to_latin_reserved_char_collision(combining):
    # the table maps U+0300 to "1", so a literal "1" cannot pass through
    with pytest.raises(CoverageError, match="U\\+0031"):
        to_latin("a1", combining)


def test_to_latin_thai(thai):
    assert to_latin("กา", thai) == "ko-saa"
    assert to_latin("กา", thai) == to_latin("กา", thai)


def test_to_latin_preserves_whitespace(thai):
    assert to_latin("กา กา", thai) == "ko-saa ko-saa"
    assert to_latin("กา  กา", thai) == "ko-saa  ko-saa"


def test_from_latin_e_acute(combining):
    assert from_latin("e'", combining) == "é"
    assert from_latin("e'", combining) == unicodedata.normalize("NFC", "é")


def test_from_latin_thai(thai):
    assert from_latin("ko-saa", thai) == "กา"


def test_from_latin_corrupted_stream(combining, thai):
    with pytest.raises(TranslitDecodeError):
        from_latin("e#", combining)
    with pytest.raises(TranslitDecodeError):
        from_latin("ko-xyz", thai)
    with pytest.raises(TranslitDecodeError):
        from_latin("ko--saa", thai)


def test_round_trip_latin_letters(combining):
    rng = random.Random(3)
    letters = "abcdefghijklmnopqrstuvwxyzABCDE"
    for _ in range(100):
        s = "".join(rng.choice(letters) for _ in range(rng.randint(1, 12)))
        assert from_latin(to_latin(s, combining), combining) == s


def test_round_trip_combining_marks(combining):
    rng = random.Random(5)
    marks = sorted(combining.forward)
    for _ in range(200):
        parts = []
        for _ in range(rng.randint(1, 8)):
            parts.append(rng.choice("aeiounc"))
            if rng.random() < 0.6:
                parts.append(rng.choice(marks))
        s = "".join(parts)
        assert from_latin(to_latin(s, combining), combining) == unicodedata.normalize(
            "NFC", s
        )


def test_round_trip_thai(thai):
    rng = random.Random(7)
    chars = sorted(thai.forward)
    for _ in range(200):
        s = "".join(rng.choice(chars) for _ in range(rng.randint(1, 10)))
        latin = to_latin(s, thai)
        assert from_latin(latin, thai) == unicodedata.normalize("NFC", s)


def test_round_trip_precomposed_input(combining):
    # NFC-recomposable input comes back in composed form
    s = "résumé"
    assert from_latin(to_latin(s, combining), combining) == s


def test_output_alphabet_restricted(thai, combining):
    allowed = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789'")
    for table in (thai, combining):
        for s_out in table.forward.values():
            assert set(s_out) <= allowed
    latin = to_latin("กาไหม", thai)
    assert set(latin) <= allowed | set(thai.separator)


def test_transform_and_invert_corpus(thai):
    c = parse_corpus("กา\tกา\nไหม\tมา\n\n", "th")
    latin = transform_corpus(c, thai)
    assert latin.language_tag == c.language_tag
    assert [t.raw for t in latin.tokens()] == ["ko-saa", "sai2-ho-mo"]
    back = invert_corpus(latin, thai)
    assert back == c


def test_transform_preserves_accuracy_for_identity_system(thai):
    c = parse_corpus("กา\tกา\nไหม\tมา\nมา\tมา\n\n", "th")
    run = RunOutput(tuple(t.raw for t in c.tokens()))
    latin = transform_corpus(c, thai)
    latin_run = RunOutput(tuple(t.raw for t in latin.tokens()))
    assert word_accuracy(c, run) == word_accuracy(latin, latin_run)


def test_mapping_table_validation():
    with pytest.raises(ValueError):
        MappingTable(forward={}, separator="")
    with pytest.raises(ValueError):
        MappingTable(forward={"ab": "x"}, separator="")
    with pytest.raises(ValueError):
        MappingTable(forward={"a": ""}, separator="")
    with pytest.raises(ValueError):
        MappingTable(forward={"ก": "x#"}, separator="")
    with pytest.raises(ValueError):
        MappingTable(forward={"ก": "x", "ข": "x"}, separator="")
    with pytest.raises(ValueError):
        MappingTable(forward={"ก": "ko"}, separator="")  # multi-char needs separator
    with pytest.raises(ValueError):
        MappingTable(forward={"ก": "ko"}, separator="a")
    with pytest.raises(ValueError):
        MappingTable(forward={"ก": "ko"}, separator=" ")
    table = MappingTable(forward={"ก": "ko"}, separator="-")
    assert table.reverse == {"ko": "ก"}


def test_save_load_round_trip(tmp_path, combining):
    path = tmp_path / "map.tsv"
    save_mapping(combining, path)
    again = load_mapping(path)
    assert again.forward == combining.forward
    assert again.separator == combining.separator


def test_load_mapping_requires_header(tmp_path):
    path = tmp_path / "map.tsv"
    path.write_text("U+0301\t'\n", encoding="utf-8")
    with pytest.raises(ParseError, match="separator"):
        load_mapping(path)


def test_load_mapping_bad_code_point(tmp_path):
    path = tmp_path / "map.tsv"
    path.write_text("#separator=\nX+0041\ta\n", encoding="utf-8")
    with pytest.raises(ParseError, match="line 2"):
        load_mapping(path)


def test_load_mapping_duplicate_point(tmp_path):
    path = tmp_path / "map.tsv"
    path.write_text("#separator=\nU+0301\t'\nU+0301\tx\n", encoding="utf-8")
    with pytest.raises(ParseError, match="duplicate"):
        load_mapping(path)


def test_load_mapping_bad_row(tmp_path):
    path = tmp_path / "map.tsv"
    path.write_text("#separator=\nU+0301\n", encoding="utf-8")
    with pytest.raises(ParseError, match="line 2"):
        load_mapping(path)


def test_bundled_tables(combining, thai):
    assert combining.separator == ""
    assert len(combining.forward) == 11
    assert combining.forward["́"] == "'"
    assert thai.separator == "-"
    assert len(thai.forward) == 87
    assert thai.forward["ก"] == "ko"
