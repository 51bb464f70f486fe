import pytest

from nanet.errors import NonLetterInput, UnknownCode
from nanet.morse import (
    DASH,
    DOT,
    LETTERS,
    MorseSymbol,
    decode_sequence,
    encode_letter,
    letter_index,
)


def test_round_trip_all_letters():
    for letter in LETTERS:
        seq = encode_letter(letter)
        assert decode_sequence(seq.symbols) == letter


def test_codes_pairwise_distinct():
    codes = {encode_letter(c).symbols for c in LETTERS}
    assert len(codes) == 26


def test_known_codes():
    assert encode_letter("E").symbols == (DOT,)
    assert encode_letter("T").symbols == (DASH,)
    assert encode_letter("A").symbols == (DOT, DASH)
    assert encode_letter("S").symbols == (DOT, DOT, DOT)
    assert encode_letter("O").symbols == (DASH, DASH, DASH)
    assert encode_letter("Q").symbols == (DASH, DASH, DOT, DASH)


def test_sequence_lengths_between_1_and_4():
    assert {len(encode_letter(c)) for c in LETTERS} == {1, 2, 3, 4}


def test_case_insensitive():
    assert encode_letter("j") == encode_letter("J")


@pytest.mark.parametrize("bad", ["1", "", "AB", "?", "é", 3, None])
def test_encode_rejects_non_letters(bad):
    with pytest.raises(NonLetterInput):
        encode_letter(bad)


def test_decode_unknown_code():
    with pytest.raises(UnknownCode):
        decode_sequence((DOT, DOT, DOT, DOT, DOT))
    with pytest.raises(UnknownCode):
        decode_sequence(())
    with pytest.raises(UnknownCode):
        decode_sequence((DOT, "dash"))


def test_letter_index_ordering():
    assert letter_index("A") == 0
    assert letter_index("z") == 25
    assert [letter_index(c) for c in LETTERS] == list(range(26))
