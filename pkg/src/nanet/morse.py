"""International Morse code table for the 26 letters, plus encode/decode.

Codes follow ITU-R M.1677-1. Only letters are supported: the image dataset
covers A-Z and nothing else.
"""

from dataclasses import dataclass
from enum import Enum

from .errors import NonLetterInput, UnknownCode


class MorseSymbol(Enum):
    DOT = "."
    DASH = "-"


DOT = MorseSymbol.DOT
DASH = MorseSymbol.DASH

_CODE_STRINGS = {
    "A": ".-", "B": "-...", "C": "-.-.", "D": "-..", "E": ".",
    "F": "..-.", "G": "--.", "H": "....", "I": "..", "J": ".---",
    "K": "-.-", "L": ".-..", "M": "--", "N": "-.", "O": "---",
    "P": ".--.", "Q": "--.-", "R": ".-.", "S": "...", "T": "-",
    "U": "..-", "V": "...-", "W": ".--", "X": "-..-", "Y": "-.--",
    "Z": "--..",
}

LETTERS = sorted(_CODE_STRINGS)


@dataclass(frozen=True)
class MorseSequence:
    letter: str
    symbols: tuple[MorseSymbol, ...]

    def __len__(self):
        return len(self.symbols)


_TABLE = {
    letter: tuple(MorseSymbol(ch) for ch in code)
    for letter, code in _CODE_STRINGS.items()
}
_REVERSE = {symbols: letter for letter, symbols in _TABLE.items()}


def encode_letter(letter: str) -> MorseSequence:
    """Return the Morse sequence for a letter (case-insensitive)."""
    if not isinstance(letter, str) or len(letter) != 1:
        raise NonLetterInput(f"expected a single letter, got {letter!r}")
    upper = letter.upper()
    if upper not in _TABLE:
        raise NonLetterInput(f"no Morse letter code for {letter!r}")
    return MorseSequence(upper, _TABLE[upper])


def decode_sequence(symbols) -> str:
    """Return the unique letter whose code equals `symbols`."""
    key = tuple(symbols)
    if not key:
        raise UnknownCode("empty symbol sequence")
    if any(not isinstance(s, MorseSymbol) for s in key):
        raise UnknownCode(f"sequence contains non-Morse symbols: {key!r}")
    try:
        return _REVERSE[key]
    except KeyError:
        raise UnknownCode(f"no letter matches {''.join(s.value for s in key)}") from None


def letter_index(letter: str) -> int:
    """0-based class index of a letter (A=0 ... Z=25)."""
    return ord(encode_letter(letter).letter) - ord("A")
