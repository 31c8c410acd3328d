"""Reversible byte <-> printable code point table used by byte-level vocabularies."""

from functools import cache


@cache
def _tables() -> tuple[dict[int, str], dict[str, int]]:
    printable = (
        list(range(33, 127))
        + list(range(161, 173))
        + list(range(174, 256))
    )
    byte_to_char = {b: chr(b) for b in printable}
    shifted = 0
    for b in range(256):
        if b not in byte_to_char:
            byte_to_char[b] = chr(256 + shifted)
            shifted += 1
    char_to_byte = {c: b for b, c in byte_to_char.items()}
    return byte_to_char, char_to_byte


BYTE_TO_CHAR, CHAR_TO_BYTE = _tables()

# image of the space byte; used as the word-boundary prefix of byte-level vocabularies
BYTE_SPACE = BYTE_TO_CHAR[32]
