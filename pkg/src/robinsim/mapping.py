"""Static bit-to-codeword partitioning schemes for 512-bit cache blocks.

A 64-byte block is eight 64-bit words, each word eight bytes; a write is
protected by eight SEC-DED(72, 64) codewords. The scheme decides which
codeword owns each data bit:

* ``per-word``     codeword n owns the 64 bits of word n (eight consecutive bytes)
* ``interleaved``  codeword n owns the bit in intra-byte position n of every byte
* ``robin``        codeword n owns bit position (i + j + n) mod 8 of byte j in
                   word i: one bit from every byte, eight from every word, and
                   every bit position exactly eight times

Bit addressing follows :mod:`robinsim.bits`: ``flat = 64*word + 8*byte + pos``.
Inside a codeword, data bits are ordered by ascending flat index; that order
defines the dataword slots fed to the codec, so check bits are bit-exact
functions of the scheme.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import secded
from .bits import BLOCK_BITS, block_to_bits, popcount8

KINDS = ("per-word", "interleaved", "robin")

WORDS = 8
BYTES_PER_WORD = 8
BITS_PER_BYTE = 8
CODEWORDS = 8
DATAWORD_BITS = 64


class InvalidSchemeError(ValueError):
    """Scheme kind or geometry outside what the codeword frame supports."""


@dataclass(frozen=True)
class MappingScheme:
    """One of the three partitioning schemes plus its block geometry.

    The eight-codeword SEC-DED(72, 64) frame pins the geometry to 8 words of
    8 bytes; the robin rotation additionally needs words == bytes_per_word ==
    bits_per_byte, so anything other than the 8/8/8 geometry is rejected
    instead of silently generalized.
    """

    kind: str
    words: int = WORDS
    bytes_per_word: int = BYTES_PER_WORD
    bits_per_byte: int = BITS_PER_BYTE

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise InvalidSchemeError(f"unknown scheme kind {self.kind!r}; expected one of {KINDS}")
        if (self.words, self.bytes_per_word, self.bits_per_byte) != (WORDS, BYTES_PER_WORD, BITS_PER_BYTE):
            raise InvalidSchemeError(
                "unsupported geometry "
                f"{self.words}x{self.bytes_per_word}x{self.bits_per_byte}: "
                "the codeword frame requires words == bytes_per_word == bits_per_byte == 8"
            )

    @property
    def block_bits(self) -> int:
        return self.words * self.bytes_per_word * self.bits_per_byte

    @property
    def codewords(self) -> int:
        return self.words


PER_WORD = MappingScheme("per-word")
INTERLEAVED = MappingScheme("interleaved")
ROBIN = MappingScheme("robin")


@dataclass(frozen=True)
class BitCoordinate:
    """(word, byte, pos) address of one data bit; bijective with the flat index."""

    word: int
    byte: int
    pos: int

    def __post_init__(self) -> None:
        if not (0 <= self.word < WORDS and 0 <= self.byte < BYTES_PER_WORD and 0 <= self.pos < BITS_PER_BYTE):
            raise ValueError(f"coordinate out of range: word={self.word} byte={self.byte} pos={self.pos}")

    @property
    def flat(self) -> int:
        return 64 * self.word + 8 * self.byte + self.pos

    @classmethod
    def from_flat(cls, flat: int) -> "BitCoordinate":
        if not 0 <= flat < BLOCK_BITS:
            raise ValueError(f"flat index out of range: {flat}")
        return cls(flat // 64, (flat % 64) // 8, flat % 8)


def map_bit(scheme: MappingScheme, coord: BitCoordinate) -> int:
    """Codeword id in [0, 8) that owns the given data bit."""
    if scheme.kind == "per-word":
        return coord.word
    if scheme.kind == "interleaved":
        return coord.pos
    # robin: inverse of "codeword n owns position (i + j + n) mod 8 of byte j in word i"
    return (coord.pos - coord.word - coord.byte) % 8


@lru_cache(maxsize=None)
def scheme_assignment(scheme: MappingScheme) -> np.ndarray:
    """Length-512 vector mapping each flat bit index to its codeword id."""
    flats = np.arange(BLOCK_BITS)
    word = flats // 64
    byte = (flats % 64) // 8
    pos = flats % 8
    if scheme.kind == "per-word":
        ids = word
    elif scheme.kind == "interleaved":
        ids = pos
    else:
        ids = (pos - word - byte) % 8
    ids = ids.astype(np.int64)
    ids.setflags(write=False)
    return ids


@lru_cache(maxsize=None)
def scheme_perm(scheme: MappingScheme) -> np.ndarray:
    """Flat indices sorted by (codeword, flat): row n of the (8, 64) reshape is codeword n's slots."""
    perm = np.argsort(scheme_assignment(scheme), kind="stable")
    perm.setflags(write=False)
    return perm


def codeword_data_bits(scheme: MappingScheme, n: int) -> list[int]:
    """The 64 flat indices of codeword n's data bits, in dataword slot order."""
    if not 0 <= n < CODEWORDS:
        raise ValueError(f"codeword id out of range: {n}")
    return scheme_perm(scheme).reshape(CODEWORDS, DATAWORD_BITS)[n].tolist()


def datawords(scheme: MappingScheme, data: bytes) -> np.ndarray:
    """Extract the eight 64-bit datawords of a block, one uint64 per codeword."""
    bits = block_to_bits(data)
    slots = bits[scheme_perm(scheme)].reshape(CODEWORDS, DATAWORD_BITS)
    return np.packbits(slots, axis=1, bitorder="little").copy().view("<u8").ravel()


@dataclass(frozen=True)
class PartitionReport:
    """Enumeration-derived summary of how a scheme spreads bits over codewords."""

    kind: str
    bijective: bool
    codeword_sizes: tuple[int, ...]
    words_per_codeword: tuple[int, ...]
    bytes_per_codeword: tuple[int, ...]
    positions_per_codeword: tuple[int, ...]
    bits_per_word: tuple[tuple[int, ...], ...]
    bits_per_position: tuple[tuple[int, ...], ...]
    max_bits_per_byte: tuple[int, ...]

    def describe(self) -> str:
        lines = [
            f"scheme: {self.kind}",
            f"bijective 8x64 partition: {'yes' if self.bijective else 'NO'}",
            f"data bits per codeword: {list(self.codeword_sizes)}",
            f"distinct words per codeword: {list(self.words_per_codeword)}",
            f"distinct bytes per codeword: {list(self.bytes_per_codeword)}",
            f"distinct bit positions per codeword: {list(self.positions_per_codeword)}",
            f"max bits drawn from any single byte: {list(self.max_bits_per_byte)}",
        ]
        return "\n".join(lines)


def verify_partition(scheme: MappingScheme) -> PartitionReport:
    """Exhaustively enumerate all 512 bits and report the partition structure.

    A failing check is reported in the flags, never raised.
    """
    ids = scheme_assignment(scheme)
    sizes = np.bincount(ids, minlength=CODEWORDS)
    bijective = bool(len(ids) == BLOCK_BITS and np.all(sizes == DATAWORD_BITS))

    flats = np.arange(BLOCK_BITS)
    word = flats // 64
    byte = flats // 8
    pos = flats % 8

    bits_per_word = np.zeros((CODEWORDS, WORDS), dtype=np.int64)
    bits_per_pos = np.zeros((CODEWORDS, BITS_PER_BYTE), dtype=np.int64)
    bits_per_byte = np.zeros((CODEWORDS, 64), dtype=np.int64)
    np.add.at(bits_per_word, (ids, word), 1)
    np.add.at(bits_per_pos, (ids, pos), 1)
    np.add.at(bits_per_byte, (ids, byte), 1)

    to_tuples = lambda m: tuple(tuple(int(v) for v in row) for row in m)
    return PartitionReport(
        kind=scheme.kind,
        bijective=bijective,
        codeword_sizes=tuple(int(v) for v in sizes),
        words_per_codeword=tuple(int(np.count_nonzero(row)) for row in bits_per_word),
        bytes_per_codeword=tuple(int(np.count_nonzero(row)) for row in bits_per_byte),
        positions_per_codeword=tuple(int(np.count_nonzero(row)) for row in bits_per_pos),
        bits_per_word=to_tuples(bits_per_word),
        bits_per_position=to_tuples(bits_per_pos),
        max_bits_per_byte=tuple(int(row.max()) for row in bits_per_byte),
    )


@dataclass(frozen=True)
class TransitionVector:
    """Per-codeword flip counts for one block write."""

    k: tuple[int, ...]
    include_ecc: bool = False

    def __post_init__(self) -> None:
        if len(self.k) != CODEWORDS:
            raise ValueError(f"transition vector needs {CODEWORDS} entries, got {len(self.k)}")
        cap = DATAWORD_BITS + (secded.CHECK_BITS if self.include_ecc else 0)
        for i, v in enumerate(self.k):
            if not 0 <= v <= cap:
                raise ValueError(f"k[{i}]={v} outside [0, {cap}]")

    @property
    def total(self) -> int:
        return sum(self.k)


def transition_vector(
    scheme: MappingScheme, old: bytes, new: bytes, include_ecc: bool = True
) -> TransitionVector:
    """Count the bits that must flip in each codeword when `old` is overwritten by `new`.

    With ``include_ecc`` the Hamming distance between the check words encoded
    from the old and new datawords is added per codeword, since a write
    touches all k+r cells of a codeword.
    """
    diff = block_to_bits(old) ^ block_to_bits(new)
    counts = np.bincount(scheme_assignment(scheme)[diff.astype(bool)], minlength=CODEWORDS)
    if include_ecc:
        check_old = secded.encode_words(datawords(scheme, old))
        check_new = secded.encode_words(datawords(scheme, new))
        counts = counts + popcount8(check_old ^ check_new).astype(np.int64)
    return TransitionVector(tuple(int(v) for v in counts), include_ecc=include_ecc)
