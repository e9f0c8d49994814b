"""Synthetic write-trace generators covering four observed transition patterns.

* ``float64walk``  blocks of eight doubles nudged by a small multiplicative
                   random walk. The low mantissa churns while sign/exponent
                   stay put; values are packed big-endian so the churn lands
                   in the upper flat positions of each word. A per-word,
                   per-write jitter on the step size makes word activity
                   fluctuate the way mixed floating-point data does.
* ``narrowint32``  sixteen 32-bit fields holding narrow unsigned values
                   (magnitude < 2^width), rewritten with some probability per
                   field; activity concentrates in the low bits of each field.
* ``partialvalid`` only the first V words of a block (V drawn per address)
                   carry live float64walk data; the tail words never change.
* ``irregular``    32-bit fields rewritten with a per-address random rate and
                   fresh random content, except a few pinned top bits per
                   field, giving an irregular profile with quiet spots just
                   below each 32-bit boundary.

Streams are reproducible bit for bit from (spec, seed): every record consumes
a fixed pattern of draws from a single generator.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .bits import BLOCK_BYTES
from .trace import WriteRecord

KINDS = ("float64walk", "narrowint32", "partialvalid", "irregular")

_WORDS = 8
_FIELDS32 = 16


@dataclass(frozen=True)
class WorkloadSpec:
    """Parameters of one synthetic workload; unused kind-specific fields are ignored."""

    kind: str
    records: int
    addresses: int = 64
    base_addr: int = 0
    walk_scale: float = 2.0**-14        # median relative step of the float walk
    walk_jitter: float = 4.0            # log2 std-dev of the per-word step size
    width: int = 12                     # narrowint32: significant low bits per field
    update_rate: float = 0.6            # narrowint32: per-field rewrite probability
    valid_words: tuple[int, int] = (1, 8)   # partialvalid: inclusive range of live words
    pinned_top_bits: int = 3            # irregular: constant high bits per field

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown workload kind {self.kind!r}; expected one of {KINDS}")
        if self.records < 1:
            raise ValueError(f"record count must be >= 1, got {self.records}")
        if self.addresses < 1:
            raise ValueError(f"address count must be >= 1, got {self.addresses}")
        if self.base_addr % BLOCK_BYTES:
            raise ValueError(f"base address {self.base_addr:#x} not block aligned")
        if not 0.0 < self.walk_scale < 1.0:
            raise ValueError(f"walk_scale must lie in (0, 1), got {self.walk_scale}")
        if self.walk_jitter < 0:
            raise ValueError(f"walk_jitter must be non-negative, got {self.walk_jitter}")
        if not 1 <= self.width <= 32:
            raise ValueError(f"width must lie in [1, 32], got {self.width}")
        if not 0.0 < self.update_rate <= 1.0:
            raise ValueError(f"update_rate must lie in (0, 1], got {self.update_rate}")
        lo, hi = self.valid_words
        if not 1 <= lo <= hi <= _WORDS:
            raise ValueError(f"valid_words range must satisfy 1 <= lo <= hi <= 8, got {self.valid_words}")
        if not 0 <= self.pinned_top_bits <= 8:
            raise ValueError(f"pinned_top_bits must lie in [0, 8], got {self.pinned_top_bits}")


def gen_workload(spec: WorkloadSpec, seed: int) -> Iterator[WriteRecord]:
    """Deterministic stream of ``spec.records`` write records."""
    gen = {
        "float64walk": _gen_float64walk,
        "narrowint32": _gen_narrowint32,
        "partialvalid": _gen_partialvalid,
        "irregular": _gen_irregular,
    }[spec.kind]
    return gen(spec, np.random.default_rng(seed))


def _pick_addr(spec: WorkloadSpec, rng: np.random.Generator) -> int:
    return spec.base_addr + BLOCK_BYTES * int(rng.integers(spec.addresses))


def _walk_step(values: np.ndarray, live: int, spec: WorkloadSpec, rng: np.random.Generator) -> None:
    """Nudge the first ``live`` doubles in place; draw sizes are fixed per call."""
    scale = spec.walk_scale * np.exp2(spec.walk_jitter * rng.standard_normal(_WORDS))
    noise = rng.standard_normal(_WORDS)
    values[:live] *= 1.0 + np.minimum(scale[:live], 0.25) * noise[:live]
    # keep magnitudes in a band so exponents stay near-constant
    escaped = (np.abs(values[:live]) < 0.25) | (np.abs(values[:live]) > 8.0)
    if escaped.any():
        values[:live][escaped] = rng.uniform(1.0, 2.0, int(escaped.sum()))


def _pack_doubles(values: np.ndarray) -> bytes:
    return values.astype(">f8").tobytes()


def _gen_float64walk(spec: WorkloadSpec, rng: np.random.Generator) -> Iterator[WriteRecord]:
    blocks: dict[int, np.ndarray] = {}
    for _ in range(spec.records):
        addr = _pick_addr(spec, rng)
        values = blocks.get(addr)
        if values is None:
            values = rng.uniform(1.0, 2.0, _WORDS)
            blocks[addr] = values
        _walk_step(values, _WORDS, spec, rng)
        yield WriteRecord(addr, _pack_doubles(values))


def _gen_narrowint32(spec: WorkloadSpec, rng: np.random.Generator) -> Iterator[WriteRecord]:
    blocks: dict[int, np.ndarray] = {}
    limit = np.uint64(1) << spec.width
    for _ in range(spec.records):
        addr = _pick_addr(spec, rng)
        values = blocks.get(addr)
        if values is None:
            values = rng.integers(0, limit, _FIELDS32, dtype=np.uint64).astype(np.uint32)
            blocks[addr] = values
        update = rng.random(_FIELDS32) < spec.update_rate
        fresh = rng.integers(0, limit, _FIELDS32, dtype=np.uint64).astype(np.uint32)
        values[update] = fresh[update]
        yield WriteRecord(addr, values.astype("<u4").tobytes())


def _gen_partialvalid(spec: WorkloadSpec, rng: np.random.Generator) -> Iterator[WriteRecord]:
    blocks: dict[int, tuple[int, np.ndarray]] = {}
    lo, hi = spec.valid_words
    for _ in range(spec.records):
        addr = _pick_addr(spec, rng)
        state = blocks.get(addr)
        if state is None:
            live = int(rng.integers(lo, hi + 1))
            state = (live, rng.uniform(1.0, 2.0, _WORDS))
            blocks[addr] = state
        live, values = state
        _walk_step(values, live, spec, rng)
        yield WriteRecord(addr, _pack_doubles(values))


def _gen_irregular(spec: WorkloadSpec, rng: np.random.Generator) -> Iterator[WriteRecord]:
    blocks: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}
    pin_shift = 32 - spec.pinned_top_bits
    low_limit = np.uint64(1) << pin_shift
    for _ in range(spec.records):
        addr = _pick_addr(spec, rng)
        state = blocks.get(addr)
        if state is None:
            rates = rng.uniform(0.1, 0.9, _FIELDS32)
            pins = (
                rng.integers(0, 1 << spec.pinned_top_bits, _FIELDS32, dtype=np.uint64)
                << np.uint64(pin_shift)
            ).astype(np.uint32)
            values = pins | rng.integers(0, low_limit, _FIELDS32, dtype=np.uint64).astype(np.uint32)
            state = (rates, pins, values)
            blocks[addr] = state
        rates, pins, values = state
        update = rng.random(_FIELDS32) < rates
        fresh = pins | rng.integers(0, low_limit, _FIELDS32, dtype=np.uint64).astype(np.uint32)
        values[update] = fresh[update]
        yield WriteRecord(addr, values.astype("<u4").tobytes())
