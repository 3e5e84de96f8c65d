"""Instruction model and the TBC-1 toy instruction set.

Every algorithm downstream only sees instruction *kinds*, lengths and
static successors, so any variable-length ISA can be plugged in by
subclassing :class:`Decoder` and implementing :meth:`Decoder.decode_at`.

TBC-1 encoding (opcode is the first byte)::

    0x00        HALT   len 1  terminator
    0x01        RET    len 1  terminator
    0x02        IJMP   len 1  indirect jump
    0x10 rel8   JMP    len 2  target = off + 2 + rel8
    0x11 rel8   JCC    len 2  successors off + 2, off + 2 + rel8
    0x12 rel8   CALL   len 2  successor off + 2 only
    0x13        ICALL  len 1  successor off + 1
    0x20 imm8   OP2    len 2
    0x21 i8 i8  OP3    len 3
    0x90        NOP    len 1

Anything else, or an instruction running past the end of the region, is
undecodable.
"""

from __future__ import annotations

import enum
from collections.abc import Iterator, Mapping
from dataclasses import dataclass

import numpy as np

#: Kind code used in per-offset arrays for undecodable / invalid offsets.
INVALID = -1


class InstKind(enum.IntEnum):
    FALL_THROUGH = 0
    NOP = 1
    DIRECT_JUMP = 2
    INDIRECT_JUMP = 3
    COND_JUMP = 4
    DIRECT_CALL = 5
    INDIRECT_CALL = 6
    TERMINATOR = 7

    @property
    def is_fall_through_like(self) -> bool:
        """Sole static successor is the physically next offset."""
        return bool(FALL_THROUGH_LIKE[self])

    @property
    def is_control_flow(self) -> bool:
        return not FALL_THROUGH_LIKE[self]


# Lookup tables indexed by kind code. Index -1 (INVALID) wraps to the last
# slot, so every table carries one extra trailing entry for invalid nodes.
FALL_THROUGH_LIKE = np.zeros(len(InstKind) + 1, dtype=bool)
FALL_THROUGH_LIKE[[InstKind.FALL_THROUGH, InstKind.NOP,
                   InstKind.DIRECT_CALL, InstKind.INDIRECT_CALL]] = True

#: Kinds that can close a loop; candidates for terminal-SCC anchors.
JUMP_KIND = np.zeros(len(InstKind) + 1, dtype=bool)
JUMP_KIND[[InstKind.DIRECT_JUMP, InstKind.COND_JUMP]] = True

#: Kinds whose fall-through successor is offset + length.
HAS_FALL_THROUGH = FALL_THROUGH_LIKE.copy()
HAS_FALL_THROUGH[InstKind.COND_JUMP] = True

#: Kinds that carry a statically known branch target edge.
HAS_TARGET = np.zeros(len(InstKind) + 1, dtype=bool)
HAS_TARGET[[InstKind.DIRECT_JUMP, InstKind.COND_JUMP]] = True


@dataclass(frozen=True)
class DecodedInst:
    offset: int
    length: int
    kind: InstKind
    successors: tuple[int, ...]

    def __post_init__(self):
        if self.length < 1:
            raise ValueError(f"instruction at {self.offset} has length {self.length}")


@dataclass(frozen=True)
class Region:
    """A raw code region. ``base`` only affects rendered addresses."""

    data: bytes
    base: int = 0

    def __len__(self) -> int:
        return len(self.data)


class SupersetDecoding(Mapping):
    """Result of decoding at every offset, stored column-wise.

    Behaves as a read-only mapping ``offset -> DecodedInst | None``;
    ``None`` marks an undecodable offset. The arrays are what the graph
    builder consumes:

    * ``kind``   -- int8 kind code, :data:`INVALID` when undecodable
    * ``length`` -- int32, 0 when undecodable
    * ``target`` -- int64 branch target for jump kinds (may lie outside the
      region; meaningless elsewhere)
    """

    def __init__(self, kind: np.ndarray, length: np.ndarray, target: np.ndarray):
        self.kind = kind
        self.length = length
        self.target = target

    def __len__(self) -> int:
        return len(self.kind)

    def __iter__(self) -> Iterator[int]:
        return iter(range(len(self.kind)))

    def __getitem__(self, offset: int) -> DecodedInst | None:
        if not 0 <= offset < len(self.kind):
            raise KeyError(offset)
        code = int(self.kind[offset])
        if code == INVALID:
            return None
        kind = InstKind(code)
        length = int(self.length[offset])
        succ = []
        if HAS_FALL_THROUGH[code]:
            succ.append(offset + length)
        if HAS_TARGET[code]:
            succ.append(int(self.target[offset]))
        return DecodedInst(offset, length, kind, tuple(succ))


class Decoder:
    """Base class for superset decoders.

    Subclasses implement :meth:`decode_at`. The default
    :meth:`superset_decode` calls it at every offset; subclasses may
    override it with a faster equivalent.
    """

    name = "abstract"
    max_length = 1

    def decode_at(self, region: Region, offset: int) -> DecodedInst | None:
        raise NotImplementedError

    def superset_decode(self, region: Region) -> SupersetDecoding:
        n = len(region)
        kind = np.full(n, INVALID, dtype=np.int8)
        length = np.zeros(n, dtype=np.int32)
        target = np.zeros(n, dtype=np.int64)
        for off in range(n):
            inst = self.decode_at(region, off)
            if inst is None:
                continue
            kind[off] = inst.kind
            length[off] = inst.length
            if HAS_TARGET[inst.kind]:
                target[off] = inst.successors[-1]
        return SupersetDecoding(kind, length, target)


_K = InstKind

# opcode -> (length, kind)
TBC1_OPCODES = {
    0x00: (1, _K.TERMINATOR),
    0x01: (1, _K.TERMINATOR),
    0x02: (1, _K.INDIRECT_JUMP),
    0x10: (2, _K.DIRECT_JUMP),
    0x11: (2, _K.COND_JUMP),
    0x12: (2, _K.DIRECT_CALL),
    0x13: (1, _K.INDIRECT_CALL),
    0x20: (2, _K.FALL_THROUGH),
    0x21: (3, _K.FALL_THROUGH),
    0x90: (1, _K.NOP),
}

_TBC1_LEN = np.zeros(256, dtype=np.int32)
_TBC1_KIND = np.full(256, INVALID, dtype=np.int8)
for _op, (_len, _kind) in TBC1_OPCODES.items():
    _TBC1_LEN[_op] = _len
    _TBC1_KIND[_op] = _kind


class TBC1(Decoder):
    name = "tbc1"
    max_length = 3

    def decode_at(self, region: Region, offset: int) -> DecodedInst | None:
        data = region.data
        if not 0 <= offset < len(data):
            raise IndexError(f"offset {offset} outside region of {len(data)} bytes")
        entry = TBC1_OPCODES.get(data[offset])
        if entry is None:
            return None
        length, kind = entry
        if offset + length > len(data):
            return None
        nxt = offset + length
        if kind in (_K.DIRECT_JUMP, _K.COND_JUMP):
            rel = data[offset + 1]
            if rel >= 0x80:
                rel -= 0x100
            target = nxt + rel
            succ = (target,) if kind == _K.DIRECT_JUMP else (nxt, target)
        elif kind in (_K.TERMINATOR, _K.INDIRECT_JUMP):
            succ = ()
        else:
            succ = (nxt,)
        return DecodedInst(offset, length, kind, succ)

    def superset_decode(self, region: Region) -> SupersetDecoding:
        op = np.frombuffer(region.data, dtype=np.uint8)
        n = len(op)
        offsets = np.arange(n, dtype=np.int64)
        kind = _TBC1_KIND[op]
        length = _TBC1_LEN[op]
        truncated = offsets + length > n
        kind[truncated] = INVALID
        length[truncated] = 0
        rel = np.zeros(n, dtype=np.int64)
        if n > 1:
            rel[:-1] = op[1:].view(np.int8)
        target = offsets + 2 + rel
        return SupersetDecoding(kind, length, target)


DECODERS: dict[str, Decoder] = {"tbc1": TBC1()}


def get_decoder(name: str) -> Decoder:
    try:
        return DECODERS[name]
    except KeyError:
        raise ValueError(f"unknown ISA {name!r}; available: {sorted(DECODERS)}") from None


def decode_at(region: Region, offset: int, isa: str = "tbc1") -> DecodedInst | None:
    return get_decoder(isa).decode_at(region, offset)


def superset_decode(region: Region, isa: str = "tbc1") -> SupersetDecoding:
    return get_decoder(isa).superset_decode(region)
