import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pdtdisasm import InstKind, Region, decode_at, superset_decode
from pdtdisasm.isa import TBC1, DecodedInst, Decoder, get_decoder
from pdtdisasm.testing import random_region


def test_self_loop_jump():
    inst = decode_at(Region(bytes([0x10, 0xFE])), 0)
    assert inst == DecodedInst(0, 2, InstKind.DIRECT_JUMP, (0,))


def test_nop():
    inst = decode_at(Region(bytes([0x90])), 0)
    assert inst.kind == InstKind.NOP
    assert inst.length == 1
    assert inst.successors == (1,)


def test_truncated_op3_is_undecodable():
    assert decode_at(Region(bytes([0x21, 0x00])), 0) is None


@pytest.mark.parametrize("data,kind,length,succ", [
    ([0x00], InstKind.TERMINATOR, 1, ()),
    ([0x01], InstKind.TERMINATOR, 1, ()),
    ([0x02], InstKind.INDIRECT_JUMP, 1, ()),
    ([0x10, 0x05], InstKind.DIRECT_JUMP, 2, (7,)),
    ([0x11, 0x80], InstKind.COND_JUMP, 2, (2, -126)),
    ([0x12, 0x40], InstKind.DIRECT_CALL, 2, (2,)),
    ([0x13], InstKind.INDIRECT_CALL, 1, (1,)),
    ([0x20, 0xAA], InstKind.FALL_THROUGH, 2, (2,)),
    ([0x21, 0xAA, 0xBB], InstKind.FALL_THROUGH, 3, (3,)),
])
def test_opcode_table(data, kind, length, succ):
    inst = decode_at(Region(bytes(data)), 0)
    assert (inst.kind, inst.length, inst.successors) == (kind, length, succ)


@pytest.mark.parametrize("op", [0x03, 0x14, 0x22, 0x8F, 0x91, 0xFF])
def test_unknown_opcodes(op):
    assert decode_at(Region(bytes([op, 0, 0])), 0) is None


def test_offset_out_of_range():
    with pytest.raises(IndexError):
        decode_at(Region(b"\x90"), 1)


def test_superset_three_nops():
    dec = superset_decode(Region(b"\x90\x90\x90"))
    assert list(dec) == [0, 1, 2]
    assert all(dec[o].kind == InstKind.NOP for o in dec)


def test_superset_empty():
    assert len(superset_decode(Region(b""))) == 0


def test_fall_through_like_kinds():
    ft = {k for k in InstKind if k.is_fall_through_like}
    assert ft == {InstKind.FALL_THROUGH, InstKind.NOP, InstKind.DIRECT_CALL, InstKind.INDIRECT_CALL}
    assert all(k.is_control_flow != k.is_fall_through_like for k in InstKind)


def test_base_does_not_change_decoding():
    data = bytes([0x11, 0x02, 0x90, 0x00, 0x01])
    a = superset_decode(Region(data, base=0))
    b = superset_decode(Region(data, base=0x401000))
    assert [a[o] for o in a] == [b[o] for o in b]


def test_unknown_isa():
    with pytest.raises(ValueError):
        get_decoder("x86")


@settings(max_examples=200, deadline=None)
@given(st.binary(min_size=0, max_size=64))
def test_superset_matches_decode_at_pointwise(data):
    region = Region(data)
    dec = superset_decode(region)
    assert len(dec) == len(data)
    for o in range(len(data)):
        assert dec[o] == decode_at(region, o)


def test_pointwise_on_biased_buffers(rng):
    for _ in range(50):
        region = Region(random_region(rng, 64))
        dec = superset_decode(region)
        for o in range(64):
            assert dec[o] == decode_at(region, o)


def test_generic_decoder_loop_agrees_with_vectorised():
    class Slow(Decoder):
        max_length = 3

        def decode_at(self, region, offset):
            return TBC1().decode_at(region, offset)

    region = Region(bytes(range(256)) * 2)
    fast = superset_decode(region)
    slow = Slow().superset_decode(region)
    assert [fast[o] for o in fast] == [slow[o] for o in slow]


@settings(max_examples=100, deadline=None)
@given(st.binary(min_size=1, max_size=32))
def test_fall_through_like_successor_is_next(data):
    region = Region(data)
    for o in range(len(data)):
        inst = decode_at(region, o)
        if inst is not None and inst.kind.is_fall_through_like:
            assert inst.successors == (o + inst.length,)


def test_superset_is_deterministic(rng):
    data = random_region(rng, 512)
    a, b = superset_decode(Region(data)), superset_decode(Region(data))
    assert np.array_equal(a.kind, b.kind) and np.array_equal(a.length, b.length)
