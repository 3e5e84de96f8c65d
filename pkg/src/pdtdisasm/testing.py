"""Random TBC-1 regions for property tests, benchmarks and demos."""

from __future__ import annotations

import numpy as np

from .isa import TBC1_OPCODES

_OPCODES = np.array(sorted(TBC1_OPCODES), dtype=np.uint8)


def random_region(rng: np.random.Generator, size: int,
                  p_opcode: float = 0.55, p_small: float = 0.35,
                  reach: int = 12) -> bytes:
    """Bytes biased towards valid TBC-1 code.

    Each byte is a TBC-1 opcode with probability ``p_opcode``, a small
    signed value in ``[-reach, reach]`` with probability ``p_small`` (so
    relative jumps mostly stay inside short regions) and uniform noise
    otherwise.
    """
    pick = rng.random(size)
    out = rng.integers(0, 256, size=size, dtype=np.int64)
    ops = pick < p_opcode
    small = (pick >= p_opcode) & (pick < p_opcode + p_small)
    out[ops] = rng.choice(_OPCODES, size=int(ops.sum()))
    out[small] = rng.integers(-reach, reach + 1, size=int(small.sum())) & 0xFF
    return out.astype(np.uint8).tobytes()
