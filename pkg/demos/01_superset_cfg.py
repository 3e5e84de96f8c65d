# Superset decoding and the superset control-flow graph
#
# Every byte offset of a region is treated as a possible instruction start.
# The toy TBC-1 instruction set keeps the decoding exact, so each step can
# be checked by hand.

# %%
import numpy as np

from pdtdisasm import InstKind, Region, build_cfg, superset_decode, wcc_partition
from pdtdisasm.cli import render_cfg

# nop nop jcc(+1) nop ret, with a stray 0xff at the end
data = bytes([0x90, 0x90, 0x11, 0x01, 0x90, 0x01, 0xFF])
decoded = superset_decode(Region(data))
for offset in range(len(data)):
    print(offset, decoded[offset])

# %%
# The CFG drops call-target edges, drops jump targets outside the region and
# turns any instruction running off the end into an invalid node.
cfg = build_cfg(decoded, len(data))
print(render_cfg(cfg))

# %%
# Offset 3 is the jcc operand byte 0x01, which also decodes as a ret.
print("kind at 3:", cfg.kind_of(3))
print("successors of the jcc:", cfg.successors(2))

# %%
# Weakly connected components split the graph into independent pieces.
for k, part in enumerate(wcc_partition(cfg)):
    print(f"component {k}: {part.tolist()}")

# %%
# The kind array is a plain numpy array, so summaries are one-liners.
kinds, counts = np.unique(cfg.kind[~cfg.invalid], return_counts=True)
print({InstKind(k).name: int(c) for k, c in zip(kinds, counts)})
