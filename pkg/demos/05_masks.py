# Features for a learned model: attention masks and connections
#
# The reachability mask links offsets that lie on one straight-line
# execution trace. The overlap mask links offsets whose bytes intersect.
# The global adjacency lists, per offset, the next instruction on every
# edge type.

# %%
import tempfile
from pathlib import Path

from pdtdisasm import (analyze, global_connections, overlap_mask, read_mask,
                       reachability_mask, reachability_sets, write_mask)
from pdtdisasm.masks import REACH_MAGIC

# two interleaved chains of op2 instructions, on even and odd offsets
data = bytes([0x20] * 8 + [0x01, 0x01])
cfg, _ = analyze(data)
print(reachability_sets(cfg, max_steps=64)[:2])

# %%
reach = reachability_mask(cfg, w=4)
for i in range(len(data)):
    print(i, reach.neighbours(i))

# %%
over = overlap_mask(cfg, w=4)
for i in range(len(data)):
    print(i, over.neighbours(i))

# %%
# Slots are must, may, may, next; -1 marks an absent connection.
print(global_connections(analyze(bytes([0x11, 0x01, 0x90, 0x00]))[0]))

# %%
# Masks are stored as bit-packed rows behind a 16-byte header.
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "reach.bin"
    write_mask(path, reach, REACH_MAGIC)
    print(path.stat().st_size, "bytes")
    magic, again = read_mask(path)
    print(magic, (again.rows == reach.rows).all())
