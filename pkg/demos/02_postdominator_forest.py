# Post-dominator forests
#
# Each weakly connected component gets its own virtual exit. Nodes with no
# successor feed the exit, and so does one jump inside each loop that
# nothing can leave. Tree edges point at immediate post-dominators.

# %%
from pdtdisasm import analyze, brute_force_postdom, terminal_scc_anchors, wcc_partition

# A-E: four nops and a halt; Z: ret; V: jcc to W or Z; W, X: a nop and a
# jump back to it, a loop with no way out
data = bytes([0x90, 0x90, 0x90, 0x90, 0x00, 0x01, 0x11, 0xFD, 0x90, 0x10, 0xFD])
names = dict(zip([0, 1, 2, 3, 4, 5, 6, 8, 9], "ABCDEZVWX"))

cfg, forest = analyze(data)

# %%
def show(node):
    if node >= len(cfg):
        return f"exit{node - len(cfg)}"
    return names.get(node, f"@{node}")


for v in names:
    print(f"{show(v)} -> {show(forest.ipdom[v])}")

# %%
# The loop W <-> X is anchored at its jump.
for part in wcc_partition(cfg):
    anchors = terminal_scc_anchors(cfg, part)
    print([show(v) for v in part], "anchors:", [show(v) for v in anchors])

# %%
# Everything on A's path to the exit post-dominates A.
print(sorted(show(p) for p in forest.postdominators(0)))

# %%
# The brute-force dataflow solver agrees with the fast construction.
_, slow = brute_force_postdom(cfg)
print("agrees:", (slow == forest.ipdom).all())
print(forest.dump())
