# Turning noisy scores into a consistent disassembly
#
# A model (or a disassembler, via +1/-1 labels) gives each offset a score.
# Pruning keeps the subset with the best total score that has no
# violations at all. Two recurrences are available: "faithful" sums every
# positive child, "exact" lets only one overlapping fall-through child count.

# %%
import numpy as np

from pdtdisasm import analyze, detect_violations, logit_from_probability, prune, prune_oracle
from pdtdisasm.testing import random_region

# op3 at 0 and op2 at 1 overlap and both fall into the ret at 3
data = bytes([0x21, 0x20, 0x00, 0x01])
cfg, forest = analyze(data)
scores = [2.0, 3.0, -1.0, 1.0]
for mode in ("faithful", "exact"):
    print(mode, prune(forest, cfg, scores, mode).to_dict())

# %%
# When overlapping children are individually attractive but cannot both
# stay, the faithful recurrence overrates their parent.
scores = [1.5, 1.5, -1.0, -2.5]
for mode in ("faithful", "exact"):
    print(mode, prune(forest, cfg, scores, mode).to_dict())
print("optimum:", prune_oracle(forest, cfg, scores))

# %%
# Probabilities become scores through the inverse sigmoid.
probs = np.array([0.9, 0.2, 0.5, 0.7])
print(logit_from_probability(probs))

# %%
# On random code with random scores the pruned set is always clean.
rng = np.random.default_rng(0)
data = random_region(rng, 4096)
cfg, forest = analyze(data)
noisy = rng.normal(0, 2, size=len(data))
result = prune(forest, cfg, noisy, "exact")
report = detect_violations(forest, cfg, result.truth(len(data)))
print(len(result.retained), "instructions kept, violations:", report.total)
