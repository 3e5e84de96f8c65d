# Checking a disassembly for structural violations
#
# A disassembly says which offsets are instruction starts. Four kinds of
# mistake are visible on the post-dominator forest:
#   M  an instruction whose post-dominator was left out
#   N  the same, when the left-out instruction is a nop
#   D  an instruction that can only run into undecodable bytes
#   O  two overlapping instructions that fall into the same successor

# %%
import numpy as np

from pdtdisasm import aggregate_rates, analyze, detect_violations


def check(data, starts):
    cfg, forest = analyze(data)
    truth = np.zeros(len(cfg), dtype=np.int8)
    truth[starts] = 1
    return detect_violations(forest, cfg, truth)


# jmp at 0 lands on 4, which was not marked
print("missing:", check(bytes([0x10, 0x02, 0x00, 0x00, 0x01]), [0]).to_dict())

# %%
# three nops running into 0xff
print("dead end:", check(bytes([0x90, 0x90, 0x90, 0xFF]), [0, 1, 2]).to_dict())

# %%
# op3 at 0 and op2 at 1 both end at the ret at 3
print("overlap:", check(bytes([0x21, 0x20, 0x00, 0x01]), [0, 1, 3]).to_dict())

# %%
# a skipped nop is reported separately
print("nop:", check(bytes([0x20, 0x00, 0x90, 0x01]), [0, 3]).to_dict())

# %%
# Rates over a corpus: share of files with any violation, and violations
# per MiB of code.
reports = [
    check(bytes([0x10, 0x02, 0x00, 0x00, 0x01]), [0]),
    check(bytes([0x90, 0x90, 0x90, 0xFF]), [0, 1, 2]),
    check(bytes([0x21, 0x20, 0x00, 0x01]), [0, 3]),
]
summary = aggregate_rates(reports)
print("file error rate:", summary.file_error_rate)
print("errors per MiB:", summary.errors_per_mib["total"], "=", float(summary.errors_per_mib["total"]))
