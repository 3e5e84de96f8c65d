"""Post-dominator based consistency checking and pruning for superset disassembly."""

from .detect import (FALSE, IGNORE, TRUE, RateSummary, ViolationReport,
                     aggregate_rates, detect_violations, truth_from_scores)
from .errors import InputError, InvariantError
from .isa import (INVALID, TBC1, DecodedInst, Decoder, InstKind, Region,
                  decode_at, get_decoder, superset_decode)
from .masks import (WindowMask, global_connections, overlap_mask, read_global,
                    read_mask, reachability_mask, reachability_sets, write_global,
                    write_mask)
from .pdt import (PostDomForest, brute_force_postdom, build_pdt,
                  terminal_scc_anchors)
from .prune import (NEG, PrunedResult, assign_weights, prune, prune_forest,
                    prune_oracle, propagate_weights)
from .scores import (EvalResult, evaluate, labels_to_scores, load_labels,
                     load_scores, logit_from_probability, sigmoid, write_labels,
                     write_scores)
from .supercfg import SupersetCFG, build_cfg, wcc_partition

__version__ = "0.1.0"


def analyze(data: bytes, isa: str = "tbc1", workers: int = 1):
    """Decode every offset of ``data`` and build the CFG and post-dominator forest."""
    decoded = get_decoder(isa).superset_decode(Region(bytes(data)))
    cfg = build_cfg(decoded)
    return cfg, build_pdt(cfg, workers=workers)


__all__ = [name for name in dir() if not name.startswith("_")]
