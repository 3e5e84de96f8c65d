import numpy as np
import pytest
from oracles import random_cases
from patterns import LOOP_FOREST, A, B, C, D, E, V, W, X, Z

from pdtdisasm import (InstKind, Region, SupersetCFG, analyze, brute_force_postdom,
                       build_cfg, build_pdt, superset_decode, terminal_scc_anchors,
                       wcc_partition)
from pdtdisasm.errors import InvariantError
from pdtdisasm.pdt import anchor_mask, lengauer_tarjan, scc_info
from pdtdisasm.testing import random_region


def test_loop_forest_shape():
    cfg, forest = analyze(LOOP_FOREST)
    assert forest.ipdom[A] == B
    assert forest.postdominators(A) >= {B, C, D, E}
    assert forest.ipdom[E] == forest.exit_of(E)
    assert forest.ipdom[Z] == forest.exit_of(Z)
    assert forest.ipdom[W] == X
    assert forest.ipdom[X] == forest.exit_of(X)
    assert forest.ipdom[V] == forest.exit_of(V)


def test_loop_anchor_is_the_jump():
    cfg, _ = analyze(LOOP_FOREST)
    parts = {int(p.min()): p for p in wcc_partition(cfg)}
    assert terminal_scc_anchors(cfg, parts[Z]).tolist() == [Z, X]
    assert terminal_scc_anchors(cfg, parts[A]).tolist() == [E]


def test_single_halt_anchor():
    cfg, _ = analyze(b"\x00")
    assert terminal_scc_anchors(cfg, [0]).tolist() == [0]


def test_nop_chain_to_ret_anchor():
    cfg, _ = analyze(b"\x90\x90\x90\x01")
    assert terminal_scc_anchors(cfg, [0, 1, 2, 3]).tolist() == [3]


def test_two_node_chain():
    cfg, forest = analyze(b"\x90\x00")
    assert forest.ipdom.tolist() == [1, forest.exit_of(1)]
    assert forest.n_wcc == 1


def test_diamond_merge_point():
    # 0 jcc -> 2 / 3 ; 2 nop -> 3 ; 3 ret
    cfg, forest = analyze(bytes([0x11, 0x01, 0x90, 0x01]))
    assert cfg.successors(0) == [2, 3]
    pd, ipdom = brute_force_postdom(cfg)
    assert 3 in pd[0]
    assert forest.ipdom[0] == 3


def test_self_loop_jump_postdominators():
    cfg, forest = analyze(bytes([0x10, 0xFE]))
    pd, ipdom = brute_force_postdom(cfg)
    exit_id = forest.exit_of(0)
    assert pd[0] == {0, exit_id}
    assert forest.ipdom[0] == exit_id


def test_empty_region():
    cfg, forest = analyze(b"")
    assert forest.n_wcc == 0 and len(forest.ipdom) == 0


def test_invalid_nodes_hang_off_their_exit():
    for data, cfg, forest in random_cases(11, 60):
        inv = np.flatnonzero(cfg.invalid)
        assert np.array_equal(forest.ipdom[inv], len(cfg) + forest.wcc_of[inv])


def test_fall_through_like_ipdom_is_next_instruction():
    for data, cfg, forest in random_cases(12, 60):
        ft = np.flatnonzero(cfg.fall_through_like)
        assert np.array_equal(forest.ipdom[ft], ft + cfg.length[ft])


def test_tree_is_rooted_per_component():
    for data, cfg, forest in random_cases(13, 60):
        n = len(cfg)
        for v in range(n):
            chain = forest.ancestors(v)
            assert chain[-1] == forest.exit_of(v)
            assert all(a < n for a in chain[:-1])
            assert len(set(chain)) == len(chain)
        # children lists agree with parents, ascending
        seen = 0
        for node in range(forest.n_nodes):
            kids = forest.children(node).tolist()
            assert kids == sorted(kids)
            assert all(forest.ipdom[k] == node for k in kids)
            seen += len(kids)
        assert seen == n


def test_matches_brute_force():
    for data, cfg, forest in random_cases(14, 150):
        _, ipdom = brute_force_postdom(cfg)
        assert np.array_equal(forest.ipdom, ipdom), data.hex()


def test_random_corpus_exercises_loops_and_merges():
    loops = merges = 0
    for data, cfg, forest in random_cases(14, 150):
        info = scc_info(cfg)
        loops += int(np.sum(info.terminal & info.cyclic))
        jcc = np.flatnonzero(cfg.kind == InstKind.COND_JUMP)
        merges += int(np.sum(forest.ipdom[jcc] < len(cfg)))
    assert loops >= 10 and merges >= 100


def test_component_isolation(rng):
    for _ in range(30):
        cfg, forest = analyze(random_region(rng, 200))
        parts = wcc_partition(cfg)
        drop = parts[int(rng.integers(len(parts)))]
        kind = cfg.kind.copy()
        succ = cfg.succ.copy()
        length = cfg.length.copy()
        kind[drop] = -1
        succ[drop] = -1
        length[drop] = 0
        reduced = SupersetCFG(kind, length, succ)
        forest2 = build_pdt(reduced)
        n = len(cfg)
        keep = np.setdiff1d(np.arange(n), drop)

        def canon(f, v):
            p = int(f.ipdom[v])
            return p if p < n else ("exit", int(np.flatnonzero(f.wcc_of == p - n).min()))

        assert [canon(forest, v) for v in keep] == [canon(forest2, v) for v in keep]


def test_parallel_build_matches_serial(rng):
    cfg, _ = analyze(random_region(rng, 1 << 16))
    serial = build_pdt(cfg, workers=1)
    parallel = build_pdt(cfg, workers=3)
    assert np.array_equal(serial.ipdom, parallel.ipdom)
    assert np.array_equal(serial.wcc_of, parallel.wcc_of)


def test_dump_format():
    _, forest = analyze(b"\x90\x00")
    assert forest.dump() == "0 -> 1\n1 -> exit0\n"
    assert forest.dump(base=0x1000) == "4096 -> 4097\n4097 -> exit0\n"


def test_loop_without_jump_is_rejected():
    # two fall-through nodes pointing at each other cannot come from a decoder
    cfg = SupersetCFG.from_successors(
        [InstKind.FALL_THROUGH, InstKind.FALL_THROUGH], [1, 1], [[1], [0]])
    with pytest.raises(InvariantError):
        anchor_mask(cfg)


def test_lengauer_tarjan_textbook_graph():
    # loop with a diamond inside; idoms checked by hand
    # 0->1, 1->2, 1->3, 2->4, 3->4, 4->1, 4->5
    edges = {0: [1], 1: [2, 3], 2: [4], 3: [4], 4: [1, 5], 5: []}
    n = 6
    succ_ptr, succ_idx = [0], []
    pred = {v: [] for v in range(n)}
    for v in range(n):
        succ_idx += edges[v]
        succ_ptr.append(len(succ_idx))
        for w in edges[v]:
            pred[w].append(v)
    pred_ptr, pred_idx = [0], []
    for v in range(n):
        pred_idx += pred[v]
        pred_ptr.append(len(pred_idx))
    idom = lengauer_tarjan(n, 0, succ_ptr, succ_idx, pred_ptr, pred_idx)
    assert idom == [-1, 0, 1, 1, 1, 4]


def test_brute_force_size_limit():
    cfg = build_cfg(superset_decode(Region(bytes(5000))))
    with pytest.raises(ValueError):
        brute_force_postdom(cfg)
