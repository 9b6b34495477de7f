import itertools
import json
import math

import pytest

from zerosum.errors import BudgetExceeded
from zerosum.groups import GroupSpec, automorphisms, build_group
from zerosum.search import DFSRunner, Predicate
from zerosum.sequences import (
    Sequence,
    has_k_product_one,
    has_short_product_one,
    is_product_one_free,
)

SMALL = [GroupSpec.cyclic(5), GroupSpec.cyclic(6), GroupSpec.dicyclic(2),
         GroupSpec.c2xc2n(1), GroupSpec.c2xc2n(2), GroupSpec.dicyclic(3)]


def _avoids(G, S, pred):
    if pred.code == Predicate.free().code:
        return is_product_one_free(G, S)
    if pred.code == Predicate.short(1).code:
        return not has_short_product_one(G, S)
    return not has_k_product_one(G, S, pred.k)


def _brute_max(G, pred, cap):
    """Longest multiset (length <= cap) avoiding ``pred``, by plain enumeration."""
    best = 0
    for L in range(1, cap + 1):
        if not any(_avoids(G, Sequence.from_terms(G, c), pred)
                   for c in itertools.combinations_with_replacement(range(G.order), L)):
            break
        best = L
    return best


@pytest.mark.parametrize("spec", SMALL)
@pytest.mark.parametrize("kind", ["free", "short", "egz"])
def test_max_depth_matches_enumeration(spec, kind):
    G = build_group(spec)
    pred = {"free": Predicate.free(), "short": Predicate.short(G.exponent),
            "egz": Predicate.k_product(G.exponent)}[kind]
    deepest = DFSRunner(G, pred).run()
    assert deepest.status == "done"
    if math.comb(G.order + len(deepest.best), len(deepest.best) + 1) > 100_000:
        pytest.skip("enumeration oracle too large")
    assert len(deepest.best) == _brute_max(G, pred, len(deepest.best) + 1)
    assert _avoids(G, Sequence.from_terms(G, deepest.best), pred)
    # orbit reduction must not change the answer
    plain = DFSRunner(G, pred, auts=[tuple(range(G.order))]).run()
    assert len(plain.best) == len(deepest.best)
    assert plain.stats.nodes >= deepest.stats.nodes


def test_collect_matches_enumeration_without_symmetry():
    G = build_group(GroupSpec.dicyclic(2))
    pred = Predicate.k_product(4)
    target = 5
    res = DFSRunner(G, pred, target=target, collect=True, auts=[tuple(range(8))]).run()
    got = {tuple(c) for c in res.collected}
    want = {c for c in itertools.combinations_with_replacement(range(8), target)
            if not has_k_product_one(G, Sequence.from_terms(G, c), 4)}
    assert got == want


def _orbit_cover(G, pred, target, auts):
    res = DFSRunner(G, pred, target=target, collect=True, auts=auts).run()
    reps = {Sequence.from_terms(G, c) for c in res.collected}
    return {S.apply(p) for S in reps for p in auts}


def test_collect_covers_every_orbit_against_enumeration():
    G = build_group(GroupSpec.dicyclic(2))
    auts = automorphisms(G)
    covered = _orbit_cover(G, Predicate.k_product(4), 6, auts)
    want = {Sequence.from_terms(G, c) for c in itertools.combinations_with_replacement(range(8), 6)
            if not has_k_product_one(G, Sequence.from_terms(G, c), 4)}
    assert covered == want


@pytest.mark.parametrize("pred,target", [(Predicate.free(), 8), (Predicate.k_product(8), 15)])
def test_collect_covers_every_orbit(G8, auts8, pred, target):
    covered = _orbit_cover(G8, pred, target, auts8)
    plain = DFSRunner(G8, pred, target=target, collect=True, auts=[tuple(range(16))]).run()
    assert covered == {Sequence.from_terms(G8, c) for c in plain.collected}


def test_target_mode_finds_and_reports_none(G8):
    free_pred = Predicate.free()
    hit = DFSRunner(G8, free_pred, target=8).run()
    assert hit.status == "found" and len(hit.found) == 8
    assert is_product_one_free(G8, Sequence.from_terms(G8, hit.found))
    miss = DFSRunner(G8, free_pred, target=9).run()
    assert miss.status == "done" and miss.found is None


def test_unbounded_predicate_rejected():
    G = build_group(GroupSpec.cyclic(8))
    with pytest.raises(ValueError):
        DFSRunner(G, Predicate.k_product(3)).run()


def test_budget_and_resume(tmp_path, G8):
    pred = Predicate.k_product(8)
    full = DFSRunner(G8, pred).run()
    ck = tmp_path / "ck.json"
    first = DFSRunner(G8, pred, budget=20_000, checkpoint_path=str(ck), checkpoint_every=5_000).run()
    assert first.status == "budget"
    assert json.loads(ck.read_text())["partial"]
    resumed = DFSRunner(G8, pred, checkpoint_path=str(ck), checkpoint_every=50_000).run()
    assert resumed.status == "done"
    assert resumed.stats.nodes == full.stats.nodes
    assert resumed.best == full.best


def test_budget_is_a_hard_node_count(G8):
    res = DFSRunner(G8, Predicate.k_product(8), budget=1000).run()
    assert res.status == "budget"
    assert res.stats.nodes <= 1000 + len(res.checkpoint["partial"])


def test_worker_count_does_not_change_result(G8):
    pred = Predicate.short(8)
    one = DFSRunner(G8, pred, workers=1).run()
    two = DFSRunner(G8, pred, workers=2).run()
    assert (one.status, one.best, one.stats.nodes, one.stats.prunes) == \
        (two.status, two.best, two.stats.nodes, two.stats.prunes)


def test_automorphism_order_does_not_change_result(G8, auts8):
    pred = Predicate.free()
    a = DFSRunner(G8, pred, auts=auts8).run()
    b = DFSRunner(G8, pred, auts=list(reversed(auts8))).run()
    assert a.best == b.best and a.stats.nodes == b.stats.nodes


def test_large_group_refused():
    G = build_group(GroupSpec.mdic(40, 9))
    with pytest.raises(BudgetExceeded):
        DFSRunner(G, Predicate.free(), auts=[tuple(range(G.order))])
