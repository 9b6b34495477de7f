"""Extremal sequences at the critical lengths and their structure.

For the mdic group with n = 0 mod 4 the extremal sequences come in three
shapes, all built from a generating pair (alpha, beta) that satisfies the
defining relations with the same s:

    A  length 2n-1, no n-product-one:    beta^t1 x (n-1), beta^t2 x (n-1), alpha beta^t3
    B  length 3n-1, no 2n-product-one:   beta^t1 x (2n-1), beta^t2 x (n-1), alpha beta^t3
    C  length n, product-one free:       beta x (n-1), alpha beta^t

with gcd(t1 - t2, n) = 1 for A and B.  Verification compares two sets of
automorphism orbits: the orbits found by exhaustive search and the orbits
of all normal-form instances.

Form B is not searched directly.  A 2n-free sequence S of length 3n-1 is
longer than s(G) = 2n, so it holds an n-product-one T, and S - T has no
n-product-one of its own (two disjoint ones would concatenate into a
2n-product-one).  Hence S - T is an A-extremal sequence, and after moving
it to its orbit representative, S = R . T with R an A representative and
T a product-one n-multiset.  Enumerating those pairs is exact, given an
exhaustive A enumeration.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from . import _kernels as K
from .errors import BudgetExceeded, InvalidParams
from .groups import GroupTable, automorphisms, generator_pairs
from .search import DEFAULT_NODE_BUDGET, DFSRunner, Predicate, SearchStats
from .sequences import (
    Sequence,
    canonical_form,
    has_k_product_one,
    is_product_one_free,
    kernel_context,
)


class Which(Enum):
    A = "a"
    B = "b"
    C = "c"

    @classmethod
    def parse(cls, text: str) -> "Which":
        for w in cls:
            if text.lower() == w.value:
                return w
        raise InvalidParams(f"unknown form {text!r}; expected a, b or c")


@dataclass(frozen=True)
class NormalFormWitness:
    alpha: int
    beta: int
    t1: int
    t2: int
    t3: int
    which: Which

    def build(self, G: GroupTable) -> Sequence:
        n = G.spec.n
        b = lambda t: G.power(self.beta, t)  # noqa: E731
        tail = int(G.mul[self.alpha, b(self.t3)])
        mult = [0] * G.order
        if self.which is Which.C:
            mult[self.beta] += n - 1
        else:
            mult[b(self.t1)] += (2 * n - 1) if self.which is Which.B else (n - 1)
            mult[b(self.t2)] += n - 1
        mult[tail] += 1
        return Sequence(G, mult)

    def to_json(self, G: Optional[GroupTable] = None) -> dict:
        out = {"which": self.which.value, "t1": self.t1, "t2": self.t2, "t3": self.t3}
        if G is not None:
            out["alpha"], out["beta"] = G.label(self.alpha), G.label(self.beta)
        else:
            out["alpha"], out["beta"] = self.alpha, self.beta
        return out


@dataclass
class InverseReport:
    which: Which
    enumerated_orbit_reps: list = field(default_factory=list)
    matched: list = field(default_factory=list)
    unmatched_enumerated: list = field(default_factory=list)
    characterized_but_not_free: list = field(default_factory=list)
    missing_from_enumeration: list = field(default_factory=list)
    instances: int = 0
    forward: str = "done"        # done | budget-limited | skipped
    backward: str = "done"       # done | skipped
    method: str = ""
    stats: SearchStats = field(default_factory=SearchStats)

    @property
    def verified(self) -> bool:
        return (self.forward == "done" and self.backward == "done"
                and not self.unmatched_enumerated and not self.characterized_but_not_free
                and not self.missing_from_enumeration)

    def to_json(self, G: GroupTable, timings: bool = False) -> dict:
        return {
            "which": self.which.value,
            "verified": self.verified,
            "forward": self.forward,
            "backward": self.backward,
            "method": self.method,
            "instances": self.instances,
            "enumerated_orbit_reps": [S.to_json() for S in self.enumerated_orbit_reps],
            "matched": [{"sequence": S.to_json(), "witness": w.to_json(G)} for S, w in self.matched],
            "unmatched_enumerated": [S.to_json() for S in self.unmatched_enumerated],
            "characterized_but_not_free": [S.to_json() for S in self.characterized_but_not_free],
            "missing_from_enumeration": [S.to_json() for S in self.missing_from_enumeration],
            "stats": self.stats.to_json(timings),
        }


def _require(G: GroupTable):
    spec = G.spec
    if spec is None or spec.family != "mdic" or spec.n % 4:
        raise InvalidParams("the inverse characterization needs an mdic group with n = 0 mod 4")
    return spec.n


def extremal_length(G: GroupTable, which: Which) -> int:
    n = _require(G)
    return {Which.A: 2 * n - 1, Which.B: 3 * n - 1, Which.C: n}[which]


def is_extremal_free(G: GroupTable, S: Sequence, which: Which) -> bool:
    """The freeness condition of ``which`` (length not checked)."""
    n = G.spec.n
    if which is Which.C:
        return is_product_one_free(G, S)
    return not has_k_product_one(G, S, n if which is Which.A else 2 * n)


def _pairs(G: GroupTable) -> list:
    """Generating pairs with the standard one (x, y) first, the rest in id order."""
    pairs = generator_pairs(G, G.spec.n, G.spec.s)
    std = (G.x, G.y)
    return sorted(pairs, key=lambda p: (p != std, p))


def normal_form_instances(G: GroupTable, which: Which) -> dict:
    """Every literal normal-form multiset, mapped to its first witness."""
    n = _require(G)
    out: dict = {}
    for alpha, beta in _pairs(G):
        if which is Which.C:
            for t in range(n):
                w = NormalFormWitness(alpha, beta, 1, 1, t, which)
                out.setdefault(w.build(G), w)
            continue
        for t1, t2, t3 in itertools.product(range(n), repeat=3):
            if math.gcd(t1 - t2, n) != 1:
                continue
            w = NormalFormWitness(alpha, beta, t1, t2, t3, which)
            out.setdefault(w.build(G), w)
    return out


def match_normal_form(G: GroupTable, S: Sequence, which: Which) -> Optional[NormalFormWitness]:
    """A witness exhibiting S literally as a normal-form multiset, or None."""
    n = _require(G)
    if len(S) != extremal_length(G, which):
        return None
    for alpha, beta in _pairs(G):
        powers = [G.power(beta, t) for t in range(n)]
        for t3 in range(n):
            tail = int(G.mul[alpha, powers[t3]])
            if S.v(tail) < 1:
                continue
            if which is Which.C:
                w = NormalFormWitness(alpha, beta, 1, 1, t3, which)
                if w.build(G) == S:
                    return w
                continue
            for t1, t2 in itertools.product(range(n), repeat=2):
                if math.gcd(t1 - t2, n) != 1:
                    continue
                w = NormalFormWitness(alpha, beta, t1, t2, t3, which)
                if w.build(G) == S:
                    return w
    return None


def _canonical_set(G, seqs, auts) -> list:
    reps = {canonical_form(G, S, auts) for S in seqs}
    return sorted(reps, key=lambda S: S.mult)


def _collect(G, pred, target, auts, budget, workers, checkpoint):
    res = DFSRunner(G, pred, target=target, collect=True, auts=auts, budget=budget,
                    workers=workers, checkpoint_path=checkpoint).run()
    if res.status == "budget":
        raise BudgetExceeded(f"node budget {budget} exhausted during enumeration",
                             checkpoint=checkpoint, nodes=res.stats.nodes)
    return [Sequence.from_terms(G, c) for c in res.collected], res.stats


def _product_one_multisets(G: GroupTable, size: int) -> list:
    """All product-one multisets of the given size, as sorted id arrays."""
    RT, nbytes, _ = kernel_context(G)
    bit = 1 << G.identity
    out = []
    for T in itertools.combinations_with_replacement(range(G.order), size):
        arr = np.asarray(T, dtype=np.int64)
        mask, _ = K.full_product_set(arr, G.order, G.identity, RT, nbytes, 1 << size)
        if int(mask) & bit:
            out.append(arr)
    return out


def _lift_b(G: GroupTable, a_reps: list, auts, budget: int) -> tuple[list, SearchStats]:
    """B-extremal orbit representatives from A representatives (see module notes)."""
    n = G.spec.n
    if kernel_context(G) is None:
        raise BudgetExceeded("lifting needs the bitset kernels")
    count = math.comb(G.order + n - 1, n) * len(a_reps)
    if count > budget:
        raise BudgetExceeded(f"B lift needs {count} candidates, budget {budget}")
    RT, nbytes, inv = kernel_context(G)
    chosen = np.zeros(3 * n, dtype=np.bool_)
    stats = SearchStats()
    found = set()
    Ts = _product_one_multisets(G, n)
    for R in a_reps:
        rt = np.asarray(R.terms(), dtype=np.int64)
        for T in Ts:
            stats.nodes += 1
            S = np.sort(np.concatenate([rt, T]))
            if K.ordered_finder(S, 2 * n, G.identity, inv, RT, nbytes, chosen):
                stats.prunes += 1
                continue
            seq = Sequence.from_terms(G, S)
            if not has_k_product_one(G, seq, 2 * n):
                found.add(canonical_form(G, seq, auts))
    return sorted(found, key=lambda S: S.mult), stats


def enumerate_extremal(G: GroupTable, which: Which, budget: int = DEFAULT_NODE_BUDGET,
                       workers: int = 1, checkpoint: Optional[str] = None,
                       auts=None, direct: bool = False) -> list:
    """Canonical orbit representatives of all extremal sequences of form ``which``."""
    return _enumerate(G, which, budget, workers, checkpoint, auts, direct)[0]


def _enumerate(G, which, budget, workers, checkpoint, auts, direct):
    n = _require(G)
    auts = automorphisms(G) if auts is None else auts
    if which is Which.C:
        seqs, stats = _collect(G, Predicate.free(), n, auts, budget, workers, checkpoint)
        return _canonical_set(G, seqs, auts), stats, "collect-dfs"
    if which is Which.A:
        seqs, stats = _collect(G, Predicate.k_product(n), 2 * n - 1, auts, budget, workers,
                               checkpoint)
        return _canonical_set(G, seqs, auts), stats, "collect-dfs"
    if direct:
        seqs, stats = _collect(G, Predicate.k_product(2 * n), 3 * n - 1, auts, budget, workers,
                               checkpoint)
        return _canonical_set(G, seqs, auts), stats, "collect-dfs"
    a_reps, a_stats, _ = _enumerate(G, Which.A, budget, workers, None, auts, False)
    reps, stats = _lift_b(G, a_reps, auts, budget)
    stats.nodes += a_stats.nodes
    stats.prunes += a_stats.prunes
    return reps, stats, "a-lift"


def verify_inverse_theorem(G: GroupTable, which: Which, budget: int = DEFAULT_NODE_BUDGET,
                           workers: int = 1, checkpoint: Optional[str] = None,
                           forward: bool = True, backward: bool = True,
                           direct: bool = False) -> InverseReport:
    """Compare enumerated extremal orbits with the normal-form orbits.

    ``backward`` checks every normal-form instance with the exact DP.
    ``forward`` enumerates extremal orbits and matches each against the
    normal forms; an exhausted budget is reported as budget-limited instead
    of raising.
    """
    _require(G)
    auts = automorphisms(G)
    report = InverseReport(which)
    instances = normal_form_instances(G, which)
    report.instances = len(instances)
    if backward:
        report.characterized_but_not_free = [
            S for S in sorted(instances, key=lambda S: S.mult) if not is_extremal_free(G, S, which)]
    else:
        report.backward = "skipped"
    if not forward:
        report.forward = "skipped"
        return report
    try:
        reps, stats, method = _enumerate(G, which, budget, workers, checkpoint, auts, direct)
    except BudgetExceeded:
        report.forward = "budget-limited"
        return report
    report.enumerated_orbit_reps = reps
    report.stats = stats
    report.method = method
    for S in reps:
        w = match_normal_form(G, S, which)
        if w is None:
            report.unmatched_enumerated.append(S)
        else:
            report.matched.append((S, w))
    rep_set = set(reps)
    instance_orbits = _canonical_set(G, instances, auts)
    report.missing_from_enumeration = [
        S for S in instance_orbits if S not in rep_set and is_extremal_free(G, S, which)]
    return report
