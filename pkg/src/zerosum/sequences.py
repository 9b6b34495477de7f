"""Sequences over a group and exact product-one decisions.

A sequence is a multiset of group elements, stored as a multiplicity vector.
All exact questions go through one sub-multiset DP:

    pi(T) = union over g in supp(T) of pi(T - g) * g,   pi(empty) = {1}

memoised over every sub-multiset T of S.  The empty product is internal to
the DP; the public profile only reports lengths >= 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Optional, Sequence as Seq

import numpy as np

from . import _kernels as K
from .errors import BudgetExceeded, CertificateError, RepsNotTransversal
from .groups import GroupTable, SubgroupHandle, evaluate_word

DP_STATE_CAP = 1 << 24
HEURISTIC_SHUFFLES = 64
DEFAULT_SEED = 20240531


@lru_cache(maxsize=64)
def kernel_context(G: GroupTable):
    """(RT, nbytes, inv) for the bitset kernels, or None if the group is too big."""
    if G.order > K.MAX_KERNEL_ORDER:
        return None
    RT = K.rmul_tables(G.mul)
    return RT, (G.order + 7) // 8, np.asarray(G.inv, dtype=np.int64)


class Sequence:
    """Immutable multiset over ``group``; ``mult[g]`` is the multiplicity of g."""

    __slots__ = ("group", "mult", "_hash")

    def __init__(self, group: GroupTable, mult: Iterable[int]):
        mult = tuple(int(v) for v in mult)
        if len(mult) != group.order:
            raise ValueError("multiplicity vector must have one entry per element")
        if any(v < 0 for v in mult):
            raise ValueError("multiplicities must be non-negative")
        self.group = group
        self.mult = mult
        self._hash = None

    @classmethod
    def from_terms(cls, group: GroupTable, terms: Iterable[int]) -> "Sequence":
        mult = [0] * group.order
        for g in terms:
            mult[int(g)] += 1
        return cls(group, mult)

    @classmethod
    def from_labels(cls, group: GroupTable, spec: dict) -> "Sequence":
        """``{"y^1": 7, "x*y^0": 1}`` style construction."""
        mult = [0] * group.order
        for lab, m in spec.items():
            mult[group.element(lab)] += int(m)
        return cls(group, mult)

    def __len__(self) -> int:
        return sum(self.mult)

    @property
    def length(self) -> int:
        return len(self)

    def terms(self) -> list[int]:
        """Terms in non-decreasing id order."""
        out = []
        for g, m in enumerate(self.mult):
            out.extend([g] * m)
        return out

    def support(self) -> list[int]:
        return [g for g, m in enumerate(self.mult) if m]

    def v(self, g: int) -> int:
        return self.mult[g]

    def __mul__(self, other: "Sequence") -> "Sequence":
        """Concatenation ``S . T``."""
        return Sequence(self.group, (a + b for a, b in zip(self.mult, other.mult)))

    def append(self, g: int, times: int = 1) -> "Sequence":
        mult = list(self.mult)
        mult[g] += times
        return Sequence(self.group, mult)

    def remove(self, other: "Sequence") -> "Sequence":
        return Sequence(self.group, (a - b for a, b in zip(self.mult, other.mult)))

    def divides(self, other: "Sequence") -> bool:
        """``self | other``."""
        return all(a <= b for a, b in zip(self.mult, other.mult))

    def apply(self, perm: Seq[int]) -> "Sequence":
        mult = [0] * len(self.mult)
        for g, m in enumerate(self.mult):
            mult[perm[g]] += m
        return Sequence(self.group, mult)

    def dp_states(self) -> int:
        return math.prod(m + 1 for m in self.mult)

    def __eq__(self, other) -> bool:
        return isinstance(other, Sequence) and self.group is other.group and self.mult == other.mult

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self.mult)
        return self._hash

    def __repr__(self) -> str:
        return f"Sequence({self.pretty()})"

    def pretty(self) -> str:
        parts = []
        for g, m in enumerate(self.mult):
            if m:
                lab = self.group.label(g)
                parts.append(lab if m == 1 else f"({lab})^[{m}]")
        return " . ".join(parts) if parts else "<empty>"

    def to_json(self) -> dict:
        G = self.group
        terms = []
        for g, m in enumerate(self.mult):
            if not m:
                continue
            if G.cyclic_order is not None:
                has_x, k = G.decompose(g)
                terms.append({"e": "xy" if has_x else "y", "k": k, "mult": m})
            else:
                terms.append({"label": G.label(g), "mult": m})
        out = {"terms": terms}
        if G.spec is not None:
            out["group"] = G.spec.to_json()
        return out


@dataclass(frozen=True)
class Certificate:
    """Ordered terms whose left-to-right product is the identity."""

    terms: tuple
    claimed_length: int
    group: GroupTable
    verified: bool = False

    @classmethod
    def build(cls, G: GroupTable, terms: Iterable[int], source: Optional[Sequence] = None) -> "Certificate":
        terms = tuple(int(t) for t in terms)
        cert = cls(terms, len(terms), G)
        cert.check(source)
        return cls(terms, len(terms), G, True)

    def __len__(self) -> int:
        return len(self.terms)

    def check(self, source: Optional[Sequence] = None) -> None:
        if self.claimed_length != len(self.terms):
            raise CertificateError("claimed length differs from term count")
        if evaluate_word(self.group, self.terms) != self.group.identity:
            raise CertificateError(f"certificate product is not 1: {self.labels()}")
        if source is not None and not self.as_sequence().divides(source):
            raise CertificateError("certificate terms are not a subsequence of the source")

    def is_valid(self, source: Optional[Sequence] = None) -> bool:
        try:
            self.check(source)
        except CertificateError:
            return False
        return True

    def as_sequence(self) -> Sequence:
        return Sequence.from_terms(self.group, self.terms)

    def labels(self) -> list[str]:
        return [self.group.label(t) for t in self.terms]


@dataclass(frozen=True)
class SubproductProfile:
    """``reachable[l, h]``: h is a product of some length-l subsequence.

    Row 0 is unused (always False); rows run to the sequence length.
    """

    reachable: np.ndarray
    exact: bool = True

    @property
    def length(self) -> int:
        return self.reachable.shape[0] - 1

    def row(self, l: int) -> set[int]:
        return set(int(h) for h in np.nonzero(self.reachable[l])[0])

    def union(self) -> set[int]:
        """Pi(S)."""
        return set(int(h) for h in np.nonzero(self.reachable[1:].any(axis=0))[0])

    def contains(self, l: int, h: int) -> bool:
        return 0 < l <= self.length and bool(self.reachable[l, h])


@dataclass(frozen=True)
class CosetProfile:
    m1: int
    m2: int
    m3: int
    m4: int

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.m1, self.m2, self.m3, self.m4)

    @property
    def total(self) -> int:
        return self.m1 + self.m2 + self.m3 + self.m4


def _check_budget(S: Sequence, cap: int) -> int:
    states = S.dp_states()
    if states > cap:
        raise BudgetExceeded(
            f"sub-multiset DP needs {states} states (cap {cap}); use the heuristic finder",
            nodes=states,
        )
    return states


def _mask_to_set(mask: int, order: int) -> set[int]:
    mask = int(mask)
    return {h for h in range(order) if (mask >> h) & 1}


def _profile_masks_py(G: GroupTable, terms: list[int]) -> list[int]:
    """Pure-Python fallback of the kernel DP (Python ints as bitsets)."""
    L = len(terms)
    pi = [0] * (L + 1)
    pi[0] = 1 << G.identity
    mul = G.mul

    def rmul(mask: int, g: int) -> int:
        r = 0
        while mask:
            low = mask & -mask
            h = low.bit_length() - 1
            r |= 1 << int(mul[h, g])
            mask ^= low
        return r

    support = []
    for g in terms:
        if support and support[-1][0] == g:
            support[-1][1] += 1
        else:
            support.append([g, 1])
    radices = [m + 1 for _, m in support]
    strides = []
    acc = 1
    for r in radices:
        strides.append(acc)
        acc *= r
    table = [0] * acc
    sizes = [0] * acc
    for idx in range(acc):
        if idx == 0:
            table[0] = 1 << G.identity
            continue
        val = 0
        size = 0
        for (g, _), st, r in zip(support, strides, radices):
            digit = (idx // st) % r
            if digit:
                val |= rmul(table[idx - st], g)
                size += digit
        table[idx] = val
        sizes[idx] = size
        pi[size] |= val
    return pi


def _profile_masks(G: GroupTable, S: Sequence, cap: int) -> list[int]:
    states = _check_budget(S, cap)
    terms = S.terms()
    ctx = kernel_context(G)
    if ctx is None:
        return _profile_masks_py(G, terms)
    RT, nbytes, _ = ctx
    pi, ok = K.profile_dp(np.asarray(terms, dtype=np.int64), G.order, G.identity, RT, nbytes,
                          max(states, 1))
    if not ok:  # pragma: no cover - capacity is exact
        raise BudgetExceeded("DP capacity exhausted")
    return [int(v) for v in pi]


def product_set(G: GroupTable, S: Sequence, cap: int = DP_STATE_CAP) -> set[int]:
    """pi(S): products of all orderings of the whole sequence."""
    if len(S) < 1:
        raise ValueError("product_set needs a non-empty sequence")
    masks = _profile_masks(G, S, cap)
    return _mask_to_set(masks[len(S)], G.order)


def subproduct_profile(G: GroupTable, S: Sequence, cap: int = DP_STATE_CAP) -> SubproductProfile:
    L = len(S)
    masks = _profile_masks(G, S, cap) if L else [1 << G.identity]
    reach = np.zeros((L + 1, G.order), dtype=bool)
    for l in range(1, L + 1):
        m = masks[l]
        for h in range(G.order):
            if (m >> h) & 1:
                reach[l, h] = True
    reach.setflags(write=False)
    return SubproductProfile(reach, True)


def is_product_one_free(G: GroupTable, S: Sequence, cap: int = DP_STATE_CAP) -> bool:
    if len(S) == 0:
        return True
    if S.mult[G.identity]:
        return False
    masks = _profile_masks(G, S, cap)
    bit = 1 << G.identity
    return not any(m & bit for m in masks[1:])


def has_k_product_one(G: GroupTable, S: Sequence, k: int, cap: int = DP_STATE_CAP) -> bool:
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    if k > len(S):
        return False
    masks = _profile_masks(G, S, cap)
    return bool((masks[k] >> G.identity) & 1)


def has_short_product_one(G: GroupTable, S: Sequence, cap: int = DP_STATE_CAP) -> bool:
    if len(S) == 0:
        return False
    if S.mult[G.identity]:
        return True
    masks = _profile_masks(G, S, cap)
    top = min(G.exponent, len(S))
    return any((masks[j] >> G.identity) & 1 for j in range(1, top + 1))


def append_free_check(G: GroupTable, known_pi: set[int], g: int) -> bool:
    """Whether S.g stays product-one free, given Pi(S) for a free S.

    An ordering of a product-one subsequence through g can be rotated so g
    comes last, so S.g is free iff g != 1 and g^-1 is not in Pi(S).
    """
    return g != G.identity and int(G.inv[g]) not in known_pi


def _ordered_finder_py(G: GroupTable, terms: list[int], k: int) -> Optional[list[int]]:
    L = len(terms)
    reach = [[set() for _ in range(k + 1)] for _ in range(L + 1)]
    reach[0][0] = {G.identity}
    for i, g in enumerate(terms):
        reach[i + 1][0] = set(reach[i][0])
        for c in range(1, min(i + 1, k) + 1):
            reach[i + 1][c] = reach[i][c] | {int(G.mul[h, g]) for h in reach[i][c - 1]}
    if G.identity not in reach[L][k]:
        return None
    h, c, chosen = G.identity, k, []
    for i in range(L, 0, -1):
        if c == 0:
            break
        if h in reach[i - 1][c]:
            continue
        chosen.append(i - 1)
        h = int(G.mul[h, G.inv[terms[i - 1]]])
        c -= 1
    return sorted(chosen)


def find_k_product_one_heuristic(G: GroupTable, S: Sequence, k: int,
                                 shuffles: int = HEURISTIC_SHUFFLES,
                                 seed: int = DEFAULT_SEED,
                                 rng: Optional[np.random.Generator] = None) -> Optional[Certificate]:
    """Sound but incomplete search for a k-product-one subsequence.

    Each round fixes an ordering of the terms and runs a DP over
    (position, count, product) that only multiplies terms in that order.
    The first round uses the sorted order, later rounds random shuffles.
    ``None`` proves nothing.
    """
    if not 1 <= k <= len(S):
        return None
    if rng is None:
        rng = np.random.default_rng(seed)
    terms = np.asarray(S.terms(), dtype=np.int64)
    ctx = kernel_context(G)
    chosen = np.zeros(len(terms), dtype=np.bool_)
    for r in range(max(shuffles, 1)):
        order = terms if r == 0 else rng.permutation(terms)
        if ctx is not None:
            RT, nbytes, inv = ctx
            hit = K.ordered_finder(order, k, G.identity, inv, RT, nbytes, chosen)
            picked = [int(order[i]) for i in np.nonzero(chosen)[0]] if hit else None
        else:
            idx = _ordered_finder_py(G, [int(t) for t in order], k)
            picked = None if idx is None else [int(order[i]) for i in idx]
        if picked is not None:
            return Certificate.build(G, picked, S)
    return None


def find_k_product_one_exact(G: GroupTable, S: Sequence, k: int,
                             cap: int = DP_STATE_CAP) -> Optional[Certificate]:
    """Exact search: a k-product-one subsequence with an ordering, or None."""
    if not 1 <= k <= len(S):
        return None
    _check_budget(S, cap)
    ctx = kernel_context(G)
    terms = S.terms()
    support = []
    for g in terms:
        if support and support[-1][0] == g:
            support[-1][1] += 1
        else:
            support.append([g, 1])
    strides, acc = [], 1
    for _, m in support:
        strides.append(acc)
        acc *= m + 1
    if ctx is not None:
        RT, nbytes, _ = ctx
        table, sizes, size, _ = K.subset_product_sets(
            np.asarray(terms, dtype=np.int64), G.order, G.identity, RT, nbytes, max(acc, 1))
        table, sizes = table[:size], sizes[:size]
        hits = np.nonzero((sizes == k) & ((table >> np.uint64(G.identity)) & np.uint64(1)).astype(bool))[0]
        if not len(hits):
            return None
        idx = int(hits[0])
        table = _LazyInts(table)
    else:
        table = _subset_table_py(G, support, strides, acc)
        idx = next((i for i in range(acc)
                    if sum((i // st) % (m + 1) for st, (_, m) in zip(strides, support)) == k
                    and (table[i] >> G.identity) & 1), None)
        if idx is None:
            return None
    return Certificate.build(G, _unwind(G, table, support, strides, idx, G.identity), S)


class _LazyInts:
    def __init__(self, arr):
        self.arr = arr

    def __getitem__(self, i):
        return int(self.arr[i])


def _subset_table_py(G, support, strides, acc):
    mul = G.mul
    table = [0] * acc
    table[0] = 1 << G.identity
    for idx in range(1, acc):
        val = 0
        for (g, m), st in zip(support, strides):
            if (idx // st) % (m + 1):
                prev = table[idx - st]
                while prev:
                    low = prev & -prev
                    val |= 1 << int(mul[low.bit_length() - 1, g])
                    prev ^= low
        table[idx] = val
    return table


def _unwind(G, table, support, strides, idx, target):
    """Recover an ordering of sub-multiset ``idx`` whose product is ``target``."""
    word = []
    h = target
    while idx:
        for (g, m), st in zip(support, strides):
            if (idx // st) % (m + 1) == 0:
                continue
            prev = int(G.mul[h, G.inv[g]])
            if (table[idx - st] >> prev) & 1:
                word.append(g)
                h = prev
                idx -= st
                break
        else:  # pragma: no cover - table inconsistent
            raise CertificateError("DP unwind failed")
    return word[::-1]


def coset_profile(G: GroupTable, S: Sequence, chain: tuple) -> CosetProfile:
    """Counts of terms in the cosets L, r2 L, r3 L, r4 L for ``chain = (L, reps)``."""
    L, reps = chain
    reps = list(reps)
    elems = set(L.elements)
    if len(reps) != 4 or G.order != 4 * len(elems):
        raise RepsNotTransversal("need an index-4 subgroup and four representatives")
    label = {}
    for i, r in enumerate(reps):
        for h in elems:
            g = int(G.mul[r, h])
            if g in label:
                raise RepsNotTransversal("representatives share a coset")
            label[g] = i
    counts = [0, 0, 0, 0]
    for g, m in enumerate(S.mult):
        if m:
            counts[label[g]] += m
    return CosetProfile(*counts)


def standard_chain(G: GroupTable) -> tuple:
    """(L = <y^2>, representatives 1, y, x, xy)."""
    from .groups import l_subgroup

    return (l_subgroup(G), (G.identity, G.y, G.x, int(G.mul[G.x, G.y])))


def canonical_form(G: GroupTable, S: Sequence, auts: Seq[Seq[int]]) -> Sequence:
    """Lexicographically least multiplicity vector over the automorphism orbit."""
    best = S.mult
    for perm in auts:
        mult = [0] * G.order
        for g, m in enumerate(S.mult):
            if m:
                mult[perm[g]] = m
        t = tuple(mult)
        if t < best:
            best = t
    return S if best == S.mult else Sequence(G, best)


def orbit(G: GroupTable, S: Sequence, auts: Seq[Seq[int]]) -> set[Sequence]:
    return {S.apply(p) for p in auts}
