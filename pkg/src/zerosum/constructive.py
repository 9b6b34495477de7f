"""Explicit n-product-one certificates from length-2n sequences.

The proof-guided pipeline (mdic groups with n = 0 mod 4):

1. Pair terms inside the four cosets of L = <y^2>.  Each pair multiplies
   into L, and L is cyclic of order n/2 via y^{2r} -> r.
2. With at least n - 1 pairs, zero-sum extraction in C_{n/2} picks n/2 pairs
   whose products multiply to 1.
3. With exactly n - 2 pairs, first look for n/2 of them summing to zero.
4. Otherwise the pair residues take only two values a, b (n/2 - 1 times
   each, a - b a unit mod n/2).  Choose c with y^{2c} among the products
   of the four leftover terms U0, and solve

       l (a - b) = -c - b u   (mod n/2),  u = n/2 - 2,

   for the number l of a-pairs to put after U0; the remaining u - l
   pairs are b-pairs.  Every c is tried, so a solution outside [0, u] for
   one c falls through to the next.

Every branch condition is re-checked at runtime.  A failed check appends a
note to the trace and falls back to search, so a gap in the argument shows
up as a logged fallback instead of a wrong certificate.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

from .errors import BudgetExceeded, ExtractionFailed, InvalidParams, NoSolution, StructureViolation
from .groups import GroupTable, evaluate_word, l_subgroup
from .sequences import (
    DP_STATE_CAP,
    Certificate,
    Sequence,
    find_k_product_one_exact,
    find_k_product_one_heuristic,
)

ESCALATING_SHUFFLES = (64, 512, 4096)


# --------------------------------------------------------------------------
# cyclic groups


def zero_sum_subset(n: int, residues: list, size: int) -> Optional[list]:
    """Indices of ``size`` entries summing to 0 mod n, or None.

    DP over (prefix, count) with the reachable residues as an int bitmask;
    backtracking walks the table from the end.
    """
    full = (1 << n) - 1
    vals = [r % n for r in residues]
    L = len(vals)
    if size > L:
        return None

    def shift(mask: int, a: int) -> int:
        return ((mask << a) | (mask >> (n - a))) & full if a else mask

    reach = [[0] * (size + 1) for _ in range(L + 1)]
    reach[0][0] = 1
    for i, a in enumerate(vals):
        prev, cur = reach[i], reach[i + 1]
        cur[0] = 1
        for c in range(1, min(i + 1, size) + 1):
            cur[c] = prev[c] | shift(prev[c - 1], a)
    if not reach[L][size] & 1:
        return None
    picked, r, c = [], 0, size
    for i in range(L, 0, -1):
        if c == 0:
            break
        if (reach[i - 1][c] >> r) & 1:
            continue
        picked.append(i - 1)
        r = (r - vals[i - 1]) % n
        c -= 1
    return sorted(picked)


def egz_extract_cyclic(n: int, residues: list) -> list:
    """n indices whose residues sum to 0 mod n; needs at least 2n - 1 entries."""
    if n < 1:
        raise InvalidParams("n must be positive")
    if len(residues) < 2 * n - 1:
        raise InvalidParams(f"need at least {2 * n - 1} residues, got {len(residues)}")
    found = zero_sum_subset(n, residues, n)
    if found is None:  # contradicts the EGZ theorem
        raise ExtractionFailed("no zero-sum subset of size n among 2n-1 residues")
    return found


def cyclic_inverse_structure(n: int, residues: list, k: int) -> tuple[int, int]:
    """The two dominant values (a, b) of a long sequence with no n-subset summing to 0.

    Checks the quantitative shape: both multiplicities at least n - 2k + 3,
    together at least 2n - 2k + 2, and a - b a generator of Z_n.  Any
    failure raises StructureViolation.  For k <= n // 4 + 2 that means the
    input had a zero-sum n-subset after all; above that range free inputs
    can fail too (n = 8, k = 5: 0^[5] 1^[2] 4^[3] 5).
    """
    if not 2 <= k <= n // 2 + 2:
        raise InvalidParams(f"k must lie in [2, {n // 2 + 2}]")
    if len(residues) != 2 * n - k:
        raise InvalidParams(f"need exactly {2 * n - k} residues")
    counts = Counter(r % n for r in residues)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    if len(ranked) < 2:
        raise StructureViolation("fewer than two distinct values")
    # ties in multiplicity can put a non-generating difference first, so scan pairs
    failure = ""
    for (a, ma), (b, mb) in itertools.combinations(ranked, 2):
        if min(ma, mb) < n - 2 * k + 3:
            failure = failure or f"multiplicity {min(ma, mb)} below {n - 2 * k + 3}"
        elif ma + mb < 2 * n - 2 * k + 2:
            failure = failure or f"combined multiplicity {ma + mb} below {2 * n - 2 * k + 2}"
        elif math.gcd(a - b, n) != 1:
            failure = failure or f"{a} - {b} does not generate Z_{n}"
        else:
            return a, b
    raise StructureViolation(failure)


# --------------------------------------------------------------------------
# coset pairing


def _require_mdic0(G: GroupTable) -> int:
    spec = G.spec
    if spec is None or spec.family != "mdic" or spec.n % 4:
        raise InvalidParams("proof-guided extraction needs an mdic group with n = 0 mod 4")
    return spec.n


def _coset_index(G: GroupTable, g: int) -> int:
    has_x, k = G.decompose(g)
    return 2 * int(has_x) + (k & 1)


def l_residue(G: GroupTable, h: int) -> int:
    """r with h = y^{2r}; h must lie in L."""
    has_x, k = G.decompose(h)
    if has_x or k % 2:
        raise StructureViolation(f"{G.label(h)} is not in <y^2>")
    return k // 2


def _check_l_is_cyclic(G: GroupTable, n: int) -> None:
    L = l_subgroup(G)
    y2 = G.power(G.y, 2)
    if L.order != n // 2 or any(G.power(y2, r) != G.y_x_element(False, 2 * r) for r in range(n // 2)):
        raise StructureViolation("<y^2> is not cyclic of order n/2 under y^{2r} -> r")


@dataclass
class PairDecomposition:
    units: list                  # ordered pairs (g, h) with g*h in L
    remainder: list              # U0
    unit_products: list = field(default_factory=list)

    def residues(self, G: GroupTable) -> list:
        return [l_residue(G, h) for h in self.unit_products]


def pair_decompose(G: GroupTable, S: Sequence) -> PairDecomposition:
    """Greedy same-coset pairing; at most one leftover per coset."""
    _require_mdic0(G)
    by_coset = [[], [], [], []]
    for g in S.terms():
        by_coset[_coset_index(G, g)].append(g)
    units, rest = [], []
    for terms in by_coset:
        for i in range(0, len(terms) - 1, 2):
            units.append((terms[i], terms[i + 1]))
        if len(terms) % 2:
            rest.append(terms[-1])
    products = [int(G.mul[g, h]) for g, h in units]
    return PairDecomposition(units, rest, products)


def _orient(G: GroupTable, unit: tuple, target: int) -> Optional[tuple]:
    g, h = unit
    if int(G.mul[g, h]) == target:
        return (g, h)
    if int(G.mul[h, g]) == target:
        return (h, g)
    return None


def combine_with_pairs(G: GroupTable, T0: list, c: int, a_units: list, b_units: list,
                    a: int, b: int) -> Certificate:
    """Certificate of length n containing all of T0, then l a-pairs, then b-pairs.

    ``a_units`` multiply to y^{2a} and ``b_units`` to y^{2b} (either order
    of the pair is accepted), T0 has an ordering with product y^{2c}, and
    l solves c + a l + b (u - l) = 0 mod n/2 with u = (n - |T0|) / 2.
    """
    n = _require_mdic0(G)
    half = n // 2
    if math.gcd(a - b, half) != 1:
        raise NoSolution(f"gcd({a} - {b}, {half}) != 1")
    if (n - len(T0)) % 2 or len(T0) > n:
        raise NoSolution("T0 length incompatible with n")
    u = (n - len(T0)) // 2
    inv = pow((a - b) % half, -1, half)
    ell = (inv * (-c - b * u)) % half
    if ell > u or ell > len(a_units) or u - ell > len(b_units):
        raise NoSolution(f"l = {ell} outside the available range")
    target = G.y_x_element(False, 2 * c)
    head = next((list(p) for p in itertools.permutations(T0)
                 if evaluate_word(G, p) == target), None)
    if head is None:
        raise NoSolution(f"no ordering of T0 multiplies to {G.label(target)}")
    ya, yb = G.y_x_element(False, 2 * a), G.y_x_element(False, 2 * b)
    word = head
    for unit, want in [(p, ya) for p in a_units[:ell]] + [(p, yb) for p in b_units[:u - ell]]:
        pair = _orient(G, unit, want)
        if pair is None:
            raise NoSolution(f"unit {unit} does not multiply to {G.label(want)}")
        word.extend(pair)
    return Certificate.build(G, word)


# --------------------------------------------------------------------------
# extraction


def _certificate_from_units(G, units, products, idx, source) -> Certificate:
    word = []
    for i in idx:
        word.extend(_orient(G, units[i], products[i]))
    return Certificate.build(G, word, source)


def _proof(G: GroupTable, S: Sequence, trace: list) -> Optional[Certificate]:
    n = _require_mdic0(G)
    half = n // 2
    _check_l_is_cyclic(G, n)
    window = Sequence.from_terms(G, S.terms()[:2 * n])
    dec = pair_decompose(G, window)
    res = dec.residues(G)
    trace.append(f"pair-decompose: {len(dec.units)} units, |U0| = {len(dec.remainder)}")
    if len(dec.units) >= n - 1:
        idx = egz_extract_cyclic(half, res)
        trace.append("egz on unit residues")
        return _certificate_from_units(G, dec.units, dec.unit_products, idx, S)
    if len(dec.units) != n - 2 or len(dec.remainder) != 4:
        trace.append(f"unexpected unit count {len(dec.units)}")
        return None
    idx = zero_sum_subset(half, res, half)
    if idx is not None:
        trace.append("zero-sum subset among n-2 units")
        return _certificate_from_units(G, dec.units, dec.unit_products, idx, S)
    try:
        a, b = cyclic_inverse_structure(half, res, 2)
    except StructureViolation as exc:
        trace.append(f"inverse structure failed: {exc}")
        return None
    trace.append(f"inverse structure: a = {a}, b = {b}")
    a_units = [u for u, r in zip(dec.units, res) if r == a]
    b_units = [u for u, r in zip(dec.units, res) if r == b]
    U0 = dec.remainder
    prods = sorted({evaluate_word(G, p) for p in itertools.permutations(U0)})
    in_l = [h for h in prods if _coset_index(G, h) == 0]
    if len(in_l) != len(prods):
        trace.append("U0 is not a 4-product-L sequence")
    for h in in_l:
        c = l_residue(G, h)
        try:
            cert = combine_with_pairs(G, U0, c, a_units, b_units, a, b)
        except NoSolution as exc:
            trace.append(f"combine c = {c}: {exc}")
            continue
        trace.append(f"combine c = {c}")
        cert.check(S)
        return cert
    trace.append("no product of U0 gave a solvable congruence")
    return None


def _search(G: GroupTable, S: Sequence, k: int, trace: list, cap: int) -> Certificate:
    for shuffles in ESCALATING_SHUFFLES[:1]:
        cert = find_k_product_one_heuristic(G, S, k, shuffles=shuffles)
        if cert is not None:
            trace.append(f"heuristic finder ({shuffles} shuffles)")
            return cert
    try:
        cert = find_k_product_one_exact(G, S, k, cap)
        if cert is not None:
            trace.append("exact sub-multiset DP")
            return cert
        raise ExtractionFailed(f"no {k}-product-one subsequence exists")
    except BudgetExceeded:
        trace.append("exact DP over the state cap")
    for shuffles in ESCALATING_SHUFFLES[1:]:
        cert = find_k_product_one_heuristic(G, S, k, shuffles=shuffles)
        if cert is not None:
            trace.append(f"heuristic finder ({shuffles} shuffles)")
            return cert
    raise ExtractionFailed("search budget exhausted without a certificate")


def extract_n_product_one(G: GroupTable, S: Sequence, method: str = "proof",
                          trace: Optional[list] = None, k: Optional[int] = None,
                          cap: int = DP_STATE_CAP) -> Certificate:
    """A verified certificate of length k (default n) drawn from S.

    ``method="proof"`` follows the pairing argument and falls back to search
    when a branch condition fails (recorded in ``trace``).  ``method="search"``
    uses the shuffle finder, then the exact DP, then more shuffles.
    """
    trace = [] if trace is None else trace
    if G.spec is None or G.spec.family != "mdic":
        raise InvalidParams("extraction is defined for mdic groups")
    n = G.spec.n
    k = n if k is None else k
    if len(S) < 2 * n and k == n:
        raise InvalidParams(f"need at least {2 * n} terms, got {len(S)}")
    if method == "proof":
        if k != n:
            raise InvalidParams("proof mode extracts length n")
        cert = _proof(G, S, trace)
        if cert is not None:
            return cert
        trace.append("fallback: search")
    elif method != "search":
        raise InvalidParams(f"unknown method {method!r}")
    cert = _search(G, S, k, trace, cap)
    cert.check(S)
    return cert
