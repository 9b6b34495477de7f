"""Finite groups used throughout the package, as dense Cayley tables.

Every family is a cyclic group ``<y>`` of order ``N``, optionally extended by
an element ``x`` with ``x^2 = y^h`` and ``y x = x y^s``.  Element ids follow
one encoding for all families: ``i -> y^i`` and ``N + i -> x*y^i``.

* ``mdic(n, s)``   -- N = n,  h = n/2, the modified dicyclic group (order 2n)
* ``dicyclic(n)``  -- N = 2n, h = n,   s = -1 (order 4n)
* ``c2xc2n(n)``    -- N = 2n, h = 0,   s = 1  (order 4n, abelian)
* ``cyclic(n)``    -- N = n, no x (order n)
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import BoundExceeded, InvalidParams, NotNormal, NoValidS

ORDER_CAP = 4096
AUTOMORPHISM_BOUND = 512

FAMILIES = ("mdic", "cyclic", "dicyclic", "c2xc2n")


def valid_s_values(n: int) -> list[int]:
    """All s in [0, n) with s^2 = 1 and s != +-1 (mod n)."""
    return [s for s in range(n) if (s * s) % n == 1 % n and s % n not in (1 % n, (n - 1) % n)]


@dataclass(frozen=True)
class GroupSpec:
    family: str
    n: int
    s: Optional[int] = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidParams(f"unknown group family {self.family!r}")
        if not isinstance(self.n, int) or isinstance(self.n, bool):
            raise InvalidParams("n must be an integer")
        if self.family != "mdic" and self.s is not None:
            raise InvalidParams(f"family {self.family} takes no s parameter")

    @classmethod
    def mdic(cls, n: int, s: int) -> "GroupSpec":
        return cls("mdic", n, s)

    @classmethod
    def cyclic(cls, n: int) -> "GroupSpec":
        return cls("cyclic", n)

    @classmethod
    def dicyclic(cls, n: int) -> "GroupSpec":
        return cls("dicyclic", n)

    @classmethod
    def c2xc2n(cls, n: int) -> "GroupSpec":
        return cls("c2xc2n", n)

    @property
    def n1(self) -> int:
        if self.family != "mdic":
            raise AttributeError("n1 is defined for the mdic family only")
        return math.gcd(self.n, self.s + 1)

    @property
    def n2(self) -> int:
        return self.n // self.n1

    @property
    def cyclic_order(self) -> int:
        """Order N of the distinguished cyclic subgroup <y>."""
        if self.family in ("mdic", "cyclic"):
            return self.n
        return 2 * self.n

    @property
    def order(self) -> int:
        return {"mdic": 2 * self.n, "cyclic": self.n}.get(self.family, 4 * self.n)

    def validate(self) -> None:
        n = self.n
        if self.family == "mdic":
            if self.s is None:
                raise InvalidParams("mdic requires s")
            if n < 8 or n % 2:
                raise InvalidParams(f"mdic requires even n >= 8, got n={n}")
            if not valid_s_values(n):
                raise NoValidS(
                    f"no valid s for n={n}: n is twice an odd prime power"
                )
            s = self.s % n
            if (s * s) % n != 1:
                raise InvalidParams(f"s={self.s} does not satisfy s^2 = 1 (mod {n})")
            if s in (1, n - 1):
                raise InvalidParams(f"s={self.s} is congruent to +-1 (mod {n})")
        elif self.family == "cyclic":
            if n < 1:
                raise InvalidParams("cyclic requires n >= 1")
        elif n < 1:
            raise InvalidParams(f"{self.family} requires n >= 1")
        if self.order > ORDER_CAP:
            raise InvalidParams(f"group order {self.order} exceeds cap {ORDER_CAP}")

    def to_json(self) -> dict:
        d = {"family": self.family, "n": self.n}
        if self.s is not None:
            d["s"] = self.s
        return d

    @classmethod
    def from_json(cls, d: dict) -> "GroupSpec":
        try:
            return cls(d["family"], int(d["n"]), None if d.get("s") is None else int(d["s"]))
        except (KeyError, TypeError) as exc:
            raise InvalidParams(f"malformed group spec {d!r}") from exc

    def __str__(self) -> str:
        if self.family == "mdic":
            return f"mdic(n={self.n}, s={self.s})"
        return f"{self.family}(n={self.n})"


_LABEL_RE = re.compile(r"^\s*(x\s*\*?\s*)?(y(\s*\^\s*(-?\d+))?)?\s*$")


class GroupTable:
    """Immutable finite group given by its multiplication table.

    ``mul[a, b]`` is the id of ``a*b``; ``inv[a]`` the id of ``a^-1``.
    Arrays are read-only so a table can be shared between workers.
    """

    def __init__(self, mul, labels: Sequence[str], spec: Optional[GroupSpec] = None,
                 cyclic_order: Optional[int] = None):
        mul = np.ascontiguousarray(mul, dtype=np.int32)
        order = mul.shape[0]
        if mul.shape != (order, order):
            raise InvalidParams("multiplication table must be square")
        self.spec = spec
        self.order = order
        self.mul = mul
        self.mul.setflags(write=False)
        ident = [e for e in range(order) if np.array_equal(mul[e], np.arange(order))]
        if not ident:
            raise InvalidParams("table has no identity")
        self.identity = int(ident[0])
        inv = np.empty(order, dtype=np.int32)
        for a in range(order):
            row = np.nonzero(mul[a] == self.identity)[0]
            if len(row) != 1:
                raise InvalidParams("table rows are not permutations")
            inv[a] = row[0]
        self.inv = inv
        self.inv.setflags(write=False)
        self.element_label = tuple(labels)
        self.cyclic_order = cyclic_order
        self._label_index = {lab: i for i, lab in enumerate(self.element_label)}

    def __repr__(self) -> str:
        return f"GroupTable({self.spec or 'anonymous'}, order={self.order})"

    def __len__(self) -> int:
        return self.order

    # element orders and exponent

    @cached_property
    def element_orders(self) -> np.ndarray:
        orders = np.zeros(self.order, dtype=np.int64)
        for g in range(self.order):
            h, k = g, 1
            while h != self.identity:
                h = int(self.mul[h, g])
                k += 1
            orders[g] = k
        orders.setflags(write=False)
        return orders

    @cached_property
    def exponent(self) -> int:
        return int(math.lcm(*(int(o) for o in self.element_orders)))

    @cached_property
    def is_abelian(self) -> bool:
        return bool(np.array_equal(self.mul, self.mul.T))

    def power(self, g: int, k: int) -> int:
        k %= int(self.element_orders[g])
        h = self.identity
        for _ in range(k):
            h = int(self.mul[h, g])
        return h

    def conj(self, g: int, h: int) -> int:
        """g h g^-1"""
        return int(self.mul[self.mul[g, h], self.inv[g]])

    # labels

    def label(self, g: int) -> str:
        return self.element_label[g]

    def element(self, label: str) -> int:
        """Parse a label such as ``y^3``, ``x*y^5``, ``x``, ``1`` or ``xy^2``."""
        if label in self._label_index:
            return self._label_index[label]
        if self.cyclic_order is None:
            raise KeyError(label)
        text = label.strip()
        if text in ("1", "e"):
            return self.identity
        m = _LABEL_RE.match(text)
        if not m or not (m.group(1) or m.group(2)):
            raise KeyError(label)
        k = int(m.group(4)) if m.group(4) is not None else (1 if m.group(2) else 0)
        return self.y_x_element(bool(m.group(1)), k)

    def y_x_element(self, has_x: bool, k: int) -> int:
        """Id of ``x*y^k`` (has_x) or ``y^k``."""
        N = self.cyclic_order
        if N is None:
            raise KeyError("table has no y/x encoding")
        if has_x:
            if self.order != 2 * N:
                raise KeyError("group has no x element")
            return N + k % N
        return k % N

    def decompose(self, g: int) -> tuple[bool, int]:
        """Inverse of :meth:`y_x_element`: ``(has_x, k)``."""
        N = self.cyclic_order
        return (g >= N, g % N)

    @property
    def x(self) -> int:
        return self.y_x_element(True, 0)

    @property
    def y(self) -> int:
        return self.y_x_element(False, 1)

    def check_associative(self) -> bool:
        """Exhaustive (a*b)*c == a*(b*c) over all triples."""
        m = self.mul.astype(np.int64)
        for a in range(self.order):
            left = m[m[a]]          # (a*b)*c indexed [b, c]
            right = m[a][m]          # a*(b*c)
            if not np.array_equal(left, right):
                return False
        return True


def _semidirect_table(N: int, h: int, s: int, with_x: bool) -> np.ndarray:
    a = np.arange(N)
    order = 2 * N if with_x else N
    mul = np.empty((order, order), dtype=np.int32)
    A, B = np.meshgrid(a, a, indexing="ij")
    mul[:N, :N] = (A + B) % N
    if with_x:
        mul[:N, N:] = N + (A * s + B) % N
        mul[N:, :N] = N + (A + B) % N
        mul[N:, N:] = (h + A * s + B) % N
    return mul


def _labels(N: int, with_x: bool) -> list[str]:
    labels = [f"y^{i}" for i in range(N)]
    if with_x:
        labels += [f"x*y^{i}" for i in range(N)]
    return labels


def build_group(spec: GroupSpec) -> GroupTable:
    """Dense table realising the family's presentation."""
    spec.validate()
    n = spec.n
    if spec.family == "cyclic":
        N, h, s, with_x = n, 0, 1, False
    elif spec.family == "mdic":
        N, h, s, with_x = n, n // 2, spec.s % n, True
    elif spec.family == "dicyclic":
        N, h, s, with_x = 2 * n, n, 2 * n - 1, True
    else:
        N, h, s, with_x = 2 * n, 0, 1, True
    return GroupTable(_semidirect_table(N, h, s, with_x), _labels(N, with_x), spec, N)


def predicted_exponent(spec: GroupSpec) -> int:
    if spec.family != "mdic":
        raise InvalidParams("closed-form exponent is only stated for mdic")
    return spec.n if spec.n % 4 == 0 else 2 * spec.n


def evaluate_word(G: GroupTable, word: Iterable[int]) -> int:
    h = G.identity
    mul = G.mul
    for g in word:
        if not 0 <= g < G.order:
            raise IndexError(f"element id {g} out of range")
        h = int(mul[h, g])
    return h


def element_order(G: GroupTable, g: int) -> int:
    return int(G.element_orders[g])


@dataclass(frozen=True)
class SubgroupHandle:
    elements: frozenset
    generators: tuple
    is_normal: bool

    @property
    def order(self) -> int:
        return len(self.elements)


def _closure(G: GroupTable, gens: Iterable[int]) -> set[int]:
    elems = {G.identity}
    frontier = [G.identity]
    gens = list(gens)
    while frontier:
        nxt = []
        for h in frontier:
            for g in gens:
                p = int(G.mul[h, g])
                if p not in elems:
                    elems.add(p)
                    nxt.append(p)
        frontier = nxt
    return elems


def _is_normal(G: GroupTable, elems: set[int]) -> bool:
    return all(G.conj(g, h) in elems for g in range(G.order) for h in elems)


def subgroup_generated(G: GroupTable, gens: Sequence[int]) -> SubgroupHandle:
    gens = tuple(int(g) for g in gens)
    if not gens:
        raise InvalidParams("need at least one generator")
    elems = _closure(G, gens)
    return SubgroupHandle(frozenset(elems), gens, _is_normal(G, elems))


@dataclass(frozen=True)
class QuotientMap:
    source: GroupTable
    quotient: GroupTable
    projection: np.ndarray = field(repr=False)

    def __call__(self, g: int) -> int:
        return int(self.projection[g])


def quotient(G: GroupTable, H: SubgroupHandle) -> QuotientMap:
    elems = set(H.elements)
    if not H.is_normal or not _is_normal(G, elems):
        raise NotNormal("quotient requires a normal subgroup")
    proj = np.full(G.order, -1, dtype=np.int32)
    reps = []
    for g in range(G.order):
        if proj[g] >= 0:
            continue
        idx = len(reps)
        reps.append(g)
        for h in elems:
            proj[int(G.mul[g, h])] = idx
    m = len(reps)
    qmul = np.empty((m, m), dtype=np.int32)
    for i, a in enumerate(reps):
        for j, b in enumerate(reps):
            qmul[i, j] = proj[G.mul[a, b]]
    labels = [f"[{G.label(r)}]" for r in reps]
    proj.setflags(write=False)
    return QuotientMap(G, GroupTable(qmul, labels), proj)


def generator_pairs(G: GroupTable, n: int, s: int) -> list[tuple[int, int]]:
    """Ordered pairs (alpha, beta) satisfying the mdic relations and generating G."""
    orders = G.element_orders
    pairs = []
    for beta in range(G.order):
        if orders[beta] != n:
            continue
        half = G.power(beta, n // 2)
        beta_s = G.power(beta, s)
        cyc = set(G.power(beta, k) for k in range(n))
        for alpha in range(G.order):
            if alpha in cyc:
                continue
            if int(G.mul[alpha, alpha]) != half:
                continue
            if int(G.mul[beta, alpha]) != int(G.mul[alpha, beta_s]):
                continue
            if len(_closure(G, (alpha, beta))) == G.order:
                pairs.append((alpha, beta))
    return pairs


def _standard_generators(G: GroupTable) -> tuple[int, ...]:
    if G.cyclic_order is None:
        raise InvalidParams("automorphisms need a family-built table")
    if G.order == G.cyclic_order:
        return (G.y,)
    return (G.x, G.y)


def automorphisms(G: GroupTable, bound: int = AUTOMORPHISM_BOUND) -> list[tuple[int, ...]]:
    """All automorphisms as permutations ``perm[g] = sigma(g)``, sorted.

    Brute force over images of the standard generators, filtered by element
    order, then an exhaustive homomorphism check on the whole table.
    """
    if G.order > bound:
        raise BoundExceeded(f"group order {G.order} exceeds automorphism bound {bound}")
    gens = _standard_generators(G)
    N = G.cyclic_order
    orders = G.element_orders
    cands = [np.nonzero(orders == orders[g])[0] for g in gens]
    mul = G.mul
    result = []
    for images in itertools.product(*cands):
        if len(images) == 1:
            (b,) = images
            a = None
        else:
            a, b = (int(v) for v in images)
        bpow = np.empty(N, dtype=np.int64)
        h = G.identity
        for k in range(N):
            bpow[k] = h
            h = int(mul[h, b])
        phi = bpow if a is None else np.concatenate([bpow, mul[a][bpow]])
        if len(np.unique(phi)) != G.order:
            continue
        if np.array_equal(phi[mul], mul[np.ix_(phi, phi)]):
            result.append(tuple(int(v) for v in phi))
    result.sort()
    return result


def l_subgroup(G: GroupTable) -> SubgroupHandle:
    """L = <y^2>, the index-4 normal subgroup driving the pairing argument."""
    return subgroup_generated(G, [G.power(G.y, 2)])


def h_subgroup(G: GroupTable) -> SubgroupHandle:
    """H = <x, y^{n2}> for an mdic group."""
    return subgroup_generated(G, [G.x, G.power(G.y, G.spec.n2)])


def k_subgroup(G: GroupTable) -> SubgroupHandle:
    """K = <y^{2 n2}> for an mdic group."""
    return subgroup_generated(G, [G.power(G.y, 2 * G.spec.n2)])


def valid_mdic_specs(max_n: int) -> list[GroupSpec]:
    specs = []
    for n in range(8, max_n + 1, 2):
        for s in valid_s_values(n):
            specs.append(GroupSpec.mdic(n, s))
    return specs
