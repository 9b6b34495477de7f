"""Zero-sum invariants: exhaustive computation, closed-form predictions, checks.

Every invariant here is "least length forcing some product-one subsequence":

    d    longest product-one free sequence (reported as that length)
    eta  short product-one (length 1..exp(G))
    s    product-one of length exactly exp(G)
    E    product-one of length exactly |G|

Exhaustive values come from one max-depth DFS over sorted, orbit-reduced
multisets that avoid the predicate.  The deepest node found is an extremal
witness and exhausting the tree proves every longer sequence contains the
required subsequence.

For E there is a cheaper exact route when |G| = m * exp(G) with m > 1.  A
sequence of length s + (m - 1) * exp(G) yields m disjoint exp-product-one
subsequences one after another (each extraction leaves at least s terms),
and their concatenation is product-one of length |G|.  So E <= s + (m-1)exp,
and a single free witness one shorter pins E down.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional

import numpy as np

from .errors import BudgetExceeded, InvalidParams
from .groups import GroupSpec, GroupTable
from .search import DEFAULT_NODE_BUDGET, DFSRunner, Predicate, SearchStats
from .sequences import (
    DEFAULT_SEED,
    Sequence,
    find_k_product_one_exact,
    find_k_product_one_heuristic,
    has_k_product_one,
    has_short_product_one,
    is_product_one_free,
)

log = logging.getLogger(__name__)

DEFAULT_SAMPLES = 10**5


class InvariantKind(Enum):
    SmallDavenport = "d"
    Eta = "eta"
    EGZ = "s"
    Gao = "E"

    @classmethod
    def parse(cls, text: str) -> "InvariantKind":
        for kind in cls:
            if text in (kind.value, kind.name):
                return kind
        raise InvalidParams(f"unknown invariant {text!r}")


class Mode(Enum):
    Exhaustive = "exhaustive"
    WitnessOnly = "witness"
    Sampled = "sampled"

    @classmethod
    def parse(cls, text: str) -> "Mode":
        for mode in cls:
            if text in (mode.value, mode.name):
                return mode
        raise InvalidParams(f"unknown mode {text!r}")


@dataclass
class InvariantReport:
    kind: InvariantKind
    group: Optional[GroupSpec]
    mode: Mode
    computed: Optional[int] = None
    predicted: Optional[int] = None
    witness: Optional[Sequence] = None
    universal_check_length: Optional[int] = None
    method: str = ""
    stats: SearchStats = field(default_factory=SearchStats)
    seed: Optional[int] = None
    samples: int = 0
    counterexamples: list = field(default_factory=list)
    undecided: int = 0
    witness_verified: Optional[bool] = None

    @property
    def value(self) -> Optional[int]:
        return self.computed if self.computed is not None else self.predicted

    @property
    def consistent(self) -> bool:
        """No disagreement with the prediction and no sampled counterexample."""
        if self.computed is not None and self.predicted is not None \
                and self.computed != self.predicted:
            return False
        if self.witness_verified is False:
            return False
        return not self.counterexamples

    def to_json(self, timings: bool = False) -> dict:
        out = {
            "kind": self.kind.value,
            "group": self.group.to_json() if self.group else None,
            "mode": self.mode.value,
            "computed": self.computed,
            "predicted": self.predicted,
            "method": self.method,
            "stats": self.stats.to_json(timings),
            "seed": self.seed,
        }
        if self.witness is not None:
            out["witness"] = self.witness.to_json()
            out["witness_length"] = len(self.witness)
            out["witness_verified"] = self.witness_verified
        if self.universal_check_length is not None:
            out["universal_check_length"] = self.universal_check_length
        if self.mode is Mode.Sampled:
            out["samples"] = self.samples
            out["counterexamples"] = [S.to_json() for S in self.counterexamples]
            out["undecided"] = self.undecided
        return out


# --------------------------------------------------------------------------
# predicates


def predicate_for(G: GroupTable, kind: InvariantKind) -> Predicate:
    if kind is InvariantKind.SmallDavenport:
        return Predicate.free()
    if kind is InvariantKind.Eta:
        return Predicate.short(G.exponent)
    if kind is InvariantKind.EGZ:
        return Predicate.k_product(G.exponent)
    return Predicate.k_product(G.order)


def target_length(G: GroupTable, kind: InvariantKind) -> int:
    """k for the k-product-one kinds, 0 otherwise."""
    if kind is InvariantKind.EGZ:
        return G.exponent
    if kind is InvariantKind.Gao:
        return G.order
    return 0


def avoids(G: GroupTable, S: Sequence, kind: InvariantKind) -> bool:
    """True when S has none of the subsequences ``kind`` asks for."""
    if kind is InvariantKind.SmallDavenport:
        return is_product_one_free(G, S)
    if kind is InvariantKind.Eta:
        return not has_short_product_one(G, S)
    return not has_k_product_one(G, S, target_length(G, kind))


def _witness_length(kind: InvariantKind, value: int) -> int:
    return value if kind is InvariantKind.SmallDavenport else value - 1


def _forcing_length(kind: InvariantKind, value: int) -> int:
    return value + 1 if kind is InvariantKind.SmallDavenport else value


def _value_from_longest(kind: InvariantKind, longest: int) -> int:
    return longest if kind is InvariantKind.SmallDavenport else longest + 1


# --------------------------------------------------------------------------
# closed forms


def predicted_invariants(spec: GroupSpec) -> dict:
    """Values the literature states for the family; unstated kinds are absent."""
    spec.validate()
    n = spec.n
    K = InvariantKind
    if spec.family == "mdic":
        return {K.SmallDavenport: n, K.Eta: n + 1,
                K.EGZ: 2 * n if n % 4 == 0 else 3 * n, K.Gao: 3 * n}
    if spec.family == "cyclic":
        return {K.EGZ: 2 * n - 1, K.Gao: 2 * n - 1}
    if spec.family == "dicyclic":
        return {K.Gao: 6 * n}
    if spec.family == "c2xc2n":
        return {K.EGZ: 4 * n + 1, K.Gao: 6 * n}
    return {}


def _word(G: GroupTable, parts: Iterable[tuple[int, int]]) -> Sequence:
    mult = [0] * G.order
    for g, m in parts:
        mult[g] += m
    return Sequence(G, mult)


def known_witnesses(G: GroupTable, kind: InvariantKind) -> list[Sequence]:
    """Extremal sequences of the closed-form families (unverified candidates)."""
    spec = G.spec
    if spec is None:
        return []
    n, one, y = spec.n, G.identity, G.y
    out = []
    if spec.family == "mdic":
        x = G.x
        tail = [(y, n - 1), (x, 1)]
        if kind in (InvariantKind.SmallDavenport, InvariantKind.Eta):
            out.append(_word(G, tail))
        elif kind is InvariantKind.EGZ:
            pad = n - 1 if n % 4 == 0 else 2 * n - 1
            out.append(_word(G, [(one, pad)] + tail))
        else:
            out.append(_word(G, [(one, 2 * n - 1)] + tail))
    elif spec.family == "cyclic":
        if kind in (InvariantKind.EGZ, InvariantKind.Gao):
            out.append(_word(G, [(one, n - 1), (y, n - 1)]))
        else:
            out.append(_word(G, [(y, n - 1)]))
    elif spec.family == "dicyclic":
        x = G.x
        if kind is InvariantKind.Gao:
            out.append(_word(G, [(one, 4 * n - 1), (y, 2 * n - 1), (x, 1)]))
        elif kind in (InvariantKind.SmallDavenport, InvariantKind.Eta):
            out.append(_word(G, [(y, 2 * n - 1), (x, 1)]))
    elif spec.family == "c2xc2n":
        x = G.x
        if kind is InvariantKind.EGZ:
            out.append(_word(G, [(one, 2 * n - 1), (y, 2 * n - 1), (x, 1), (G.mul[x, y], 1)]))
        elif kind is InvariantKind.Gao:
            out.append(_word(G, [(one, 4 * n - 1), (y, 2 * n - 1), (x, 1)]))
    return out


# --------------------------------------------------------------------------
# universal checks


_EXHAUSTIVE_CACHE: dict = {}


def _cache_key(G: GroupTable, kind: InvariantKind):
    return (G.spec, kind) if G.spec is not None else None


def _run(G, pred, target, budget, workers, checkpoint, progress, auts):
    runner = DFSRunner(G, pred, target=target, auts=auts, budget=budget, workers=workers,
                       checkpoint_path=checkpoint, progress=progress)
    res = runner.run()
    if res.status == "budget":
        raise BudgetExceeded(f"node budget {budget} exhausted",
                             checkpoint=checkpoint, nodes=res.stats.nodes)
    return res


def _lift_applies(G: GroupTable) -> bool:
    return G.order % G.exponent == 0 and G.order > G.exponent


def universal_check(G: GroupTable, length: int, kind: InvariantKind,
                    budget: int = DEFAULT_NODE_BUDGET, workers: int = 1,
                    checkpoint: Optional[str] = None, progress: bool = False,
                    direct: bool = False) -> Optional[Sequence]:
    """None iff every sequence of ``length`` contains the subsequence ``kind`` asks for.

    Otherwise returns one sorted counterexample.  For the Gao kind the
    disjoint-extraction bound is tried first (unless ``direct``): it settles
    the question whenever ``length - (m-1) exp`` is already forcing for
    exp-product-ones.
    """
    if length < 1:
        raise InvalidParams("length must be positive")
    key = _cache_key(G, kind)
    cached = _EXHAUSTIVE_CACHE.get(key)
    if cached is not None:
        value, witness = cached
        if length >= _forcing_length(kind, value):
            return None
        if witness is not None and len(witness) >= length:
            return Sequence.from_terms(G, witness.terms()[:length])
    if kind is InvariantKind.Gao and not direct and _lift_applies(G):
        m = G.order // G.exponent
        reduced = length - (m - 1) * G.exponent
        if reduced >= 1 and universal_check(G, reduced, InvariantKind.EGZ, budget, workers,
                                            None, progress) is None:
            return None
    res = _run(G, predicate_for(G, kind), length, budget, workers, checkpoint, progress, None)
    if res.status == "found":
        return Sequence.from_terms(G, res.found)
    return None


def _exhaustive_longest(G, kind, budget, workers, checkpoint, progress):
    res = _run(G, predicate_for(G, kind), 0, budget, workers, checkpoint, progress, None)
    witness = Sequence.from_terms(G, res.best)
    return _value_from_longest(kind, len(witness)), witness, res.stats


def _find_witness(G, kind, length, budget, workers, progress) -> Optional[Sequence]:
    for cand in known_witnesses(G, kind):
        if len(cand) == length and avoids(G, cand, kind):
            return cand
    res = _run(G, predicate_for(G, kind), length, budget, workers, None, progress, None)
    return Sequence.from_terms(G, res.found) if res.status == "found" else None


def _exhaustive(G, kind, budget, workers, checkpoint, progress, direct):
    """(value, witness, stats, method) with the value proven exactly."""
    key = _cache_key(G, kind)
    if key in _EXHAUSTIVE_CACHE and not direct:
        value, witness = _EXHAUSTIVE_CACHE[key]
        return value, witness, SearchStats(), "cached"
    method = "max-depth-dfs"
    if kind is InvariantKind.Gao and not direct and _lift_applies(G):
        s_val, _, stats, _ = _exhaustive(G, InvariantKind.EGZ, budget, workers, None,
                                         progress, False)
        bound = s_val + (G.order // G.exponent - 1) * G.exponent
        witness = _find_witness(G, kind, bound - 1, budget, workers, progress)
        if witness is not None:
            value, method = bound, "egz-lift"
        else:
            value, witness, stats = _exhaustive_longest(G, kind, budget, workers, checkpoint,
                                                        progress)
    else:
        value, witness, stats = _exhaustive_longest(G, kind, budget, workers, checkpoint,
                                                    progress)
    _EXHAUSTIVE_CACHE[key] = (value, witness)
    return value, witness, stats, method


# --------------------------------------------------------------------------
# reports


def _random_sequence(G: GroupTable, length: int, rng: np.random.Generator) -> Sequence:
    return Sequence.from_terms(G, rng.integers(0, G.order, size=length).tolist())


def sample_check(G: GroupTable, kind: InvariantKind, length: int, samples: int,
                 seed: int = DEFAULT_SEED) -> tuple[list, int]:
    """Random i.i.d.-term sequences at ``length``; (exact counterexamples, undecided).

    k-product-one kinds try the shuffle finder first (any hit is a verified
    certificate), then the exact DP.  A sample the DP cannot afford counts as
    undecided, never as a pass.
    """
    rng = np.random.default_rng(seed)
    bad, undecided = [], 0
    k = target_length(G, kind)
    for _ in range(samples):
        S = _random_sequence(G, length, rng)
        try:
            if k:
                if find_k_product_one_heuristic(G, S, k, rng=rng) is not None:
                    continue
                if find_k_product_one_exact(G, S, k) is not None:
                    continue
                bad.append(S)
            elif avoids(G, S, kind):
                bad.append(S)
        except BudgetExceeded:
            undecided += 1
    return bad, undecided


def compute_invariant(G: GroupTable, kind: InvariantKind, mode: Mode = Mode.Exhaustive,
                      budget: int = DEFAULT_NODE_BUDGET, seed: int = DEFAULT_SEED,
                      samples: int = DEFAULT_SAMPLES, workers: int = 1,
                      checkpoint: Optional[str] = None, progress: bool = False,
                      direct: bool = False) -> InvariantReport:
    predicted = predicted_invariants(G.spec).get(kind) if G.spec is not None else None
    report = InvariantReport(kind, G.spec, mode, predicted=predicted, seed=seed)
    if mode is Mode.Exhaustive:
        value, witness, stats, method = _exhaustive(G, kind, budget, workers, checkpoint,
                                                    progress, direct)
        report.computed = value
        report.witness = witness
        report.stats = stats
        report.method = method
        report.universal_check_length = _forcing_length(kind, value)
        report.witness_verified = avoids(G, witness, kind) and \
            len(witness) == _witness_length(kind, value)
        return report

    if predicted is None:
        raise InvalidParams(f"no closed form for {kind.value} on this family; use exhaustive mode")
    wlen = _witness_length(kind, predicted)
    report.method = "known-witness"
    witness = None
    for cand in known_witnesses(G, kind):
        if len(cand) == wlen and avoids(G, cand, kind):
            witness = cand
            break
    if witness is None:
        witness = _find_witness(G, kind, wlen, budget, workers, progress)
        report.method = "witness-search"
    report.witness = witness
    report.witness_verified = witness is not None
    if mode is Mode.Sampled:
        check_len = _forcing_length(kind, predicted)
        report.universal_check_length = check_len
        report.samples = samples
        report.counterexamples, report.undecided = sample_check(G, kind, check_len, samples, seed)
        report.method += "+sampled"
    return report


@dataclass
class InequalityCheck:
    name: str
    lhs: int
    rhs: int
    holds: bool
    equality_expected: bool
    equality: bool

    def to_json(self) -> dict:
        return dict(self.__dict__)


@dataclass
class InequalityReport:
    checks: list

    @property
    def ok(self) -> bool:
        return all(c.holds and (c.equality or not c.equality_expected) for c in self.checks)

    def to_json(self) -> dict:
        return {"ok": self.ok, "checks": [c.to_json() for c in self.checks]}


def verify_inequalities(G: GroupTable, reports) -> InequalityReport:
    """E >= d + |G| and s >= eta + exp - 1, with equality expected on the mdic family.

    ``reports`` maps kinds to InvariantReports (or plain integers); a check is
    skipped when either side is missing.
    """
    vals = {}
    for kind, rep in dict(reports).items():
        kind = InvariantKind.parse(kind) if isinstance(kind, str) else kind
        vals[kind] = rep if isinstance(rep, int) else rep.value
    equal = G.spec is not None and G.spec.family == "mdic"
    K = InvariantKind
    checks = []
    if vals.get(K.Gao) is not None and vals.get(K.SmallDavenport) is not None:
        lhs, rhs = vals[K.Gao], vals[K.SmallDavenport] + G.order
        checks.append(InequalityCheck("E >= d + |G|", lhs, rhs, lhs >= rhs, equal, lhs == rhs))
    if vals.get(K.EGZ) is not None and vals.get(K.Eta) is not None:
        lhs, rhs = vals[K.EGZ], vals[K.Eta] + G.exponent - 1
        checks.append(InequalityCheck("s >= eta + exp - 1", lhs, rhs, lhs >= rhs, equal,
                                      lhs == rhs))
    return InequalityReport(checks)


def clear_cache() -> None:
    _EXHAUSTIVE_CACHE.clear()


__all__ = [
    "InvariantKind", "Mode", "InvariantReport", "InequalityReport", "predicted_invariants",
    "known_witnesses", "universal_check", "compute_invariant", "verify_inequalities",
    "sample_check", "avoids", "predicate_for", "clear_cache",
]
