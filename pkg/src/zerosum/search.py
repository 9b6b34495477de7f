"""Pruned, symmetry-reduced DFS over multisets, with checkpoints and workers.

Multisets are enumerated as non-decreasing id lists.  Automorphism orbits are
cut at the first two levels only: a first element must be the least of its
orbit, and a first pair must be lexicographically least among the sorted
images of that pair.  Because the two least terms of any multiset bound the
two least terms of each of its images, the lexicographically least image of
every multiset survives both cuts.

Root-level branches (one per admissible first element) are the unit of work
for the worker pool and for checkpoints.  Results are merged in branch order,
so the outcome never depends on the worker count.
"""

from __future__ import annotations

import json
import logging
import os
import signal
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels as K
from .errors import BudgetExceeded
from .groups import GroupTable, automorphisms
from .sequences import DP_STATE_CAP, Sequence, kernel_context

log = logging.getLogger(__name__)

DEFAULT_NODE_BUDGET = 10**10
DEFAULT_CHECKPOINT_EVERY = 5 * 10**6
INITIAL_CAPACITY = 1 << 14
MAX_COLLECT = 1 << 16


@dataclass
class SearchStats:
    nodes: int = 0
    prunes: int = 0
    branches: int = 0
    wall_time: float = 0.0

    def to_json(self, timings: bool = False) -> dict:
        d = {"nodes": self.nodes, "prunes": self.prunes, "branches": self.branches}
        if timings:
            d["wall_time"] = round(self.wall_time, 3)
        return d


@dataclass
class SearchResult:
    status: str                        # "done" | "found" | "budget"
    found: Optional[list] = None       # counterexample terms (target mode)
    best: Optional[list] = None        # deepest node (max-depth mode)
    collected: list = field(default_factory=list)
    stats: SearchStats = field(default_factory=SearchStats)
    checkpoint: Optional[dict] = None


@dataclass(frozen=True)
class Predicate:
    """What a node must avoid: code from ``_kernels`` and its parameters."""

    code: int
    k: int = 0
    e: int = 0

    @classmethod
    def free(cls) -> "Predicate":
        return cls(K.PRED_FREE)

    @classmethod
    def short(cls, exponent: int) -> "Predicate":
        return cls(K.PRED_SHORT, 0, exponent)

    @classmethod
    def k_product(cls, k: int) -> "Predicate":
        return cls(K.PRED_K, k, 0)

    def to_json(self) -> dict:
        return {"code": self.code, "k": self.k, "e": self.e}

    def depth_bound(self, G: GroupTable) -> Optional[int]:
        """Upper bound on the length of a sequence avoiding this predicate.

        Prefix products give d(G) <= |G| - 1.  A short-free sequence holds each
        g fewer than ord(g) <= exp(G) times.  With k a multiple of exp(G), k
        copies of any g multiply to 1, so each g appears at most k - 1 times.
        None means the free sequences are unbounded.
        """
        if self.code == K.PRED_FREE:
            return G.order
        if self.code == K.PRED_SHORT:
            return G.order * (self.e - 1)
        if self.k > 0 and self.k % G.exponent == 0:
            return G.order * (self.k - 1)
        return None


def orbit_masks(G: GroupTable, auts) -> tuple[np.ndarray, np.ndarray]:
    """Admissible first elements and first pairs under the automorphism list."""
    order = G.order
    P = np.asarray(auts, dtype=np.int64) if len(auts) else np.arange(order)[None, :]
    first_ok = P.min(axis=0) == np.arange(order)
    a = np.arange(order)[:, None]
    b = np.arange(order)[None, :]
    pair_ok = np.ones((order, order), dtype=np.bool_)
    for perm in P:
        pa, pb = perm[a], perm[b]
        lo, hi = np.minimum(pa, pb), np.maximum(pa, pb)
        better = (lo < a) | ((lo == a) & (hi < b))
        pair_ok &= ~better
    pair_ok &= a <= b
    return first_ok.astype(np.bool_), pair_ok


class _Branch:
    """Kernel driver for one root branch; resumable across calls."""

    def __init__(self, G: GroupTable, pred: Predicate, target: int, collect: bool,
                 first_ok, pair_ok, root: int, capacity: int = INITIAL_CAPACITY):
        self.G = G
        self.pred = pred
        self.target = target
        self.collect = collect
        self.first_ok = first_ok
        self.pair_ok = pair_ok
        self.root = root
        self.capacity = capacity
        self.reset()

    def reset(self):
        if self.target > 0:
            maxdepth = self.target
        else:
            maxdepth = self.pred.depth_bound(self.G)
            if maxdepth is None:
                raise ValueError("unbounded search: k must be a multiple of the exponent")
        self.depth_bound = maxdepth
        self.stats = np.zeros(4, dtype=np.int64)
        self.out_seq = np.zeros(maxdepth + 1, dtype=np.int64)
        self.out_collect = np.zeros((MAX_COLLECT if self.collect else 1, max(self.target, 1)),
                                    dtype=np.int64)
        self.resume_seq = np.zeros(0, dtype=np.int64)
        self.resume_nxt = np.zeros(0, dtype=np.int64)
        self.status = None

    def load(self, state: dict):
        self.stats = np.asarray(state["stats"], dtype=np.int64)
        self.resume_seq = np.asarray(state["seq"], dtype=np.int64)
        self.resume_nxt = np.asarray(state["nxt"], dtype=np.int64)
        best = state.get("best", [])
        self.out_seq[: len(best)] = best
        for i, row in enumerate(state.get("collected", [])):
            self.out_collect[i, : len(row)] = row

    def state(self) -> dict:
        return {
            "stats": [int(v) for v in self.stats],
            "seq": [int(v) for v in self.resume_seq],
            "nxt": [int(v) for v in self.resume_nxt],
            "best": [int(v) for v in self.out_seq[: self.stats[3]]],
            "collected": [[int(v) for v in row] for row in self.out_collect[: self.stats[2]]]
            if self.collect else [],
        }

    def run(self, node_cap: int) -> int:
        """Advance until finished or ``stats[0] >= node_cap``; returns kernel status."""
        G = self.G
        RT, nbytes, inv = kernel_context(G)
        while True:
            status, depth, seq, nxt = K.dfs_search(
                G.order, G.identity, inv, RT, nbytes, G.is_abelian,
                self.pred.code, self.pred.k, self.pred.e, self.target, self.collect,
                self.first_ok, self.pair_ok,
                np.array([self.root], dtype=np.int64), self.resume_seq, self.resume_nxt,
                node_cap, self.capacity, self.out_seq, self.out_collect,
                self.out_collect.shape[0], self.stats, self.depth_bound)
            if status == K.CAPACITY:
                if self.capacity >= DP_STATE_CAP:
                    raise BudgetExceeded("sub-multiset table exceeded the DP state cap")
                self.capacity *= 4
                self.reset()
                continue
            if status == K.DEPTH:
                raise RuntimeError("search exceeded its proven depth bound")
            if status == K.COLLECT_FULL:
                raise BudgetExceeded("too many collected sequences in one branch")
            if status == K.BUDGET:
                self.resume_seq = seq[:depth].copy()
                self.resume_nxt = nxt[: depth + 1].copy()
            self.status = status
            return status


def _run_branch_job(args):
    G, pred, target, collect, first_ok, pair_ok, root, cap, state = args
    br = _Branch(G, pred, target, collect, first_ok, pair_ok, root)
    if state:
        br.load(state)
    status = br.run(cap)
    return status, br.state()


class DFSRunner:
    """Runs the branch DFS for one (group, predicate, target) configuration."""

    def __init__(self, G: GroupTable, pred: Predicate, target: int = 0, collect: bool = False,
                 auts=None, budget: int = DEFAULT_NODE_BUDGET, workers: int = 1,
                 checkpoint_path: Optional[str] = None,
                 checkpoint_every: int = DEFAULT_CHECKPOINT_EVERY, progress: bool = False):
        if kernel_context(G) is None:
            raise BudgetExceeded(f"exhaustive search needs order <= {K.MAX_KERNEL_ORDER}")
        self.G = G
        self.pred = pred
        self.target = target
        self.collect = collect
        self.auts = automorphisms(G) if auts is None else auts
        self.first_ok, self.pair_ok = orbit_masks(G, self.auts)
        self.budget = budget
        self.workers = max(1, workers)
        self.checkpoint_path = checkpoint_path
        self.checkpoint_every = checkpoint_every
        self.progress = progress
        self.roots = [g for g in range(G.order) if self.first_ok[g]]

    def config(self) -> dict:
        spec = self.G.spec.to_json() if self.G.spec else None
        return {"group": spec, "pred": self.pred.to_json(), "target": self.target,
                "collect": self.collect}

    def _load_checkpoint(self) -> dict:
        if self.checkpoint_path and os.path.exists(self.checkpoint_path):
            with open(self.checkpoint_path) as fh:
                ck = json.load(fh)
            if ck.get("config") == self.config():
                return ck
            log.warning("ignoring checkpoint with a different configuration")
        return {"config": self.config(), "done": {}, "partial": {}}

    def _save_checkpoint(self, ck: dict):
        if not self.checkpoint_path:
            return
        tmp = self.checkpoint_path + ".tmp"
        with open(tmp, "w") as fh:
            json.dump(ck, fh, sort_keys=True)
        os.replace(tmp, self.checkpoint_path)

    def run(self) -> SearchResult:
        t0 = time.perf_counter()
        ck = self._load_checkpoint()
        old_handler = None
        if self.checkpoint_path:
            def _flush(signum, frame):
                self._save_checkpoint(ck)
                raise KeyboardInterrupt
            try:
                old_handler = signal.signal(signal.SIGINT, _flush)
            except ValueError:  # not in main thread
                old_handler = None
        try:
            if self.workers > 1:
                result = self._run_parallel(ck)
            else:
                result = self._run_serial(ck)
        finally:
            if old_handler is not None:
                signal.signal(signal.SIGINT, old_handler)
        result.stats.wall_time = time.perf_counter() - t0
        return result

    def _report(self, idx: int, br, done: bool = False) -> None:
        if not self.progress:
            return
        nodes, prunes = int(br.stats[0]), int(br.stats[1])
        rate = prunes / max(nodes + prunes, 1)
        log.info("branch %d/%d %s: %d nodes, prune rate %.2f", idx + 1, len(self.roots),
                 "done" if done else "running", nodes, rate)

    def _used(self, ck) -> int:
        return sum(v["stats"][0] for v in ck["done"].values())

    def _run_serial(self, ck) -> SearchResult:
        for idx, root in enumerate(self.roots):
            key = str(idx)
            if key in ck["done"]:
                if ck["done"][key]["status"] == K.FOUND:
                    break
                continue
            br = _Branch(self.G, self.pred, self.target, self.collect,
                         self.first_ok, self.pair_ok, root)
            if key in ck["partial"]:
                br.load(ck["partial"][key])
            used_before = self._used(ck)
            while True:
                cap = self.budget - used_before
                chunk = min(cap, int(br.stats[0]) + self.checkpoint_every)
                status = br.run(chunk)
                if status == K.BUDGET:
                    ck["partial"][key] = br.state()
                    self._save_checkpoint(ck)
                    self._report(idx, br)
                    if br.stats[0] >= cap:
                        return self._merge(ck, budget_hit=True)
                    continue
                break
            self._report(idx, br, done=True)
            ck["partial"].pop(key, None)
            ck["done"][key] = dict(br.state(), status=int(status))
            self._save_checkpoint(ck)
            if status == K.FOUND:
                break
        return self._merge(ck)

    def _run_parallel(self, ck) -> SearchResult:
        jobs = []
        with ProcessPoolExecutor(max_workers=self.workers) as pool:
            for idx, root in enumerate(self.roots):
                key = str(idx)
                if key in ck["done"]:
                    jobs.append(None)
                    continue
                args = (self.G, self.pred, self.target, self.collect, self.first_ok,
                        self.pair_ok, root, self.budget, ck["partial"].get(key))
                jobs.append(pool.submit(_run_branch_job, args))
            used = self._used(ck)
            for idx, fut in enumerate(jobs):
                key = str(idx)
                if fut is None:
                    entry = ck["done"][key]
                    if entry["status"] == K.FOUND:
                        break
                    continue
                status, state = fut.result()
                entry = dict(state, status=int(status))
                if status == K.BUDGET or used + entry["stats"][0] >= self.budget:
                    for f in jobs[idx + 1:]:
                        if f is not None:
                            f.cancel()
                    if status == K.BUDGET:
                        ck["partial"][key] = state
                    self._save_checkpoint(ck)
                    return self._merge(ck, budget_hit=True)
                used += entry["stats"][0]
                if self.progress:
                    st = entry["stats"]
                    log.info("branch %d/%d done: %d nodes, prune rate %.2f", idx + 1,
                             len(self.roots), st[0], st[1] / max(st[0] + st[1], 1))
                ck["done"][key] = entry
                ck["partial"].pop(key, None)
                if status == K.FOUND:
                    for f in jobs[idx + 1:]:
                        if f is not None:
                            f.cancel()
                    break
            self._save_checkpoint(ck)
        return self._merge(ck)

    def _merge(self, ck, budget_hit: bool = False) -> SearchResult:
        stats = SearchStats()
        res = SearchResult("done", stats=stats)
        best_len = -1
        for idx in range(len(self.roots)):
            entry = ck["done"].get(str(idx))
            if entry is None:
                continue
            st = entry["stats"]
            stats.nodes += st[0]
            stats.prunes += st[1]
            stats.branches += 1
            if len(entry["best"]) > best_len:
                best_len = len(entry["best"])
                res.best = list(entry["best"])
            res.collected.extend(entry["collected"])
            if entry["status"] == K.FOUND:
                res.status = "found"
                res.found = list(entry["best"])
                break
        if budget_hit:
            for key in sorted(ck["partial"], key=int):
                entry = ck["partial"][key]
                stats.nodes += entry["stats"][0]
                stats.prunes += entry["stats"][1]
                if len(entry["best"]) > best_len:
                    best_len = len(entry["best"])
                    res.best = list(entry["best"])
            res.status = "budget"
            res.checkpoint = ck
        return res
