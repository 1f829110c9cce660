"""Homomorphism search: propagation, backtracking, enumeration, (k,l)-consistency."""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from . import _kernels as K
from .core import LIMITS, Structure, check_tuples
from .errors import BudgetExceeded, CapacityError, SignatureMismatch

_ORDERS = {"static": K.ORDER_STATIC, "dom": K.ORDER_DOM, "dom/wdeg": K.ORDER_DOMWDEG}


@dataclass(frozen=True)
class Homomorphism:
    mapping: tuple

    def __getitem__(self, i):
        return self.mapping[i]

    def __len__(self):
        return len(self.mapping)

    def __iter__(self):
        return iter(self.mapping)


@dataclass(frozen=True)
class DomainTable:
    """Candidate target values per source element."""
    masks: tuple

    @property
    def sets(self):
        return tuple(frozenset(i for i in range(64) if (m >> i) & 1) for m in self.masks)

    def __getitem__(self, v):
        return self.sets[v]

    def __len__(self):
        return len(self.masks)


@dataclass
class SearchOutcome:
    status: str                      # "sat", "unsat" or "budget"
    mapping: tuple | None = None
    nodes: int = 0

    @property
    def found(self):
        return self.status == "sat"


def verify_hom(instance: Structure, target: Structure, mapping) -> bool:
    """Independent tuple-by-tuple check that ``mapping`` is a homomorphism."""
    h = np.asarray(mapping, dtype=np.int64)
    if h.shape != (instance.domain_size,):
        return False
    if instance.domain_size and (h.min() < 0 or h.max() >= target.domain_size):
        return False
    if not instance.similar(target):
        return False
    for rel_i, rel_t in zip(instance.relations, target.relations):
        if len(rel_i) == 0:
            continue
        img = h[rel_i]
        allowed = set(map(tuple, rel_t.tolist()))
        if any(tuple(row) not in allowed for row in img.tolist()):
            return False
    return True


def _full_mask(d):
    return np.uint64((1 << d) - 1) if d < 64 else np.uint64(0xFFFFFFFFFFFFFFFF)


class CompiledCSP:
    """Flat array encoding of ``instance -> target`` for the kernels."""

    def __init__(self, instance: Structure, target: Structure, domains=None, shuffle_seed=None):
        if not instance.similar(target):
            raise SignatureMismatch(f"{instance.name} and {target.name} are not similar")
        d = target.domain_size
        if d > 64:
            raise CapacityError("target domain for bitset search", d, 64)
        self.instance = instance
        self.target = target
        self.n = instance.domain_size
        self.d = d
        check_tuples(f"constraints of {instance.name}", instance.tuple_count)

        # target side
        t_arity, t_off, key_off, flat, sup_lists = [], [], [], [], []
        off = 0
        koff = 0
        for (_, k), rel in zip(target.signature, target.relations):
            t_arity.append(k)
            t_off.append(off)
            key_off.append(koff)
            flat.append(rel.ravel())
            off += rel.size
            koff += k * d
            for p in range(k):
                col = rel[:, p] if len(rel) else np.zeros(0, dtype=np.int64)
                for a in range(d):
                    sup_lists.append(np.flatnonzero(col == a))
        self.t_arity = np.asarray(t_arity, dtype=np.int64)
        self.t_off = np.asarray(t_off, dtype=np.int64)
        self.key_off = np.asarray(key_off, dtype=np.int64)
        self.T = np.concatenate(flat).astype(np.int64) if flat else np.zeros(0, np.int64)
        lens = np.array([len(s) for s in sup_lists], dtype=np.int64)
        self.sup_ptr = np.concatenate([[0], np.cumsum(lens)]).astype(np.int64)
        self.sup_idx = (np.concatenate(sup_lists).astype(np.int64) if sup_lists
                        else np.zeros(0, np.int64))

        # instance side
        c_rel, scopes, eqs = [], [], []
        for r, ((_, k), rel) in enumerate(zip(instance.signature, instance.relations)):
            if len(rel) == 0:
                continue
            if shuffle_seed is not None:
                rel = rel[np.random.default_rng(shuffle_seed + r).permutation(len(rel))]
            c_rel.append(np.full(len(rel), r, dtype=np.int64))
            scopes.append(rel.ravel())
            eq = np.tile(np.arange(k, dtype=np.int64), (len(rel), 1))
            for p in range(k - 1, -1, -1):
                for q in range(p - 1, -1, -1):
                    same = rel[:, q] == rel[:, p]
                    eq[same, p] = q
            eqs.append(eq.ravel())
        if c_rel:
            self.c_rel = np.concatenate(c_rel)
            self.scope = np.concatenate(scopes).astype(np.int64)
            self.eqpos = np.concatenate(eqs)
        else:
            self.c_rel = np.zeros(0, np.int64)
            self.scope = np.zeros(0, np.int64)
            self.eqpos = np.zeros(0, np.int64)
        ar = self.t_arity[self.c_rel] if len(self.c_rel) else np.zeros(0, np.int64)
        self.c_off = np.concatenate([[0], np.cumsum(ar)[:-1]]).astype(np.int64) if len(ar) else ar
        nc = len(self.c_rel)
        self.nc = nc
        cid = np.repeat(np.arange(nc, dtype=np.int64), ar)
        if nc:
            key = np.unique(self.scope * nc + cid)
            vars_, cons = key // nc, key % nc
        else:
            vars_ = cons = np.zeros(0, np.int64)
        counts = np.bincount(vars_, minlength=self.n).astype(np.int64)
        self.vc_ptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        self.vc_idx = cons.astype(np.int64)
        self.deg = counts

        full = _full_mask(d)
        if domains is None:
            self.dom0 = np.full(self.n, full, dtype=np.uint64)
        else:
            self.dom0 = _domain_masks(domains, self.n, d)

    def static_args(self):
        return (self.d, self.t_arity, self.t_off, self.T, self.key_off, self.sup_ptr, self.sup_idx,
                self.c_rel, self.c_off, self.scope, self.eqpos, self.vc_ptr, self.vc_idx)

    def new_state(self, dom=None):
        n, nc, d = self.n, self.nc, self.d
        return _State(
            res=np.full(len(self.scope) * d, -1, dtype=np.int64),
            dom=(self.dom0 if dom is None else dom).copy(),
            trail_var=np.zeros(n * (d + 1) + 1, dtype=np.int64),
            trail_old=np.zeros(n * (d + 1) + 1, dtype=np.uint64),
            queue=np.zeros(max(nc, 1), dtype=np.int64),
            inq=np.zeros(max(nc, 1), dtype=np.uint8),
            st=np.zeros(K.S_SIZE, dtype=np.int64),
            cw=np.ones(max(nc, 1), dtype=np.int64),
            wdeg=self.deg.copy() + 1,
            lvl_var=np.zeros(n + 1, dtype=np.int64),
            lvl_rem=np.zeros(n + 1, dtype=np.uint64),
            lvl_trail=np.zeros(n + 1, dtype=np.int64),
        )

    def propagate(self, state, first=0) -> bool:
        s = state
        return bool(K.propagate_all(*self.static_args(), s.res, s.dom, s.trail_var, s.trail_old,
                                    s.queue, s.inq, s.st, s.cw, s.wdeg, first))

    def run(self, state, order, sols, budget) -> int:
        s = state
        return int(K.search(*self.static_args(), s.res, s.dom, s.trail_var, s.trail_old,
                            s.queue, s.inq, s.st, s.cw, s.wdeg, self.deg,
                            s.lvl_var, s.lvl_rem, s.lvl_trail, order, sols, budget))


@dataclass
class _State:
    res: np.ndarray
    dom: np.ndarray
    trail_var: np.ndarray
    trail_old: np.ndarray
    queue: np.ndarray
    inq: np.ndarray
    st: np.ndarray
    cw: np.ndarray
    wdeg: np.ndarray
    lvl_var: np.ndarray
    lvl_rem: np.ndarray
    lvl_trail: np.ndarray

    @property
    def nodes(self):
        return int(self.st[K.S_NODES])


def _domain_masks(domains, n, d):
    """Accept a mask array, a DomainTable, or a sequence of value collections (None = all)."""
    if isinstance(domains, DomainTable):
        return np.asarray(domains.masks, dtype=np.uint64)
    arr = np.asarray(domains) if isinstance(domains, np.ndarray) else None
    if arr is not None and arr.dtype == np.uint64:
        if arr.shape != (n,):
            raise ValueError("domain mask array has the wrong length")
        return arr.copy()
    if len(domains) != n:
        raise ValueError("one domain per source element is required")
    out = np.zeros(n, dtype=np.uint64)
    full = int(_full_mask(d))
    for v, vals in enumerate(domains):
        if vals is None:
            out[v] = full
            continue
        m = 0
        for a in vals:
            if not 0 <= a < d:
                raise ValueError(f"domain value {a} out of range")
            m |= 1 << int(a)
        out[v] = m
    return out


def _mapping_from_masks(masks):
    return tuple(int(m).bit_length() - 1 for m in masks)


def gac(instance: Structure, target: Structure, domains=None, shuffle_seed=None) -> DomainTable | None:
    """Generalized arc consistency fixpoint; None when some domain empties."""
    csp = CompiledCSP(instance, target, domains, shuffle_seed=shuffle_seed)
    state = csp.new_state()
    if np.any(state.dom == 0):
        return None
    first = 0
    if shuffle_seed is not None and csp.nc:
        first = int(np.random.default_rng(shuffle_seed).integers(csp.nc))
    if not csp.propagate(state, first):
        return None
    return DomainTable(tuple(int(m) for m in state.dom))


def search_hom(instance: Structure, target: Structure, *, order="dom/wdeg", node_budget=None,
               domains=None, jobs=1, deterministic=True) -> SearchOutcome:
    """Complete backtracking search; never raises on budget, reports it instead."""
    csp = CompiledCSP(instance, target, domains)
    code = _ORDERS[order]
    budget = -1 if node_budget is None else int(node_budget)
    if jobs > 1 and not deterministic:
        return _parallel_search(csp, code, budget, jobs)
    state = csp.new_state()
    if np.any(state.dom == 0):
        return SearchOutcome("unsat", None, 0)
    sols = np.zeros((1, csp.n), dtype=np.int64)
    rc = csp.run(state, code, sols, budget)
    return _outcome(csp, state, rc, sols)


def _outcome(csp, state, rc, sols):
    if rc == K.R_BUDGET:
        return SearchOutcome("budget", None, state.nodes)
    if state.st[K.S_NSOL] > 0:
        mapping = tuple(int(x) for x in sols[0])
        if not verify_hom(csp.instance, csp.target, mapping):
            raise AssertionError("search produced an invalid homomorphism")
        return SearchOutcome("sat", mapping, state.nodes)
    return SearchOutcome("unsat", None, state.nodes)


def _parallel_search(csp, code, budget, jobs):
    root = csp.new_state()
    if np.any(root.dom == 0) or not csp.propagate(root):
        return SearchOutcome("unsat", None, 0)
    x = int(K._select(root.dom, K.ORDER_DOM, csp.deg, root.wdeg))
    if x < 0:
        mapping = _mapping_from_masks(root.dom)
        assert verify_hom(csp.instance, csp.target, mapping)
        return SearchOutcome("sat", mapping, 0)
    values = [a for a in range(csp.d) if (int(root.dom[x]) >> a) & 1]

    def branch(a):
        dom = root.dom.copy()
        dom[x] = np.uint64(1 << a)
        st = csp.new_state(dom)
        sols = np.zeros((1, csp.n), dtype=np.int64)
        rc = csp.run(st, code, sols, budget)
        return _outcome(csp, st, rc, sols)

    with ThreadPoolExecutor(max_workers=jobs) as pool:
        results = list(pool.map(branch, values))
    nodes = sum(r.nodes for r in results)
    for r in results:
        if r.status == "sat":
            return SearchOutcome("sat", r.mapping, nodes)
    if any(r.status == "budget" for r in results):
        return SearchOutcome("budget", None, nodes)
    return SearchOutcome("unsat", None, nodes)


def find_hom(instance: Structure, target: Structure, *, order="dom/wdeg", node_budget=None,
             domains=None, jobs=1, deterministic=True) -> Homomorphism | None:
    """A verified homomorphism, or None when none exists; BudgetExceeded otherwise."""
    out = search_hom(instance, target, order=order, node_budget=node_budget, domains=domains,
                     jobs=jobs, deterministic=deterministic)
    if out.status == "budget":
        raise BudgetExceeded(out.nodes, node_budget)
    return Homomorphism(out.mapping) if out.status == "sat" else None


class HomStream:
    """Iterator over all homomorphisms in lexicographic order of the map.

    ``truncated`` becomes True when iteration stopped at ``cap`` while more
    solutions may exist.
    """

    def __init__(self, instance, target, cap=None, domains=None, batch=4096):
        self.csp = CompiledCSP(instance, target, domains)
        self.cap = cap
        self.batch = batch
        self.truncated = False
        self.count = 0

    def arrays(self) -> Iterator[np.ndarray]:
        """Solutions in batches, as rows of an int64 array."""
        csp = self.csp
        state = csp.new_state()
        if np.any(state.dom == 0):
            return
        while True:
            want = self.batch
            if self.cap is not None:
                want = min(want, self.cap - self.count + 1)
            sols = np.zeros((max(want, 1), csp.n), dtype=np.int64)
            rc = csp.run(state, K.ORDER_STATIC, sols, -1)
            got = int(state.st[K.S_NSOL])
            if self.cap is not None and self.count + got > self.cap:
                got = self.cap - self.count
                self.truncated = True
            if got:
                self.count += got
                yield sols[:got]
            if self.truncated or rc == K.R_EXHAUSTED:
                return

    def __iter__(self) -> Iterator[Homomorphism]:
        for block in self.arrays():
            for row in block.tolist():
                yield Homomorphism(tuple(row))


def enumerate_homs(instance: Structure, target: Structure, cap=None, domains=None) -> HomStream:
    return HomStream(instance, target, cap=cap, domains=domains)


def count_homs(instance, target, cap=None) -> int:
    stream = enumerate_homs(instance, target, cap=cap)
    return sum(len(block) for block in stream.arrays())


def brute_force_homs(instance: Structure, target: Structure) -> list[tuple]:
    """All homomorphisms by exhaustive enumeration; an oracle for small inputs."""
    out = []
    rel_t = target.tuple_sets()
    for h in itertools.product(range(target.domain_size), repeat=instance.domain_size):
        if all(tuple(h[x] for x in row) in rel_t[j]
               for j, rel in enumerate(instance.relations) for row in rel.tolist()):
            out.append(h)
    return out


# (k,l)-consistency

@dataclass
class PartialHomFamily:
    k: int
    l: int
    maps: dict = field(default_factory=dict)   # sorted domain tuple -> set of value tuples

    def __bool__(self):
        return bool(self.maps.get((), set()))

    def size(self):
        return sum(len(v) for v in self.maps.values())


def _partial_homs(instance, target, X, rel_t, rels_i):
    pos = {x: i for i, x in enumerate(X)}
    inside = []
    for j, rel in enumerate(rels_i):
        for row in rel:
            if all(x in pos for x in row):
                inside.append((j, tuple(pos[x] for x in row)))
    good = set()
    for vals in itertools.product(range(target.domain_size), repeat=len(X)):
        if all(tuple(vals[i] for i in idx) in rel_t[j] for j, idx in inside):
            good.add(vals)
    return good


def kl_consistency(instance: Structure, target: Structure, k: int, l: int) -> PartialHomFamily | None:
    """Largest family of partial homomorphisms (domains of size <= l) closed under
    restriction and extension from <= k to l elements.  None when empty."""
    if not 1 <= k <= l:
        raise ValueError("need 1 <= k <= l")
    if not instance.similar(target):
        raise SignatureMismatch("structures are not similar")
    n = instance.domain_size
    top = min(l, n)
    from math import comb
    est = sum(comb(n, s) * target.domain_size ** s for s in range(top + 1))
    if est > LIMITS.max_tuples:
        raise CapacityError("(k,l)-consistency family", est, LIMITS.max_tuples)
    rel_t = target.tuple_sets()
    rels_i = [list(map(tuple, r.tolist())) for r in instance.relations]
    fam = {}
    for s in range(top + 1):
        for X in itertools.combinations(range(n), s):
            fam[X] = _partial_homs(instance, target, X, rel_t, rels_i)
    tops = [X for X in fam if len(X) == top]
    changed = True
    while changed:
        changed = False
        # restriction: every one-smaller restriction must be present
        for X in sorted(fam, key=len, reverse=True):
            if not X:
                continue
            keep = set()
            for f in fam[X]:
                ok = True
                for i in range(len(X)):
                    sub = X[:i] + X[i + 1:]
                    if f[:i] + f[i + 1:] not in fam[sub]:
                        ok = False
                        break
                if ok:
                    keep.add(f)
            if keep != fam[X]:
                fam[X] = keep
                changed = True
        # extension: maps on at most k elements extend to every top-size superset
        proj_cache = {}
        for X in fam:
            if len(X) > k:
                continue
            keep = set()
            for f in fam[X]:
                ok = True
                for Y in tops:
                    if not set(X) <= set(Y):
                        continue
                    key = (Y, X)
                    if key not in proj_cache:
                        idx = [Y.index(x) for x in X]
                        proj_cache[key] = {tuple(g[i] for i in idx) for g in fam[Y]}
                    if f not in proj_cache[key]:
                        ok = False
                        break
                if ok:
                    keep.add(f)
            if keep != fam[X]:
                fam[X] = keep
                changed = True
        if not fam[()]:
            return None
    return PartialHomFamily(k, l, fam)
