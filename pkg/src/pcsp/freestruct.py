"""Free structures of minions, the power structure, LP_l and IP_l, minion homomorphism tests.

A minion here is anything that can list its n-ary members and take minors.
Relation tuples of F_M(A) are produced as images: every m-ary g in M
(m = |R^A|) contributes the tuple of its minors along the columns of R^A.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .conditions import (alternating, cyclic, example_2_16, example_2_18, g_loop, olsak, siggers,
                         symmetric)
from .core import (LIMITS, PromiseTemplate, Structure, all_tuples, canonical_tuples, check_elements,
                   check_tuples, clique, power, radix_weights)
from .errors import BudgetExceeded, CapacityError
from .homsearch import search_hom, verify_hom
from .minionlab import FunctionTable, enumerate_polymorphisms


def _minor_columns(base: int, m: int, pi, n: int) -> np.ndarray:
    """Index map A^n -> A^m realizing ``g(x_pi(0), ..., x_pi(m-1))``."""
    x = all_tuples(base, n)
    return x[:, list(pi)] @ radix_weights(base, m)


class TableMinion:
    """A minion given by explicit tables (must be closed under the minors used).

    Members of one arity are kept as the rows of an output array in
    lexicographic order.
    """

    def __init__(self, tables: Sequence[FunctionTable]):
        tables = list(tables)
        if not tables:
            raise ValueError("a table minion needs at least one table")
        self.in_domain = tables[0].in_domain
        self.out_domain = tables[0].out_domain
        by_arity = {}
        for f in tables:
            if (f.in_domain, f.out_domain) != (self.in_domain, self.out_domain):
                raise ValueError("tables of a minion share their domains")
            by_arity.setdefault(f.arity, []).append(f.outputs)
        self._arrays = {n: np.unique(np.stack(rows), axis=0) for n, rows in by_arity.items()}

    def table_array(self, n: int) -> np.ndarray:
        if n not in self._arrays:
            return np.zeros((0, self.in_domain ** n), dtype=np.int64)
        return self._arrays[n]

    def universe(self, n: int) -> np.ndarray:
        return self.table_array(n)

    def element(self, universe, i, n):
        return FunctionTable(self.in_domain, self.out_domain, n, universe[i], name=f"t{i}")

    def label(self, row) -> str:
        return "".join(map(str, np.asarray(row).tolist()))

    def image_rows(self, n: int, universe: np.ndarray, columns: Sequence[tuple]) -> np.ndarray:
        m = len(columns[0]) if columns else 0
        return _table_images(self.table_array(m), self.in_domain, self.out_domain, n, universe, columns)


DEFAULT_POLYMORPHISM_CAP = 500_000


class PolymorphismMinion(TableMinion):
    """Pol(A, B), enumerated arity by arity on demand (at most ``cap`` members per arity)."""

    def __init__(self, t: PromiseTemplate, cap=DEFAULT_POLYMORPHISM_CAP):
        self.template = t
        self.in_domain = t.a.domain_size
        self.out_domain = t.b.domain_size
        self.cap = cap
        self._arrays = {}

    def table_array(self, n: int) -> np.ndarray:
        if n not in self._arrays:
            check_elements(f"Pol({self.template.name}) arity {n} inputs", self.in_domain ** n)
            stream = enumerate_polymorphisms(self.template, n, cap=self.cap)
            arr = stream.array()
            if stream.truncated:
                raise CapacityError(f"Pol({self.template.name})^({n})", len(arr) + 1, self.cap)
            self._arrays[n] = arr
        return self._arrays[n]


def _table_images(G, base, out, n, U, columns):
    """Universe positions of the column minors of every row of G."""
    if len(G) == 0:
        return np.zeros((0, len(columns)), dtype=np.int64)
    m = len(columns[0])
    width = base ** n
    fits = out ** width < 2 ** 62
    if fits:
        w = radix_weights(out, width)
        ucodes = U @ w
        order = np.argsort(ucodes)
        sorted_codes = ucodes[order]
    else:
        lookup = {row.tobytes(): i for i, row in enumerate(U)}
    cols = []
    for col in columns:
        minors = G[:, _minor_columns(base, m, col, n)]
        if fits:
            codes = minors @ w
            pos = np.minimum(np.searchsorted(sorted_codes, codes), len(sorted_codes) - 1)
            if len(sorted_codes) == 0 or not np.array_equal(sorted_codes[pos], codes):
                raise ValueError("a minor leaves the minion: the table list is not minor-closed")
            cols.append(order[pos])
        else:
            try:
                cols.append(np.array([lookup[r.tobytes()] for r in minors], dtype=np.int64))
            except KeyError:
                raise ValueError("a minor leaves the minion: the table list is not minor-closed") from None
    return np.stack(cols, axis=1)


class ProjectionMinion:
    """Projections: the n-ary members are the coordinates 0..n-1."""

    def universe(self, n):
        return list(range(n))

    def label(self, e):
        return f"p{e + 1}"

    def element(self, universe, i, n):
        return universe[i]

    def image_rows(self, n, universe, columns):
        m = len(columns[0]) if columns else 0
        return np.array([[col[j] for col in columns] for j in range(m)], dtype=np.int64).reshape(m, len(columns))


class HornMinion:
    """Conjunctions of variables: the n-ary members are the nonempty subsets of [n] (as bitmasks)."""

    def universe(self, n):
        return list(range(1, 1 << n))

    def label(self, e):
        return _subset_label(e)

    def element(self, universe, i, n):
        return universe[i]

    def image_rows(self, n, universe, columns):
        m = len(columns[0]) if columns else 0
        check_tuples("Horn minion images", (1 << m) - 1)
        J = np.arange(1, 1 << m, dtype=np.int64)
        out = []
        for col in columns:
            img = np.zeros(len(J), dtype=np.int64)
            for j in range(m):
                img |= ((J >> j) & 1) << col[j]
            out.append(img - 1)          # universe position of bitmask b is b - 1
        return np.stack(out, axis=1) if out else np.zeros((len(J), 0), np.int64)


def as_minion(source):
    if isinstance(source, PromiseTemplate):
        return PolymorphismMinion(source)
    if isinstance(source, (TableMinion, ProjectionMinion, HornMinion)):
        return source
    return TableMinion(source)


@dataclass
class FreeStructure:
    structure: Structure
    minion: object
    universe: object        # output array for table minions, a list otherwise
    arity: int

    def element(self, i):
        return self.minion.element(self.universe, i, self.arity)

    def labels(self) -> list[str]:
        return [self.minion.label(e) for e in self.universe]


def free_structure(source, a: Structure, cap=None) -> FreeStructure:
    """F_M(A): universe M^(|A|); a relation tuple for every m-ary g and its column minors."""
    minion = as_minion(source)
    if cap is not None and isinstance(minion, PolymorphismMinion):
        minion.cap = cap
    n = a.domain_size
    universe = minion.universe(n)
    check_elements("free structure universe", len(universe))
    rels = []
    for (_, k), rel in zip(a.signature, a.relations):
        if len(rel) == 0:
            rels.append(np.zeros((0, k), dtype=np.int64))
            continue
        columns = [tuple(rel[:, i].tolist()) for i in range(k)]
        rows = minion.image_rows(n, universe, columns)
        rels.append(canonical_tuples(rows, k))
    s = Structure(f"F({a.name})", len(universe), a.signature, rels, canonical=True)
    return FreeStructure(s, minion, universe, n)


def free_tuple_witness(t: PromiseTemplate, a: Structure, relation: str, tables: Sequence[FunctionTable],
                       node_budget=None):
    """An m-ary g in Pol(t) whose column minors are ``tables``, or None.

    Searches power(t.a, m) -> t.b with g pinned wherever a minor fixes it.
    """
    rel = a.relation(relation)
    m = len(rel)
    base = t.a.domain_size
    n = a.domain_size
    check_elements("witness search domain", base ** m)
    pinned = {}
    for i, f in enumerate(tables):
        idx = _minor_columns(base, m, rel[:, i].tolist(), n)
        for src, val in zip(idx.tolist(), f.outputs.tolist()):
            if pinned.setdefault(src, val) != val:
                return None
    domains = [None] * base ** m
    for src, val in pinned.items():
        domains[src] = [val]
    out = search_hom(power(t.a, m), t.b, domains=domains, node_budget=node_budget)
    if out.status == "budget":
        raise BudgetExceeded(out.nodes, node_budget)
    if out.status == "unsat":
        return None
    return FunctionTable(base, t.b.domain_size, m, out.mapping, name="g")


# power structure and width 1

def _subset_label(mask):
    return "{" + ",".join(str(i) for i in range(mask.bit_length()) if (mask >> i) & 1) + "}"


def power_structure(a: Structure) -> Structure:
    """Nonempty subsets of A (element b-1 is the subset with bitmask b); a tuple
    (I_1..I_k) is present when some nonempty J in R^A has I_i = {r(i) : r in J}."""
    n = a.domain_size
    check_elements(f"power structure of {a.name}", (1 << n) - 1)
    rels = []
    for (_, k), rel in zip(a.signature, a.relations):
        base = [tuple(1 << int(x) for x in row) for row in rel.tolist()]
        seen = set(base)
        frontier = list(seen)
        while frontier:
            nxt = []
            for t in frontier:
                for r in base:
                    u = tuple(p | q for p, q in zip(t, r))
                    if u not in seen:
                        seen.add(u)
                        nxt.append(u)
            check_tuples("power structure relation", len(seen))
            frontier = nxt
        rows = np.array(sorted(seen), dtype=np.int64).reshape(-1, k) - 1
        rels.append(canonical_tuples(rows, k))
    return Structure(f"P({a.name})", (1 << n) - 1, a.signature, rels, canonical=True)


def power_structure_labels(a: Structure) -> list[str]:
    return [_subset_label(b) for b in range(1, 1 << a.domain_size)]


@dataclass
class Width1Result:
    holds: bool
    hom: tuple | None

    def __bool__(self):
        return self.holds


def width1_check(t: PromiseTemplate, node_budget=None) -> Width1Result:
    """Arc consistency solves PCSP(A, B) iff the power structure of A maps to B."""
    ps = power_structure(t.a)
    out = search_hom(ps, t.b, node_budget=node_budget)
    if out.status == "budget":
        raise BudgetExceeded(out.nodes, node_budget)
    if out.status == "sat":
        assert verify_hom(ps, t.b, out.mapping)
        return Width1Result(True, out.mapping)
    return Width1Result(False, None)


# LP_l and IP_l

def _compositions(total, parts):
    """Nonnegative integer vectors of length ``parts`` summing to ``total``, in lex order."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _bounded_integer_vectors(parts, l1_bound, total):
    """Integer vectors with the given sum and sum of absolute values <= l1_bound, in lex order."""
    def rec(i, budget, remaining):
        if i == parts - 1:
            if abs(remaining) <= budget:
                yield (remaining,)
            return
        for v in range(-budget, budget + 1):
            for rest in rec(i + 1, budget - abs(v), remaining - v):
                yield (v,) + rest
    if parts == 0:
        return iter(())
    return rec(0, l1_bound, total)


def _marginal_structure(a, name, universe, gammas_for, scale):
    """Structure on weight vectors; tuples are the marginals of each admissible gamma."""
    index = {v: i for i, v in enumerate(universe)}
    d = a.domain_size
    rels = []
    for (_, k), rel in zip(a.signature, a.relations):
        rows = []
        m = len(rel)
        for gamma in gammas_for(m):
            g = np.asarray(gamma, dtype=np.int64)
            row = []
            for i in range(k):
                marg = np.bincount(rel[:, i], weights=g, minlength=d).astype(np.int64)
                row.append(index[tuple(Fraction(int(x), scale) for x in marg)])
            rows.append(row)
            if len(rows) > LIMITS.max_tuples:
                raise CapacityError(f"{name} relation", len(rows), LIMITS.max_tuples)
        rels.append(canonical_tuples(np.array(rows, dtype=np.int64).reshape(-1, k), k))
    return Structure(name, len(universe), a.signature, rels, canonical=True)


@dataclass
class WeightStructure:
    structure: Structure
    vectors: list          # tuples of Fractions, lexicographically sorted

    def labels(self):
        return ["(" + ",".join(str(x) for x in v) + ")" for v in self.vectors]


def lp_structure(a: Structure, ell: int) -> WeightStructure:
    """Distributions on A with denominators dividing ``ell``."""
    if ell < 1:
        raise ValueError("ell must be positive")
    d = a.domain_size
    vectors = sorted(tuple(Fraction(q, ell) for q in c) for c in _compositions(ell, d))
    check_elements("LP universe", len(vectors))
    s = _marginal_structure(a, f"LP{ell}({a.name})", vectors, lambda m: _compositions(ell, m), ell)
    return WeightStructure(s, vectors)


def ip_structure(a: Structure, ell: int) -> WeightStructure:
    """Integer weightings of A with sum 1 and absolute sum at most 2*ell + 1."""
    if ell < 0:
        raise ValueError("ell must be nonnegative")
    d = a.domain_size
    bound = 2 * ell + 1
    vectors = sorted(tuple(Fraction(x) for x in v) for v in _bounded_integer_vectors(d, bound, 1))
    check_elements("IP universe", len(vectors))
    s = _marginal_structure(a, f"IP{ell}({a.name})", vectors,
                            lambda m: _bounded_integer_vectors(m, bound, 1), 1)
    return WeightStructure(s, vectors)


def lp_hom_from_symmetric(ws: WeightStructure, s: FunctionTable) -> tuple:
    """h(phi) = s(a_1..a_l) with each a listed phi(a)*l times."""
    ell = s.arity
    out = []
    for phi in ws.vectors:
        args = [a for a, w in enumerate(phi) for _ in range(int(w * ell))]
        if len(args) != ell:
            raise ValueError("weight vector does not match the arity of s")
        out.append(s(args))
    return tuple(out)


def ip_hom_from_alternating(ws: WeightStructure, f: FunctionTable) -> tuple:
    """h(phi) = f(a_1..a_{2l+1}) where a occurs phi(a) more often at odd than at even positions."""
    n = f.arity
    ell = (n - 1) // 2
    out = []
    for phi in ws.vectors:
        pos = [a for a, w in enumerate(phi) for _ in range(max(int(w), 0))]
        neg = [a for a, w in enumerate(phi) for _ in range(max(-int(w), 0))]
        pad = ell - len(neg)
        if pad < 0 or len(pos) + pad != ell + 1:
            raise ValueError("weight vector out of range for this arity")
        odd = pos + [0] * pad
        even = neg + [0] * pad
        args = [None] * n
        args[0::2] = odd
        args[1::2] = even
        out.append(f(args))
    return tuple(out)


# minion homomorphisms

def refutation_library():
    """Conditions tried when refuting a minion homomorphism without the free structure."""
    return [olsak(), siggers(), cyclic(2), cyclic(3), symmetric(2), symmetric(3),
            example_2_16(), example_2_18(), alternating(3), g_loop(clique(4))]


@dataclass
class MinionHomResult:
    status: str                     # "yes", "no" or "unknown"
    method: str
    hom: tuple | None = None
    condition: str | None = None
    free_size: int | None = None
    notes: list = field(default_factory=list)

    def __bool__(self):
        return self.status == "yes"


def minion_hom_exists(source: PromiseTemplate, target: PromiseTemplate, cap=None,
                      node_budget=None) -> MinionHomResult:
    """Is there a minion homomorphism Pol(source) -> Pol(target)?

    Decided by searching F_{Pol(source)}(target.a) -> target.b when the free
    structure fits; otherwise a condition satisfied in the source and not in
    the target refutes.
    """
    from .indicator import check_condition_in_pol
    notes = []
    if source.a == target.a and source.b == target.b:
        return MinionHomResult("yes", "identity")
    try:
        fs = free_structure(source, target.a, cap=cap)
    except CapacityError as exc:
        notes.append(str(exc))
        fs = None
    if fs is not None:
        out = search_hom(fs.structure, target.b, node_budget=node_budget)
        if out.status == "sat":
            assert verify_hom(fs.structure, target.b, out.mapping)
            return MinionHomResult("yes", "free-structure", out.mapping, free_size=fs.structure.domain_size)
        if out.status == "unsat":
            return MinionHomResult("no", "free-structure", free_size=fs.structure.domain_size)
        notes.append("budget exhausted on the free structure search")
    for c in refutation_library():
        try:
            in_target = check_condition_in_pol(c, target, node_budget=node_budget)
            if in_target.status != "unsat":
                continue
            in_source = check_condition_in_pol(c, source, node_budget=node_budget)
        except CapacityError as exc:
            notes.append(f"{c.name}: {exc}")
            continue
        if in_source.status == "sat":
            return MinionHomResult("no", "condition", condition=c.name, notes=notes)
    return MinionHomResult("unknown", "exhausted", notes=notes)
