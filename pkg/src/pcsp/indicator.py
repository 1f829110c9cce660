"""Instances to conditions and back, and condition checking in Pol(A, B).

``condition_to_instance`` builds the indicator: one copy of A^n per symbol,
glued along the identities.  A homomorphism of the indicator into B is read
back as one table per symbol.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .conditions import FunctionSymbol, Identity, MinorCondition, check_identities
from .core import (LIMITS, Partition, PromiseTemplate, Structure, all_tuples, canonical_tuples,
                   check_elements, check_tuples, decode, disjoint_union, power, quotient,
                   radix_weights)
from .errors import CapacityError
from .homsearch import search_hom
from .minionlab import FunctionTable, is_polymorphism


def instance_to_condition(a: Structure, i: Structure, name=None) -> MinorCondition:
    """Symbols f_v (arity |A|) per element of I, g_C (arity |R^A|) per constraint.

    Each constraint C = R(v_1..v_k) yields k identities
    ``f_{v_j}(x_0..x_{|A|-1}) = g_C(x_{r_0[j]}, ..., x_{r_{m-1}[j]})`` where
    r_0 < r_1 < ... lists R^A in canonical order.
    """
    if not a.similar(i):
        raise ValueError("template and instance are not similar")
    n = a.domain_size
    syms = [FunctionSymbol(f"f{v}", n, "U") for v in range(i.domain_size)]
    ids = []
    c = 0
    for (rname, k), rel_i, rel_a in zip(i.signature, i.relations, a.relations):
        if len(rel_i) and len(rel_a) == 0:
            raise ValueError(f"relation {rname} is empty in {a.name}; a constraint on it would need a nullary symbol")
        for row in rel_i.tolist():
            g = f"g{c}"
            c += 1
            syms.append(FunctionSymbol(g, len(rel_a), "V"))
            for j, v in enumerate(row):
                ids.append(Identity(f"f{v}", tuple(range(n)), g, tuple(rel_a[:, j].tolist())))
    return MinorCondition(name or f"sigma({a.name},{i.name})", tuple(syms), tuple(ids))


@dataclass(frozen=True)
class VertexLabel:
    symbol: str
    args: tuple

    def __str__(self):
        return f"{self.symbol}({','.join(map(str, self.args))})"


@dataclass
class Indicator:
    """An indicator instance and the bookkeeping to decode homomorphisms from it.

    ``vertices[s]`` gives, for every tuple index of A^arity(s) kept for s, the
    vertex of ``structure`` it became; ``kept[s]`` lists those tuple indices
    (all of them for a full indicator).
    """
    structure: Structure
    condition: MinorCondition
    base: int
    kept: dict
    vertices: dict
    labels: list
    full: bool
    pre_size: int

    def vertex_of(self, symbol: str, args) -> int:
        n = self.condition.symbol(symbol).arity
        idx = int(np.dot(np.asarray(args, dtype=np.int64), radix_weights(self.base, n))) if n else 0
        pos = np.searchsorted(self.kept[symbol], idx)
        if pos >= len(self.kept[symbol]) or self.kept[symbol][pos] != idx:
            raise KeyError(f"{symbol}{tuple(args)} is not part of this indicator")
        return int(self.vertices[symbol][pos])

    def decode(self, h, out_domain: int) -> dict:
        """Tables ``zeta(s)(a) = h(vertex of s(a))``; only defined for full indicators."""
        if not self.full:
            raise ValueError("a partial indicator does not determine the tables")
        h = np.asarray(h, dtype=np.int64)
        return {s.name: FunctionTable(self.base, out_domain, s.arity, h[self.vertices[s.name]], name=s.name)
                for s in self.condition.symbols}

    def label_strings(self) -> list[str]:
        return [str(l) for l in self.labels]


def _identity_pairs(idn: Identity, base: int, offsets: dict, position: dict):
    """Pre-structure vertex pairs glued by one identity, over all of A^nvars."""
    x = all_tuples(base, idn.nvars)
    li = x[:, list(idn.lhs_args)] @ radix_weights(base, len(idn.lhs_args))
    ri = x[:, list(idn.rhs_args)] @ radix_weights(base, len(idn.rhs_args))
    return position[idn.lhs](li) + offsets[idn.lhs], position[idn.rhs](ri) + offsets[idn.rhs]


def _glue(c, parts, kept, a, full, name):
    union, offs = disjoint_union(parts, name=name)
    offsets = {s.name: off for s, off in zip(c.symbols, offs)}
    position = {s.name: (lambda idx, k=kept[s.name]: np.searchsorted(k, idx)) for s in c.symbols}
    left, right = [], []
    for idn in c.identities:
        check_elements("identity instances", a.domain_size ** idn.nvars)
        l, r = _identity_pairs(idn, a.domain_size, offsets, position)
        left.append(l)
        right.append(r)
    if left:
        p = Partition.from_pairs(union.domain_size, np.concatenate(left), np.concatenate(right))
    else:
        p = Partition.identity(union.domain_size)
    q, index_map = quotient(union, p)
    q = q.renamed(name)
    vertices = {s.name: index_map[offsets[s.name]: offsets[s.name] + len(kept[s.name])] for s in c.symbols}
    labels = [None] * q.domain_size
    for s in c.symbols:
        args = decode(kept[s.name], a.domain_size, s.arity)
        for v, t in zip(vertices[s.name].tolist(), args.tolist()):
            if labels[v] is None:
                labels[v] = VertexLabel(s.name, tuple(t))
    return Indicator(q, c, a.domain_size, kept, vertices, labels, full, union.domain_size)


def indicator_size(c: MinorCondition, a: Structure) -> int:
    return sum(a.domain_size ** s.arity for s in c.symbols)


def condition_to_instance(c: MinorCondition, a: Structure) -> Indicator:
    """The full indicator: disjoint powers of ``a``, one per symbol, quotiented by the identities."""
    if any(s.arity < 1 for s in c.symbols):
        raise ValueError("symbols need positive arity")
    check_elements(f"indicator of {c.name} over {a.name}", indicator_size(c, a))
    parts = [power(a, s.arity) for s in c.symbols]
    kept = {s.name: np.arange(a.domain_size ** s.arity, dtype=np.int64) for s in c.symbols}
    return _glue(c, parts, kept, a, True, f"I[{c.name},{a.name}]")


def _induced_power(a: Structure, m: int, idx: np.ndarray) -> Structure:
    """Substructure of A^m induced on the tuples with indices ``idx`` (sorted)."""
    d = a.domain_size
    D = decode(idx, d, m)
    s = len(idx)
    rels = []
    for (_, k), rel in zip(a.signature, a.relations):
        if len(rel) == 0 or s == 0:
            rels.append(np.zeros((0, k), dtype=np.int64))
            continue
        # join one position at a time; prefixes of R^A filter each column
        prefix_codes = [np.unique(rel[:, :j + 1] @ radix_weights(d, j + 1)) for j in range(k)]
        P = np.arange(s, dtype=np.int64)[:, None]
        codes = D.copy()                               # per partial tuple, per column
        ok = np.all(np.isin(codes, prefix_codes[0]), axis=1)
        P, codes = P[ok], codes[ok]
        for j in range(1, k):
            check_tuples("induced power join", len(P) * s)
            cand = (codes[:, None, :] * d + D[None, :, :]).reshape(-1, m)
            ok = np.all(np.isin(cand, prefix_codes[j]), axis=1)
            pi, si = np.divmod(np.flatnonzero(ok), s)
            P = np.hstack([P[pi], si[:, None]])
            codes = cand[ok]
        rels.append(canonical_tuples(P, k))
    return Structure(f"{a.name}^{m}|sub", s, a.signature, rels, canonical=True)


def touched_indicator(c: MinorCondition, a: Structure) -> Indicator:
    """The indicator restricted to vertices named in some identity.

    It is an induced substructure of the full indicator, so when it has no
    homomorphism to B neither does the full one.  Built without materializing
    the full powers.
    """
    d = a.domain_size
    touched = {s.name: [] for s in c.symbols}
    for idn in c.identities:
        check_elements("identity instances", d ** idn.nvars)
        x = all_tuples(d, idn.nvars)
        touched[idn.lhs].append(x[:, list(idn.lhs_args)] @ radix_weights(d, len(idn.lhs_args)))
        touched[idn.rhs].append(x[:, list(idn.rhs_args)] @ radix_weights(d, len(idn.rhs_args)))
    kept = {nm: (np.unique(np.concatenate(v)) if v else np.zeros(0, np.int64)) for nm, v in touched.items()}
    check_elements("touched indicator", sum(len(v) for v in kept.values()))
    parts = [_induced_power(a, s.arity, kept[s.name]) for s in c.symbols]
    return _glue(c, parts, kept, a, False, f"I[{c.name},{a.name}]|touched")


# checking a condition in Pol(A, B)

@dataclass
class WitnessReport:
    identities: list
    polymorphisms: dict

    @property
    def ok(self):
        return all(self.identities) and all(self.polymorphisms.values())


def verify_witness(c: MinorCondition, t: PromiseTemplate, zeta: dict) -> WitnessReport:
    """Independent check: every table is a polymorphism and every identity holds pointwise."""
    pols = {}
    for s in c.symbols:
        f = zeta.get(s.name)
        pols[s.name] = bool(f is not None and f.arity == s.arity and f.in_domain == t.a.domain_size
                            and f.out_domain == t.b.domain_size and is_polymorphism(f, t).ok)
    if not all(pols.values()):
        return WitnessReport([False] * len(c.identities), pols)
    return WitnessReport(check_identities(c, zeta), pols)


@dataclass
class ConditionResult:
    status: str                 # "sat", "unsat" or "unknown"
    method: str                 # "explicit", "indicator", "touched-indicator", "budget"
    witness: dict | None = None
    report: WitnessReport | None = None
    nodes: int = 0
    indicator_size: int | None = None
    notes: list = field(default_factory=list)

    def __bool__(self):
        return self.status == "sat"

    def certificate(self, budget=None) -> dict:
        cert = {"kind": {"sat": "witness", "unsat": "unsat"}.get(self.status, "unknown"),
                "method": self.method, "nodes": self.nodes}
        if self.witness is not None:
            cert["tables"] = {k: table_json(f) for k, f in self.witness.items()}
        if self.status == "unknown":
            cert["budget"] = budget
        if self.report is not None:
            cert["verification"] = {
                "identities": ["pass" if ok else "fail" for ok in self.report.identities],
                "polymorphisms": {k: "pass" if ok else "fail" for k, ok in self.report.polymorphisms.items()},
            }
        return cert


def table_json(f: FunctionTable) -> dict:
    return {"in": f.in_domain, "out": f.out_domain, "arity": f.arity, "outputs": f.outputs.tolist()}


def check_condition_in_pol(c: MinorCondition, t: PromiseTemplate, *, witness: dict | None = None,
                           node_budget=None, order="dom/wdeg", jobs=1, deterministic=True,
                           allow_partial=True) -> ConditionResult:
    """Decide whether ``c`` is satisfied in Pol(A, B).

    A supplied witness is verified first.  Otherwise the full indicator is
    searched when it fits the size cap; failing that the touched indicator can
    still refute (its SAT answers are inconclusive).
    """
    notes = []
    if witness is not None:
        rep = verify_witness(c, t, witness)
        if rep.ok:
            return ConditionResult("sat", "explicit", dict(witness), rep)
        notes.append("supplied witness failed verification")
    kw = dict(order=order, node_budget=node_budget, jobs=jobs, deterministic=deterministic)
    size = indicator_size(c, t.a)
    if size <= LIMITS.max_elements:
        try:
            ind = condition_to_instance(c, t.a)
        except CapacityError as exc:
            notes.append(str(exc))
            ind = None
        if ind is not None:
            out = search_hom(ind.structure, t.b, **kw)
            if out.status == "sat":
                zeta = ind.decode(out.mapping, t.b.domain_size)
                rep = verify_witness(c, t, zeta)
                if not rep.ok:
                    raise AssertionError("decoded witness failed verification")
                return ConditionResult("sat", "indicator", zeta, rep, out.nodes, ind.structure.domain_size, notes)
            if out.status == "unsat":
                return ConditionResult("unsat", "indicator", None, None, out.nodes, ind.structure.domain_size, notes)
            return ConditionResult("unknown", "budget", None, None, out.nodes, ind.structure.domain_size, notes)
    else:
        notes.append(f"full indicator has {size} pre-vertices, over the cap {LIMITS.max_elements}")
    if not allow_partial:
        return ConditionResult("unknown", "capacity", notes=notes)
    ind = touched_indicator(c, t.a)
    out = search_hom(ind.structure, t.b, **kw)
    n = ind.structure.domain_size
    if out.status == "unsat":
        return ConditionResult("unsat", "touched-indicator", None, None, out.nodes, n, notes)
    notes.append("touched indicator maps to the target; inconclusive" if out.status == "sat"
                 else "budget exhausted on the touched indicator")
    return ConditionResult("unknown", "touched-indicator", None, None, out.nodes, n, notes)


# clique certificates

def _adjacency(graph: Structure):
    if len(graph.signature) != 1 or graph.signature[0][1] != 2:
        raise ValueError("clique search needs a graph (one binary relation)")
    n = graph.domain_size
    e = graph.relations[0]
    pairs = set(map(tuple, e.tolist()))
    adj = [0] * n
    for u, v in pairs:
        if u != v and (v, u) in pairs:
            adj[u] |= 1 << v
    return adj


def is_clique(graph: Structure, vertices) -> bool:
    pairs = graph.tuple_sets()[0]
    vs = list(vertices)
    return len(set(vs)) == len(vs) and all(
        (u, v) in pairs for u in vs for v in vs if u != v)


def clique_certificate(graph: Structure, size: int, *, seed=(), node_budget=None):
    """A clique with ``size`` vertices (containing ``seed``), or None when there is none.

    Greedy extension is tried first, then an exact branch and bound over
    bitsets.  The result is re-verified before being returned.
    """
    from .errors import BudgetExceeded
    adj = _adjacency(graph)
    n = len(adj)
    seed = list(dict.fromkeys(int(v) for v in seed))
    cand = (1 << n) - 1
    for v in seed:
        cand &= adj[v]
    if not is_clique(graph, seed):
        return None
    need = size - len(seed)
    if need <= 0:
        return seed[:size] if size >= 0 else None
    degree = [bin(adj[v] & cand).count("1") for v in range(n)]

    # greedy: repeatedly take the candidate with most neighbours among the candidates
    picked, c = [], cand
    while c and len(picked) < need:
        best = max((v for v in range(n) if (c >> v) & 1), key=lambda v: bin(adj[v] & c).count("1"))
        picked.append(best)
        c &= adj[best]
    if len(picked) == need:
        out = seed + picked
        assert is_clique(graph, out)
        return out

    nodes = [0]

    def expand(chosen, c):
        if len(chosen) == need:
            return chosen
        if bin(c).count("1") < need - len(chosen):
            return None
        nodes[0] += 1
        if node_budget is not None and nodes[0] > node_budget:
            raise BudgetExceeded(nodes[0], node_budget)
        order = sorted((v for v in range(n) if (c >> v) & 1), key=lambda v: -degree[v])
        for v in order:
            got = expand(chosen + [v], c & adj[v])
            if got is not None:
                return got
            c &= ~(1 << v)
            if bin(c).count("1") < need - len(chosen):
                return None
        return None

    found = expand([], cand)
    if found is None:
        return None
    out = seed + found
    assert is_clique(graph, out)
    return out


def graph_is_loopless(graph: Structure) -> bool:
    e = graph.relations[0]
    return not np.any(e[:, 0] == e[:, 1]) if len(e) else True


def clique_refutes(graph: Structure, clique_vertices, target: Structure) -> bool:
    """A clique of size s in ``graph`` rules out maps into a loopless target with clique number < s."""
    if not graph_is_loopless(target) or not is_clique(graph, clique_vertices):
        return False
    return clique_certificate(target, len(clique_vertices)) is None
