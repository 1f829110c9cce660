"""Minor conditions: representation, generators, triviality, robustness, Label Cover.

Variables are 0-based.  An identity ``lhs(x[l_0], ...) = rhs(x[r_0], ...)``
is a minor identity when the left arguments are ``x_0, ..., x_{n-1}`` in
order; general height-1 identities are allowed and can be bipartized.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .core import Structure, all_tuples, radix_weights
from .errors import BudgetExceeded, ParseError

SIDES = ("U", "V", "-")


@dataclass(frozen=True)
class FunctionSymbol:
    name: str
    arity: int
    side: str = "-"

    def __post_init__(self):
        if self.arity < 1:
            raise ValueError(f"symbol {self.name} needs positive arity")
        if self.side not in SIDES:
            raise ValueError(f"side must be one of {SIDES}")


@dataclass(frozen=True)
class Identity:
    lhs: str
    lhs_args: tuple
    rhs: str
    rhs_args: tuple

    @property
    def nvars(self) -> int:
        return max(self.lhs_args + self.rhs_args, default=-1) + 1

    @property
    def is_minor(self) -> bool:
        return self.lhs_args == tuple(range(len(self.lhs_args)))

    @property
    def pi(self) -> tuple:
        return self.rhs_args

    def __str__(self):
        l = ",".join(f"x{i + 1}" for i in self.lhs_args)
        r = ",".join(f"x{i + 1}" for i in self.rhs_args)
        return f"{self.lhs}({l}) = {self.rhs}({r})"


MinorIdentity = Identity


def minor_identity(lhs: str, n: int, rhs: str, pi: Sequence[int]) -> Identity:
    """``lhs(x_0..x_{n-1}) = rhs(x_pi[0], ...)``."""
    pi = tuple(int(i) for i in pi)
    if any(not 0 <= i < n for i in pi):
        raise ValueError("minor map leaves [n]")
    return Identity(lhs, tuple(range(n)), rhs, pi)


@dataclass(frozen=True)
class MinorCondition:
    name: str
    symbols: tuple
    identities: tuple

    def __post_init__(self):
        names = [s.name for s in self.symbols]
        if len(set(names)) != len(names):
            raise ValueError("symbol names must be unique")
        ar = {s.name: s.arity for s in self.symbols}
        for idn in self.identities:
            for sym, args in ((idn.lhs, idn.lhs_args), (idn.rhs, idn.rhs_args)):
                if sym not in ar:
                    raise ValueError(f"undeclared symbol {sym}")
                if len(args) != ar[sym]:
                    raise ValueError(f"{sym} has arity {ar[sym]}, used with {len(args)} arguments")
            used = set(idn.lhs_args) | set(idn.rhs_args)
            if used != set(range(idn.nvars)):
                raise ValueError(f"identity {idn} does not use variables x1..x{idn.nvars}")

    def symbol(self, name) -> FunctionSymbol:
        for s in self.symbols:
            if s.name == name:
                return s
        raise KeyError(name)

    @property
    def arity(self) -> dict:
        return {s.name: s.arity for s in self.symbols}

    @property
    def bipartite(self) -> bool:
        side = {s.name: s.side for s in self.symbols}
        return all(i.is_minor and side[i.lhs] == "U" and side[i.rhs] == "V" for i in self.identities)

    def __len__(self):
        return len(self.identities)

    def __str__(self):
        return serialize_condition(self)


def rename(c: MinorCondition, mapping: Mapping[str, str], name=None) -> MinorCondition:
    m = lambda s: mapping.get(s, s)
    syms = tuple(FunctionSymbol(m(s.name), s.arity, s.side) for s in c.symbols)
    ids = tuple(Identity(m(i.lhs), i.lhs_args, m(i.rhs), i.rhs_args) for i in c.identities)
    return MinorCondition(name or c.name, syms, ids)


# generators

def _bip(name, u_syms, v_syms, ids):
    syms = tuple(FunctionSymbol(n, a, "U") for n, a in u_syms) + \
        tuple(FunctionSymbol(n, a, "V") for n, a in v_syms)
    return MinorCondition(name, syms, tuple(ids))


OLSAK_MAPS = ((0, 0, 1, 1, 1, 0), (0, 1, 0, 1, 0, 1), (1, 0, 0, 0, 1, 1))
SIGGERS_MAPS = ((0, 1, 0, 2, 1, 2), (1, 0, 2, 0, 2, 1))
EX216_MAPS = ((1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1))


def olsak() -> MinorCondition:
    return _bip("olsak", [("f", 2)], [("o", 6)], [minor_identity("f", 2, "o", p) for p in OLSAK_MAPS])


def siggers(form="bipartite") -> MinorCondition:
    if form == "one-symbol":
        sym = FunctionSymbol("s", 6, "-")
        return MinorCondition("siggers", (sym,), (Identity("s", SIGGERS_MAPS[0], "s", SIGGERS_MAPS[1]),))
    return _bip("siggers", [("f", 3)], [("s", 6)], [minor_identity("f", 3, "s", p) for p in SIGGERS_MAPS])


def loop_edges(g: Structure) -> list[tuple[int, int]]:
    """Edges of a symmetric loopless graph: each {u<v} as (u, v) then (v, u)."""
    if len(g.signature) != 1 or g.signature[0][1] != 2:
        raise ValueError("g_loop needs a graph (one binary relation)")
    edges = set(map(tuple, g.relations[0].tolist()))
    if any(u == v for u, v in edges):
        raise ValueError("g_loop needs a loopless graph")
    if any((v, u) not in edges for u, v in edges):
        raise ValueError("g_loop needs a symmetric relation")
    return [e for u, v in sorted(edges) if u < v for e in ((u, v), (v, u))]


def g_loop(g: Structure) -> MinorCondition:
    edges = loop_edges(g)
    n = g.domain_size
    src = [u for u, _ in edges]
    dst = [v for _, v in edges]
    return _bip(f"{g.name}-loop", [("f", n)], [("e", len(edges))],
                [minor_identity("f", n, "e", src), minor_identity("f", n, "e", dst)])


def cyclic(n: int) -> MinorCondition:
    if n < 1:
        raise ValueError("cyclic needs n >= 1")
    shift = [(i + 1) % n for i in range(n)]
    return _bip(f"cyclic{n}", [("t", n)], [("s", n)],
                [minor_identity("t", n, "s", range(n)), minor_identity("t", n, "s", shift)])


def _transposition(n, i, j):
    p = list(range(n))
    p[i], p[j] = p[j], p[i]
    return p


def symmetric(n: int, form="bipartite") -> MinorCondition:
    """Invariance under the adjacent transpositions (a generating set of S_n)."""
    if n < 1:
        raise ValueError("symmetric needs n >= 1")
    swaps = [_transposition(n, i, i + 1) for i in range(n - 1)]
    if form == "one-symbol":
        return MinorCondition(f"symmetric{n}", (FunctionSymbol("s", n, "-"),),
                              tuple(Identity("s", tuple(range(n)), "s", tuple(p)) for p in swaps))
    ids = [minor_identity("f", n, "s", range(n))] + [minor_identity("f", n, "s", p) for p in swaps]
    return _bip(f"symmetric{n}", [("f", n)], [("s", n)], ids)


def _surjections(n, i):
    for pi in itertools.product(range(i), repeat=n):
        if len(set(pi)) == i:
            yield pi


def totally_symmetric(n: int) -> MinorCondition:
    if n < 1:
        raise ValueError("totally_symmetric needs n >= 1")
    ids = [minor_identity(f"f{i}", i, "g", pi) for i in range(1, n + 1) for pi in _surjections(n, i)]
    return _bip(f"totally_symmetric{n}", [(f"f{i}", i) for i in range(1, n + 1)], [("g", n)], ids)


def alternating(n: int) -> MinorCondition:
    """Odd arity n: parity-preserving permutations, plus a(x.., y, y) = a(x.., z, z) through c."""
    if n < 1 or n % 2 == 0:
        raise ValueError("alternating needs odd n")
    ids = [minor_identity("f", n, "a", range(n))]
    ids += [minor_identity("f", n, "a", _transposition(n, i, i + 2)) for i in range(n - 2)]
    u = [("f", n)]
    if n >= 3:
        head = list(range(n - 2))
        ids.append(minor_identity("c", n, "a", head + [n - 2, n - 2]))
        ids.append(minor_identity("c", n, "a", head + [n - 1, n - 1]))
        u.append(("c", n))
    return _bip(f"alternating{n}", u, [("a", n)], ids)


def majority_sets(n: int) -> tuple[list[frozenset], list[frozenset]]:
    """(S_n, MS_n): index sets where the iterated ternary majority is 1, and the minimal ones."""
    size = 3 ** n
    x = all_tuples(2, size)
    vals = x
    for _ in range(n):
        vals = (vals.reshape(len(x), -1, 3).sum(axis=2) >= 2).astype(np.int64)
    true_rows = np.flatnonzero(vals[:, 0] == 1)
    S = [frozenset(np.flatnonzero(x[r]).tolist()) for r in true_rows]
    Sset = set(S)
    MS = [I for I in S if not any((I - {i}) in Sset for i in I)]
    key = lambda I: (len(I), sorted(I))
    return sorted(S, key=key), sorted(MS, key=key)


def majority_robust(n: int) -> MinorCondition:
    if n not in (1, 2):
        raise ValueError("majority_robust supports n in {1, 2}")
    size = 3 ** n
    _, MS = majority_sets(n)
    slot = {}
    for I in MS:
        for i in range(size):
            if i not in I:
                slot[(I, i)] = 1 + len(slot)
    arity_f = 1 + len(slot)
    ids = [minor_identity("f", arity_f, "g", [0 if i in I else slot[(I, i)] for i in range(size)])
           for I in MS]
    return _bip(f"majority_robust{n}", [("f", arity_f)], [("g", size)], ids)


def example_2_16() -> MinorCondition:
    return _bip("example_2_16", [("f", 2)], [("g", 4)], [minor_identity("f", 2, "g", p) for p in EX216_MAPS])


def example_2_18() -> MinorCondition:
    return _bip("example_2_18", [("f", 2)], [("g", 6)], [minor_identity("f", 2, "g", p) for p in OLSAK_MAPS])


GENERATORS = {
    "olsak": olsak,
    "siggers": siggers,
    "g_loop": g_loop,
    "cyclic": cyclic,
    "symmetric": symmetric,
    "totally_symmetric": totally_symmetric,
    "alternating": alternating,
    "majority_robust": majority_robust,
    "example_2_16": example_2_16,
    "example_2_18": example_2_18,
}


def generate_condition(kind: str, *params, **kw) -> MinorCondition:
    if kind not in GENERATORS:
        raise ValueError(f"unknown condition kind '{kind}'")
    return GENERATORS[kind](*params, **kw)


def bipartize_height1(c: MinorCondition) -> MinorCondition:
    """Replace every identity by two minor identities through a fresh symbol."""
    if c.bipartite:
        return c
    taken = {s.name for s in c.symbols}
    fresh = []
    for j in range(len(c.identities)):
        base = "e" if len(c.identities) == 1 else f"e{j + 1}"
        nm = base
        while nm in taken:
            nm += "_"
        taken.add(nm)
        fresh.append(nm)
    syms = tuple(FunctionSymbol(nm, idn.nvars, "U") for nm, idn in zip(fresh, c.identities))
    syms += tuple(FunctionSymbol(s.name, s.arity, "V") for s in c.symbols)
    ids = []
    for nm, idn in zip(fresh, c.identities):
        ids.append(minor_identity(nm, idn.nvars, idn.lhs, idn.lhs_args))
        ids.append(minor_identity(nm, idn.nvars, idn.rhs, idn.rhs_args))
    return MinorCondition(c.name, syms, tuple(ids))


# satisfaction by concrete tables

def identity_holds(idn: Identity, zeta: Mapping) -> bool:
    f, g = zeta[idn.lhs], zeta[idn.rhs]
    size = f.in_domain
    x = all_tuples(size, idn.nvars)
    fi = x[:, list(idn.lhs_args)] @ radix_weights(size, len(idn.lhs_args))
    gi = x[:, list(idn.rhs_args)] @ radix_weights(size, len(idn.rhs_args))
    return bool(np.array_equal(f.outputs[fi], g.outputs[gi]))


def check_identities(c: MinorCondition, zeta: Mapping) -> list[bool]:
    """Pointwise verification of every identity under the assignment ``zeta``."""
    for s in c.symbols:
        if s.name in zeta and zeta[s.name].arity != s.arity:
            raise ValueError(f"table for {s.name} has the wrong arity")
    return [identity_holds(idn, zeta) for idn in c.identities]


# projections

def _agrees(idn: Identity, i: int, j: int) -> bool:
    return idn.lhs_args[i] == idn.rhs_args[j]


def projection_score(c: MinorCondition, assignment: Mapping[str, int]) -> int:
    """Number of identities satisfied when symbol s is read as projection ``assignment[s]``."""
    return sum(_agrees(idn, assignment[idn.lhs], assignment[idn.rhs]) for idn in c.identities)


@dataclass
class TrivialityResult:
    trivial: bool
    assignment: dict | None = None

    def __bool__(self):
        return self.trivial


def is_trivial(c: MinorCondition) -> TrivialityResult:
    """Decide satisfiability by projections: a CSP over coordinate labels."""
    dom = {s.name: set(range(s.arity)) for s in c.symbols}
    arcs = {}  # (a, b) -> list of identities seen from a's side
    for idn in c.identities:
        if idn.lhs == idn.rhs:
            dom[idn.lhs] = {i for i in dom[idn.lhs] if _agrees(idn, i, i)}
            continue
        arcs.setdefault((idn.lhs, idn.rhs), []).append((idn, False))
        arcs.setdefault((idn.rhs, idn.lhs), []).append((idn, True))

    def ok(idn, flip, a_val, b_val):
        return _agrees(idn, b_val, a_val) if flip else _agrees(idn, a_val, b_val)

    neighbours = {}
    for a, b in arcs:
        neighbours.setdefault(b, set()).add(a)

    def ac3(dom):
        queue = list(arcs)
        while queue:
            a, b = queue.pop()
            keep = {x for x in dom[a]
                    if any(all(ok(idn, fl, x, y) for idn, fl in arcs[(a, b)]) for y in dom[b])}
            if keep != dom[a]:
                dom[a] = keep
                if not keep:
                    return False
                queue.extend((z, a) for z in neighbours.get(a, ()) if z != b)
        return all(dom.values())

    def solve(dom):
        if not ac3(dom):
            return None
        open_ = [s for s in dom if len(dom[s]) > 1]
        if not open_:
            return {s: next(iter(v)) for s, v in dom.items()}
        s = min(open_, key=lambda t: (len(dom[t]), t))
        for v in sorted(dom[s]):
            trial = {k: set(x) for k, x in dom.items()}
            trial[s] = {v}
            got = solve(trial)
            if got is not None:
                return got
        return None

    if any(not d for d in dom.values()):
        return TrivialityResult(False)
    sol = solve(dom)
    if sol is None:
        return TrivialityResult(False)
    assert projection_score(c, sol) == len(c.identities)
    return TrivialityResult(True, sol)


@dataclass
class RobustnessResult:
    value: Fraction
    assignment: dict
    satisfied: int
    total: int


def max_projection_fraction(c: MinorCondition, node_budget=None) -> RobustnessResult:
    """Exact maximum fraction of identities satisfiable by one projection assignment."""
    total = len(c.identities)
    if total == 0:
        return RobustnessResult(Fraction(1), {s.name: 0 for s in c.symbols}, 0, 0)
    count = {s.name: 0 for s in c.symbols}
    for idn in c.identities:
        count[idn.lhs] += 1
        count[idn.rhs] += 1
    order = sorted((s for s in c.symbols), key=lambda s: (-count[s.name], s.name))
    pos = {s.name: i for i, s in enumerate(order)}
    # identities become decided when their later symbol is assigned
    decided_at = [[] for _ in order]
    for idn in c.identities:
        decided_at[max(pos[idn.lhs], pos[idn.rhs])].append(idn)
    remaining_after = [0] * (len(order) + 1)
    for i in range(len(order) - 1, -1, -1):
        remaining_after[i] = remaining_after[i + 1] + len(decided_at[i])

    best = [-1, None]
    assign = {}
    nodes = [0]

    def rec(i, score):
        if score + remaining_after[i] <= best[0]:
            return
        if i == len(order):
            best[0], best[1] = score, dict(assign)
            return
        nodes[0] += 1
        if node_budget is not None and nodes[0] > node_budget:
            raise BudgetExceeded(nodes[0], node_budget)
        s = order[i]
        gains = []
        for v in range(s.arity):
            assign[s.name] = v
            gains.append((sum(_agrees(idn, assign[idn.lhs], assign[idn.rhs]) for idn in decided_at[i]), v))
        for gain, v in sorted(gains, key=lambda t: (-t[0], t[1])):
            assign[s.name] = v
            rec(i + 1, score + gain)
        del assign[s.name]

    rec(0, 0)
    return RobustnessResult(Fraction(best[0], total), best[1], best[0], total)


# Label Cover

@dataclass(frozen=True)
class LabelCover:
    """Bipartite Label Cover: edge (u, v, pi) demands label(u) = pi[label(v)]."""
    left: tuple     # (name, number of labels)
    right: tuple
    edges: tuple    # (u, v, pi) with pi a tuple over v's labels

    def satisfied(self, labels: Mapping[str, int]) -> bool:
        return all(labels[u] == pi[labels[v]] for u, v, pi in self.edges)


def from_label_cover(lc: LabelCover, name="lc") -> MinorCondition:
    ln = dict(lc.left)
    ids = [minor_identity(u, ln[u], v, pi) for u, v, pi in lc.edges]
    return _bip(name, list(lc.left), list(lc.right), ids)


def to_label_cover(c: MinorCondition) -> LabelCover:
    if not c.bipartite:
        raise ValueError("to_label_cover needs a bipartite minor condition")
    left = tuple((s.name, s.arity) for s in c.symbols if s.side == "U")
    right = tuple((s.name, s.arity) for s in c.symbols if s.side == "V")
    edges = tuple((i.lhs, i.rhs, i.rhs_args) for i in c.identities)
    return LabelCover(left, right, edges)


# text format

def serialize_condition(c: MinorCondition) -> str:
    out = [f"condition {c.name}"]
    out += [f"symbol {s.name} {s.side} {s.arity}" for s in c.symbols]
    for idn in c.identities:
        if not idn.is_minor:
            raise ValueError("only minor identities can be written; bipartize first")
        out.append(f"identity {idn}")
    out.append("end")
    return "\n".join(out) + "\n"


_IDENTITY = re.compile(r"^identity\s+(\S+?)\s*\(([^)]*)\)\s*=\s*(\S+?)\s*\(([^)]*)\)\s*$")


def _var_list(text, lineno):
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        m = re.fullmatch(r"x(\d+)", tok)
        if not m or int(m.group(1)) < 1:
            raise ParseError(f"bad variable '{tok}'", lineno)
        out.append(int(m.group(1)) - 1)
    return tuple(out)


def parse_condition(text: str) -> MinorCondition:
    name = None
    syms = []
    ids = []
    ended = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ended:
            raise ParseError("content after 'end'", lineno, 1)
        head = line.split()[0]
        if head == "condition":
            parts = line.split()
            if len(parts) != 2 or name is not None:
                raise ParseError("expected a single 'condition <name>'", lineno, 1)
            name = parts[1]
        elif head == "symbol":
            parts = line.split()
            if len(parts) != 4 or parts[2] not in SIDES or not parts[3].isdigit():
                raise ParseError("expected 'symbol <name> <U|V|-> <arity>'", lineno, 1)
            syms.append(FunctionSymbol(parts[1], int(parts[3]), parts[2]))
        elif head == "identity":
            m = _IDENTITY.match(line)
            if not m:
                raise ParseError("expected 'identity f(x1,...,xn) = g(...)'", lineno, 1)
            lhs_args = _var_list(m.group(2), lineno)
            if lhs_args != tuple(range(len(lhs_args))):
                raise ParseError("left side must list x1..xn in order", lineno)
            rhs_args = _var_list(m.group(4), lineno)
            if any(i >= len(lhs_args) for i in rhs_args):
                raise ParseError("right side uses a variable missing on the left", lineno)
            ids.append(Identity(m.group(1), lhs_args, m.group(3), rhs_args))
        elif head == "end":
            ended = True
        else:
            raise ParseError(f"unexpected token '{head}'", lineno, 1)
    if name is None:
        raise ParseError("missing 'condition' header")
    if not ended:
        raise ParseError("missing 'end'")
    try:
        return MinorCondition(name, tuple(syms), tuple(ids))
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


def load_condition(path) -> MinorCondition:
    with open(path, encoding="utf-8") as fh:
        return parse_condition(fh.read())


def serialize_label_cover(lc: LabelCover, name="lc") -> str:
    out = [f"labelcover {name}"]
    out += [f"left {u} {n}" for u, n in lc.left]
    out += [f"right {v} {n}" for v, n in lc.right]
    out += [f"edge {u} {v} " + " ".join(map(str, pi)) for u, v, pi in lc.edges]
    out.append("end")
    return "\n".join(out) + "\n"


def parse_label_cover(text: str) -> LabelCover:
    """``labelcover <name>``, ``left <u> <labels>``, ``right <v> <labels>``,
    ``edge <u> <v> pi(0) .. pi(m-1)``, ``end``."""
    header = False
    left, right, edges = {}, {}, []
    ended = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        parts = raw.split("#", 1)[0].split()
        if not parts:
            continue
        if ended:
            raise ParseError("content after 'end'", lineno, 1)
        head = parts[0]
        if head == "labelcover":
            if header or len(parts) != 2:
                raise ParseError("expected a single 'labelcover <name>'", lineno, 1)
            header = True
        elif head in ("left", "right"):
            if len(parts) != 3 or not parts[2].isdigit() or int(parts[2]) < 1:
                raise ParseError(f"expected '{head} <name> <labels>'", lineno, 1)
            if parts[1] in left or parts[1] in right:
                raise ParseError(f"duplicate vertex '{parts[1]}'", lineno, 1)
            (left if head == "left" else right)[parts[1]] = int(parts[2])
        elif head == "edge":
            if len(parts) < 3 or parts[1] not in left or parts[2] not in right:
                raise ParseError("expected 'edge <left vertex> <right vertex> <map>'", lineno, 1)
            pi = parts[3:]
            if len(pi) != right[parts[2]] or not all(p.isdigit() and int(p) < left[parts[1]] for p in pi):
                raise ParseError("edge map must send every right label to a left label", lineno, 1)
            edges.append((parts[1], parts[2], tuple(int(p) for p in pi)))
        elif head == "end":
            ended = True
        else:
            raise ParseError(f"unexpected token '{head}'", lineno, 1)
    if not header:
        raise ParseError("missing 'labelcover' header")
    if not ended:
        raise ParseError("missing 'end'")
    return LabelCover(tuple(left.items()), tuple(right.items()), tuple(edges))
