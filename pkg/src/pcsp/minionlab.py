"""Function tables, minors, polymorphism checks and the explicit constructions."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from . import _kernels as K
from .core import (PromiseTemplate, all_tuples, check_elements, clique,
                   nae, odd_parity, one_in_three, power, radix_weights, template)
from .errors import DomainMismatch, ParseError
from .homsearch import HomStream


class FunctionTable:
    """A map ``range(in_domain)**arity -> range(out_domain)`` stored by mixed-radix index."""

    __slots__ = ("in_domain", "out_domain", "arity", "outputs", "name")

    def __init__(self, in_domain: int, out_domain: int, arity: int, outputs, name: str = "f"):
        out = np.asarray(outputs, dtype=np.int64).ravel().copy()
        if len(out) != in_domain ** arity:
            raise ValueError(f"table needs {in_domain ** arity} entries, got {len(out)}")
        if out.size and (out.min() < 0 or out.max() >= out_domain):
            raise ValueError("table output out of range")
        out.flags.writeable = False
        self.in_domain = int(in_domain)
        self.out_domain = int(out_domain)
        self.arity = int(arity)
        self.outputs = out
        self.name = name

    def __call__(self, *args):
        if len(args) == 1 and not np.isscalar(args[0]):
            args = tuple(args[0])
        return int(self.outputs[self.index(args)])

    def index(self, args) -> int:
        i = 0
        for a in args:
            i = i * self.in_domain + int(a)
        return i

    def key(self):
        return (self.in_domain, self.out_domain, self.arity, self.outputs.tobytes())

    def __eq__(self, other):
        return isinstance(other, FunctionTable) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __lt__(self, other):
        return tuple(self.outputs) < tuple(other.outputs)

    def renamed(self, name):
        return FunctionTable(self.in_domain, self.out_domain, self.arity, self.outputs, name)

    def __repr__(self):
        body = "".join(map(str, self.outputs[:24].tolist())) + ("..." if len(self.outputs) > 24 else "")
        return f"FunctionTable({self.name}: {self.in_domain}^{self.arity}->{self.out_domain} [{body}])"


@dataclass(frozen=True)
class MinorMap:
    """``pi: [m] -> [n]`` stored 0-based; ``images[j] = pi(j)``."""
    images: tuple
    target_arity: int

    def __post_init__(self):
        if any(not 0 <= i < self.target_arity for i in self.images):
            raise ValueError("minor map leaves its codomain")


def projection(size: int, arity: int, i: int, out_size=None) -> FunctionTable:
    x = all_tuples(size, arity)
    return FunctionTable(size, out_size or size, arity, x[:, i], name=f"p{i + 1}")


def minor_of(g: FunctionTable, pi, n: int | None = None) -> FunctionTable:
    """The n-ary ``f(x_1..x_n) = g(x_pi(1), ..., x_pi(m))`` (pi 0-based)."""
    if isinstance(pi, MinorMap):
        images, n = pi.images, pi.target_arity
    else:
        images = tuple(int(i) for i in pi)
        n = (max(images) + 1 if images else 0) if n is None else n
    if len(images) != g.arity:
        raise ValueError("minor map length must equal the arity of g")
    MinorMap(images, n)
    check_elements("minor table", g.in_domain ** n)
    x = all_tuples(g.in_domain, n)
    gidx = x[:, list(images)] @ radix_weights(g.in_domain, g.arity) if images else np.zeros(len(x), np.int64)
    return FunctionTable(g.in_domain, g.out_domain, n, g.outputs[gidx], name=f"{g.name}^pi")


# polymorphism checks

@dataclass
class PolymorphismCheck:
    ok: bool
    relation: str | None = None
    columns: list | None = None       # violating column list: one tuple of R^A per coordinate

    def __bool__(self):
        return self.ok


def _violation_by_kronecker(f, rel_a, rel_b, A, B):
    """Binary relations: count R^A-adjacent pairs of inputs whose images are forbidden."""
    n = f.arity
    M = np.zeros((A, A), dtype=np.int64)
    M[rel_a[:, 0], rel_a[:, 1]] = 1
    allowed = np.zeros((B, B), dtype=bool)
    if len(rel_b):
        allowed[rel_b[:, 0], rel_b[:, 1]] = True
    out = f.outputs
    present = [out == b for b in range(B)]
    for b2 in range(B):
        if not present[b2].any():
            continue
        y = None
        for b1 in range(B):
            if allowed[b1, b2] or not present[b1].any():
                continue
            if y is None:
                t = present[b2].astype(np.int64).reshape((A,) * n)
                for ax in range(n):
                    t = np.moveaxis(np.tensordot(M, t, axes=([1], [ax])), 0, ax)
                y = t.ravel()
            hit = np.flatnonzero(present[b1] & (y > 0))
            if hit.size:
                u = _digits(hit[0], A, n)
                nbrs = [np.flatnonzero(M[u[i]]) for i in range(n)]
                grid = np.stack(np.meshgrid(*nbrs, indexing="ij"), axis=-1).reshape(-1, n)
                vidx = grid @ radix_weights(A, n)
                v = grid[np.flatnonzero(present[b2][vidx])[0]]
                return [(int(u[i]), int(v[i])) for i in range(n)]
    return None


def _digits(index, base, n):
    return (int(index) // radix_weights(base, n)) % base


def is_polymorphism(f: FunctionTable, t: PromiseTemplate) -> PolymorphismCheck:
    """Check that every matrix with columns in R^A is mapped row-wise into R^B."""
    A, B = t.a.domain_size, t.b.domain_size
    if f.in_domain != A or f.out_domain != B:
        raise DomainMismatch(f"table {f.name} is {f.in_domain}->{f.out_domain}, template is {A}->{B}")
    n = f.arity
    for (name, k), rel_a, rel_b in zip(t.a.signature, t.a.relations, t.b.relations):
        if len(rel_a) == 0:
            continue
        enum_cost = float(len(rel_a)) ** n
        cols = None
        if k == 2:
            kron_cost = float(B * B - len(rel_b)) * n * float(A) ** (n + 1)
            if kron_cost < enum_cost:
                cols = _violation_by_kronecker(f, rel_a, rel_b, A, B)
                if cols is None:
                    continue
                return PolymorphismCheck(False, name, cols)
        allowed = np.zeros(B ** k, dtype=np.bool_)
        if len(rel_b):
            allowed[rel_b @ radix_weights(B, k)] = True
        choice = np.zeros(n, dtype=np.int64)
        if K.find_violation(np.ascontiguousarray(rel_a), n, A, f.outputs, allowed, B, choice):
            cols = [tuple(int(x) for x in rel_a[j]) for j in choice]
            return PolymorphismCheck(False, name, cols)
    return PolymorphismCheck(True)


def violation_rows(f: FunctionTable, columns) -> list[tuple]:
    """Row-wise images of a column list, for reporting."""
    k = len(columns[0])
    return [tuple(f(*[col[p] for col in columns]) for p in range(k))] if columns else []


class PolymorphismStream:
    """All n-ary polymorphisms in lexicographic table order; ``truncated`` flags a cap stop."""

    def __init__(self, t: PromiseTemplate, n: int, cap=None):
        self.t = t
        self.n = n
        self._homs = HomStream(power(t.a, n), t.b, cap=cap)

    @property
    def truncated(self):
        return self._homs.truncated

    def __iter__(self) -> Iterator[FunctionTable]:
        A, B = self.t.a.domain_size, self.t.b.domain_size
        for i, h in enumerate(self._homs):
            yield FunctionTable(A, B, self.n, h.mapping, name=f"pol{self.n}_{i}")

    def array(self) -> np.ndarray:
        """All tables as rows of one array (no per-table objects)."""
        blocks = list(self._homs.arrays())
        if not blocks:
            return np.zeros((0, self.t.a.domain_size ** self.n), dtype=np.int64)
        return np.concatenate(blocks)


def enumerate_polymorphisms(t: PromiseTemplate, n: int, cap=None) -> PolymorphismStream:
    return PolymorphismStream(t, n, cap)


def essential_coordinates(f: FunctionTable) -> frozenset:
    """0-based coordinates on which f depends."""
    if f.arity == 0:
        return frozenset()
    t = f.outputs.reshape((f.in_domain,) * f.arity)
    return frozenset(i for i in range(f.arity) if np.any(t != np.take(t, [0], axis=i)))


# fixing sets

def _bad_subsets(f: FunctionTable) -> np.ndarray:
    """Mark coordinate sets (bitmasks) that are not fixing."""
    if f.in_domain != 2 or f.out_domain != 2:
        raise DomainMismatch("fixing sets are defined for Boolean functions")
    n = f.arity
    x = all_tuples(2, n)
    bit = 1 << np.arange(n, dtype=np.int64)
    zeros = ((x == 0) * bit).sum(axis=1)
    ones = ((x == 1) * bit).sum(axis=1)
    bad = np.zeros(1 << n, dtype=bool)
    bad[zeros[f.outputs == 1]] = True
    bad[ones[f.outputs == 0]] = True
    s = np.arange(1 << n)
    for i in range(n):
        lo = s[(s >> i) & 1 == 0]
        bad[lo] |= bad[lo | (1 << i)]
    return bad


def fixing_sets(f: FunctionTable) -> list[frozenset]:
    bad = _bad_subsets(f)
    return [frozenset(i for i in range(f.arity) if (m >> i) & 1) for m in np.flatnonzero(~bad)]


def is_fixing(f: FunctionTable, coords) -> bool:
    m = sum(1 << i for i in set(coords))
    return not _bad_subsets(f)[m]


def min_fixing_set(f: FunctionTable, bound: int | None = None):
    """Smallest fixing set (ties broken lexicographically), or None.

    With ``bound`` the result is None unless a fixing set of size <= bound exists.
    """
    bad = _bad_subsets(f)
    good = np.flatnonzero(~bad)
    if good.size == 0:
        return None
    sizes = np.array([bin(int(m)).count("1") for m in good])
    smallest = sizes.min()
    if bound is not None and smallest > bound:
        return None
    cands = [tuple(i for i in range(f.arity) if (int(m) >> i) & 1) for m in good[sizes == smallest]]
    return frozenset(min(cands))


def trash_colour(f: FunctionTable):
    """Return ``(t, i, alpha)`` with ``f(a) in {t, alpha[a_i]}`` for every input, or None."""
    x = all_tuples(f.in_domain, f.arity)
    for t in range(f.out_domain):
        for i in range(f.arity):
            alpha = []
            for v in range(f.in_domain):
                vals = set(f.outputs[x[:, i] == v].tolist()) - {t}
                if len(vals) > 1:
                    break
                alpha.append(vals.pop() if vals else t)
            else:
                return t, i, tuple(alpha)
    return None


# named constructions

def _verified(f: FunctionTable, t: PromiseTemplate) -> FunctionTable:
    chk = is_polymorphism(f, t)
    if not chk:
        raise AssertionError(f"{f.name} is not a polymorphism of {t.name}: columns {chk.columns}")
    return f


def olsak_k_2k(k: int) -> FunctionTable:
    """6-ary Olšák function from K_k to K_2k."""
    if k < 2:
        raise ValueError("olsak_k_2k needs k >= 2")
    x = all_tuples(k, 6)
    x1, x2, x3 = x[:, 0], x[:, 1], x[:, 2]
    out = np.where((x1 == x2) | (x1 == x3), x1, np.where(x2 == x3, x2, x1 + k))
    return _verified(FunctionTable(k, 2 * k, 6, out, name=f"olsak_{k}_{2 * k}"),
                     template(clique(k), clique(2 * k)))


# K_4 edges, each unordered edge {u < v} listed as (u, v) then (v, u)
K4_EDGES = tuple(e for u in range(4) for v in range(u + 1, 4) for e in ((u, v), (v, u)))


def _k4loop_t():
    x = all_tuples(3, 4)
    same = (x[:, 0] == x[:, 1]) & (x[:, 1] == x[:, 2])
    return FunctionTable(3, 6, 4, np.where(same, x[:, 0], x[:, 3] + 3), name="t")


def k4loop_in_k3_k6() -> tuple[FunctionTable, FunctionTable]:
    """The pair (t, s) witnessing the K_4-loop condition in Pol(K_3, K_6)."""
    t = _k4loop_t()
    x = all_tuples(3, 12).astype(np.int8)
    src = np.array([e[0] for e in K4_EDGES])
    dst = np.array([e[1] for e in K4_EDGES])

    def constant_groups(key):
        # x'_g when all entries x_{ij} with key(ij) = g agree
        xp = np.zeros((len(x), 4), dtype=np.int64)
        ok = np.ones(len(x), dtype=bool)
        for g in range(4):
            cols = np.flatnonzero(key == g)
            block = x[:, cols]
            ok &= np.all(block == block[:, :1], axis=1)
            xp[:, g] = block[:, 0]
        return ok, xp @ radix_weights(3, 4)

    row_ok, row_idx = constant_groups(src)
    col_ok, col_idx = constant_groups(dst)
    out = np.where(row_ok, t.outputs[row_idx], np.where(col_ok, t.outputs[col_idx], x[:, 0]))
    s = FunctionTable(3, 6, 12, out, name="s")
    k36 = template(clique(3), clique(6))
    return _verified(t, k36), _verified(s, k36)


def example_2_16_g(k: int) -> FunctionTable:
    """Quaternary g from H_2 to H_k: the majority value if some value occurs 3 times, else x+2."""
    if k < 4:
        raise ValueError("example_2_16_g needs k >= 4")
    x = all_tuples(2, 4)
    ones = x.sum(axis=1)
    out = np.where(ones >= 3, 1, np.where(ones <= 1, 0, x[:, 0] + 2))
    return _verified(FunctionTable(2, k, 4, out, name="g"), template(nae(2), nae(k)))


def example_2_17_g() -> FunctionTable:
    """Quaternary g from K_3 to K_5 (five-case table)."""
    x = all_tuples(3, 4)
    out = np.empty(len(x), dtype=np.int64)
    for r, (a, b, c, d) in enumerate(x.tolist()):
        vals = [a, b, c, d]
        rest = [b, c, d]
        major = [v for v in range(3) if vals.count(v) >= 3]
        if major:
            out[r] = major[0]
        elif a == 0 and rest.count(0) >= 1:
            out[r] = 0
        elif a == 0 and rest.count(1) >= 2:
            out[r] = 1
        elif a == 0 and rest.count(2) >= 2:
            out[r] = 2
        else:
            out[r] = a + 2
    return _verified(FunctionTable(3, 5, 4, out, name="g"), template(clique(3), clique(5)))


def hamming_threshold(k: int) -> FunctionTable:
    """Boolean f of arity 3k-1 with output 1 iff at least k ones."""
    if k < 1:
        raise ValueError("hamming_threshold needs k >= 1")
    n = 3 * k - 1
    x = all_tuples(2, n)
    return _verified(FunctionTable(2, 2, n, (x.sum(axis=1) >= k).astype(np.int64), name=f"ham{k}"),
                     template(one_in_three(), nae(2)))


def _alternating_sum(n):
    x = all_tuples(2, n)
    signs = np.where(np.arange(n) % 2 == 0, 1, -1)
    return x @ signs


def alternating_threshold(n: int) -> FunctionTable:
    """Boolean f of odd arity n with output 1 iff x1 - x2 + x3 - ... > 0."""
    if n < 1 or n % 2 == 0:
        raise ValueError("alternating_threshold needs odd n")
    out = (_alternating_sum(n) > 0).astype(np.int64)
    return _verified(FunctionTable(2, 2, n, out, name=f"althr{n}"), template(one_in_three(), nae(2)))


def parity(n: int) -> FunctionTable:
    """Boolean sum modulo 2 of odd arity n."""
    if n < 1 or n % 2 == 0:
        raise ValueError("parity needs odd n")
    x = all_tuples(2, n)
    return _verified(FunctionTable(2, 2, n, x.sum(axis=1) % 2, name=f"parity{n}"),
                     template(one_in_three(), odd_parity()))


NAMED = {
    "olsak_k_2k": olsak_k_2k,
    "k4loop_in_k3_k6": k4loop_in_k3_k6,
    "example_2_16_g": example_2_16_g,
    "example_2_17_g": example_2_17_g,
    "hamming_threshold": hamming_threshold,
    "alternating_threshold": alternating_threshold,
    "parity": parity,
}


def named_function(name: str, *params):
    if name not in NAMED:
        raise KeyError(f"unknown named function '{name}'")
    return NAMED[name](*params)


# text format

def serialize_function(f: FunctionTable, per_line: int = 32) -> str:
    out = [f"function {f.name} in {f.in_domain} out {f.out_domain} arity {f.arity}"]
    vals = f.outputs.tolist()
    for i in range(0, len(vals), per_line):
        out.append(" ".join(map(str, vals[i:i + per_line])))
    out.append("end")
    return "\n".join(out) + "\n"


_HEADER = re.compile(r"^function\s+(\S+)\s+in\s+(\d+)\s+out\s+(\d+)\s+arity\s+(\d+)\s*$")


def parse_function(text: str) -> FunctionTable:
    header = None
    vals: list[int] = []
    ended = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ended:
            raise ParseError("content after 'end'", lineno, 1)
        if header is None:
            m = _HEADER.match(line)
            if not m:
                raise ParseError("expected 'function <name> in <n> out <m> arity <k>'", lineno, 1)
            header = (m.group(1), int(m.group(2)), int(m.group(3)), int(m.group(4)))
            continue
        if line == "end":
            ended = True
            continue
        for m in re.finditer(r"\S+", raw.split("#", 1)[0]):
            tok = m.group()
            if not tok.isdigit():
                raise ParseError(f"not an output value: '{tok}'", lineno, m.start() + 1)
            v = int(tok)
            if v >= header[2]:
                raise ParseError(f"output {v} out of range", lineno, m.start() + 1)
            vals.append(v)
    if header is None:
        raise ParseError("missing function header")
    if not ended:
        raise ParseError("missing 'end'")
    name, a, b, n = header
    if len(vals) != a ** n:
        raise ParseError(f"expected {a ** n} outputs, got {len(vals)}")
    return FunctionTable(a, b, n, vals, name=name)


def load_function(path) -> FunctionTable:
    with open(path, encoding="utf-8") as fh:
        return parse_function(fh.read())
