"""Finite relational structures and the constructions built on them.

Elements are the integers ``0..n-1``.  Relations are stored as integer
arrays of shape ``(m, arity)`` whose rows are sorted lexicographically and
deduplicated, so tuple indices are reproducible.  Powers encode a tuple
``(a_1, ..., a_n)`` by its mixed-radix index with ``a_1`` most significant.
"""

from __future__ import annotations

import contextlib
import hashlib
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import CapacityError, ParseError, SignatureMismatch


@dataclass
class Limits:
    max_elements: int = 2_000_000
    max_tuples: int = 10_000_000


LIMITS = Limits()


@contextlib.contextmanager
def size_cap(max_elements=None, max_tuples=None):
    """Temporarily override the global size cap."""
    old = (LIMITS.max_elements, LIMITS.max_tuples)
    if max_elements is not None:
        LIMITS.max_elements = int(max_elements)
    if max_tuples is not None:
        LIMITS.max_tuples = int(max_tuples)
    try:
        yield LIMITS
    finally:
        LIMITS.max_elements, LIMITS.max_tuples = old


def check_elements(what, count):
    if count > LIMITS.max_elements:
        raise CapacityError(what, count, LIMITS.max_elements)


def check_tuples(what, count):
    if count > LIMITS.max_tuples:
        raise CapacityError(what, count, LIMITS.max_tuples)


_IDENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_.\-]*$")


class Signature(tuple):
    """Ordered tuple of ``(name, arity)`` pairs."""

    def __new__(cls, items: Iterable[tuple[str, int]]):
        items = tuple((str(n), int(a)) for n, a in items)
        names = [n for n, _ in items]
        if len(set(names)) != len(names):
            raise ValueError(f"relation names must be unique: {names}")
        for n, a in items:
            if a < 1:
                raise ValueError(f"relation {n} must have positive arity")
        return super().__new__(cls, items)

    @property
    def names(self):
        return tuple(n for n, _ in self)

    @property
    def arities(self):
        return tuple(a for _, a in self)

    def similar(self, other: "Signature") -> bool:
        return self.arities == other.arities


def canonical_tuples(rows, arity: int) -> np.ndarray:
    """Sort rows lexicographically and drop duplicates."""
    arr = np.asarray(rows, dtype=np.int64)
    if arr.size == 0:
        return np.zeros((0, arity), dtype=np.int64)
    arr = arr.reshape(-1, arity)
    order = np.lexsort(arr.T[::-1])
    arr = arr[order]
    if len(arr) > 1:
        keep = np.ones(len(arr), dtype=bool)
        keep[1:] = np.any(arr[1:] != arr[:-1], axis=1)
        arr = arr[keep]
    return np.ascontiguousarray(arr)


class Structure:
    """Immutable finite relational structure."""

    __slots__ = ("name", "domain_size", "signature", "relations", "_digest")

    def __init__(self, name: str, domain_size: int, signature, relations: Sequence, *, canonical=False):
        self.name = str(name)
        self.domain_size = int(domain_size)
        self.signature = signature if isinstance(signature, Signature) else Signature(signature)
        if len(relations) != len(self.signature):
            raise ValueError("one tuple list per relation is required")
        rels = []
        for (rname, arity), rows in zip(self.signature, relations):
            arr = np.asarray(rows, dtype=np.int64).reshape(-1, arity) if not canonical else rows
            if not canonical:
                if arr.size and (arr.min() < 0 or arr.max() >= self.domain_size):
                    bad = int(arr.max()) if arr.max() >= self.domain_size else int(arr.min())
                    raise ValueError(f"element {bad} out of range")
                arr = canonical_tuples(arr, arity)
            arr.flags.writeable = False
            rels.append(arr)
        self.relations = tuple(rels)
        self._digest = None

    def relation(self, name: str) -> np.ndarray:
        return self.relations[self.signature.names.index(name)]

    @property
    def tuple_count(self) -> int:
        return sum(len(r) for r in self.relations)

    def similar(self, other: "Structure") -> bool:
        return self.signature.similar(other.signature)

    def tuple_sets(self) -> list[set]:
        return [set(map(tuple, r.tolist())) for r in self.relations]

    def digest(self) -> str:
        if self._digest is None:
            h = hashlib.sha256()
            h.update(repr((self.domain_size, tuple(self.signature))).encode())
            for r in self.relations:
                h.update(r.tobytes())
            self._digest = h.hexdigest()
        return self._digest

    def __eq__(self, other):
        if not isinstance(other, Structure):
            return NotImplemented
        return (self.domain_size == other.domain_size
                and self.signature.arities == other.signature.arities
                and all(np.array_equal(a, b) for a, b in zip(self.relations, other.relations)))

    def __hash__(self):
        return hash(self.digest())

    def renamed(self, name: str) -> "Structure":
        return Structure(name, self.domain_size, self.signature, self.relations, canonical=True)

    def __repr__(self):
        rels = ", ".join(f"{n}/{a}:{len(r)}" for (n, a), r in zip(self.signature, self.relations))
        return f"Structure({self.name!r}, n={self.domain_size}, {rels})"


@dataclass(frozen=True)
class PromiseTemplate:
    a: Structure
    b: Structure

    def __post_init__(self):
        if not self.a.similar(self.b):
            raise SignatureMismatch(f"{self.a.name} and {self.b.name} are not similar")

    @property
    def name(self):
        return f"({self.a.name},{self.b.name})"

    def sanity(self):
        """Return a homomorphism A -> B, or None when the pair is not a template."""
        from .homsearch import find_hom
        return find_hom(self.a, self.b)


def template(a: Structure, b: Structure | None = None) -> PromiseTemplate:
    return PromiseTemplate(a, a if b is None else b)


# mixed-radix helpers

def radix_weights(base: int, n: int) -> np.ndarray:
    return base ** np.arange(n - 1, -1, -1, dtype=np.int64)


def encode(tuples, base: int) -> np.ndarray:
    """Mixed-radix index of each row (first entry most significant)."""
    arr = np.asarray(tuples, dtype=np.int64)
    return arr @ radix_weights(base, arr.shape[-1])


def decode(index, base: int, n: int) -> np.ndarray:
    """Inverse of :func:`encode`; returns an array with a trailing axis of length n."""
    idx = np.asarray(index, dtype=np.int64)
    return (idx[..., None] // radix_weights(base, n)) % base


def all_tuples(base: int, n: int) -> np.ndarray:
    """All of ``range(base)**n`` in index order, shape ``(base**n, n)``."""
    return decode(np.arange(base ** n, dtype=np.int64), base, n)


# constructions

def power(s: Structure, n: int) -> Structure:
    if n < 1:
        raise ValueError("power exponent must be at least 1")
    size = s.domain_size ** n
    check_elements(f"power({s.name},{n}) domain", size)
    check_tuples(f"power({s.name},{n}) tuples", sum(len(r) ** n for r in s.relations))
    rels = []
    for (_, k), rel in zip(s.signature, s.relations):
        acc = rel
        for _ in range(n - 1):
            acc = (acc[:, None, :] * s.domain_size + rel[None, :, :]).reshape(-1, k)
        rels.append(canonical_tuples(acc, k))
    return Structure(f"{s.name}^{n}", size, s.signature, rels, canonical=True)


class Partition:
    """Equivalence relation stored as element -> representative (the class minimum)."""

    __slots__ = ("rep",)

    def __init__(self, rep):
        rep = np.asarray(rep, dtype=np.int64)
        if rep.ndim != 1 or (rep.size and (rep.min() < 0 or rep.max() >= len(rep))):
            raise ValueError("malformed partition")
        if not np.array_equal(rep[rep], rep):
            raise ValueError("malformed partition: representative of a representative must be itself")
        rep.flags.writeable = False
        self.rep = rep

    @classmethod
    def identity(cls, n: int) -> "Partition":
        return cls(np.arange(n, dtype=np.int64))

    @classmethod
    def from_pairs(cls, n: int, left, right) -> "Partition":
        """Finest partition of ``range(n)`` identifying ``left[i]`` with ``right[i]``."""
        left = np.asarray(left, dtype=np.int64).ravel()
        right = np.asarray(right, dtype=np.int64).ravel()
        graph = coo_matrix((np.ones(len(left), dtype=np.int8), (left, right)), shape=(n, n))
        _, labels = connected_components(graph, directed=True, connection="weak")
        return cls._from_labels(labels)

    @classmethod
    def _from_labels(cls, labels) -> "Partition":
        labels = np.asarray(labels, dtype=np.int64)
        n = len(labels)
        mins = np.full(labels.max() + 1 if n else 0, n, dtype=np.int64)
        np.minimum.at(mins, labels, np.arange(n, dtype=np.int64))
        return cls(mins[labels])

    def join(self, other: "Partition") -> "Partition":
        n = len(self.rep)
        idx = np.arange(n)
        return Partition.from_pairs(n, np.concatenate([idx, idx]), np.concatenate([self.rep, other.rep]))

    def classes(self) -> list[list[int]]:
        out = {}
        for i, r in enumerate(self.rep.tolist()):
            out.setdefault(r, []).append(i)
        return [out[r] for r in sorted(out)]

    @property
    def class_count(self) -> int:
        return int(np.count_nonzero(self.rep == np.arange(len(self.rep))))

    def __len__(self):
        return len(self.rep)


def quotient(s: Structure, p: Partition) -> tuple[Structure, np.ndarray]:
    """Identify elements per ``p``; returns the quotient and the old -> new index map."""
    if len(p) != s.domain_size:
        raise ValueError("partition size does not match the structure")
    reps = np.flatnonzero(p.rep == np.arange(s.domain_size))
    renumber = np.full(s.domain_size, -1, dtype=np.int64)
    renumber[reps] = np.arange(len(reps))
    index_map = renumber[p.rep]
    rels = [canonical_tuples(index_map[r], k) for (_, k), r in zip(s.signature, s.relations)]
    index_map.flags.writeable = False
    return Structure(f"{s.name}/~", len(reps), s.signature, rels, canonical=True), index_map


def disjoint_union(structures: Sequence[Structure], name=None) -> tuple[Structure, tuple[int, ...]]:
    if not structures:
        raise ValueError("disjoint_union needs at least one structure")
    sig = structures[0].signature
    for s in structures[1:]:
        if not s.signature.similar(sig):
            raise SignatureMismatch(f"{s.name} is not similar to {structures[0].name}")
    offsets = []
    total = 0
    for s in structures:
        offsets.append(total)
        total += s.domain_size
    check_elements("disjoint union domain", total)
    rels = []
    for j, (_, k) in enumerate(sig):
        parts = [s.relations[j] + off for s, off in zip(structures, offsets)]
        rels.append(canonical_tuples(np.concatenate(parts) if parts else [], k))
    name = name or "+".join(s.name for s in structures)
    return Structure(name, total, sig, rels, canonical=True), tuple(offsets)


def induced_substructure(s: Structure, elements) -> tuple[Structure, np.ndarray]:
    """Substructure on ``elements`` (renumbered in ascending order) and the kept-element list."""
    keep = np.unique(np.asarray(elements, dtype=np.int64))
    renumber = np.full(s.domain_size, -1, dtype=np.int64)
    renumber[keep] = np.arange(len(keep))
    rels = []
    for (_, k), r in zip(s.signature, s.relations):
        mapped = renumber[r]
        rels.append(canonical_tuples(mapped[np.all(mapped >= 0, axis=1)], k))
    return Structure(f"{s.name}|sub", len(keep), s.signature, rels, canonical=True), keep


# text format

def parse_structure(text: str) -> Structure:
    name = None
    domain = None
    sig: list[tuple[str, int]] = []
    rels: list[list[tuple[int, ...]]] = []
    ended = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        if ended:
            raise ParseError("content after 'end'", lineno, 1)
        tokens = [(m.group(), m.start() + 1) for m in re.finditer(r"\S+", line)]
        head = tokens[0][0]
        if head == "structure":
            if name is not None:
                raise ParseError("duplicate 'structure' header", lineno, tokens[0][1])
            if len(tokens) != 2 or not _IDENT.match(tokens[1][0]):
                raise ParseError("expected 'structure <name>'", lineno, tokens[0][1])
            name = tokens[1][0]
        elif head == "domain":
            if name is None:
                raise ParseError("'domain' before 'structure'", lineno, 1)
            if domain is not None:
                raise ParseError("duplicate 'domain' line", lineno, 1)
            if len(tokens) != 2 or not tokens[1][0].isdigit():
                raise ParseError("expected 'domain <n>'", lineno, tokens[0][1])
            domain = int(tokens[1][0])
        elif head == "relation":
            if domain is None:
                raise ParseError("'relation' before 'domain'", lineno, 1)
            if len(tokens) != 3 or not _IDENT.match(tokens[1][0]) or not tokens[2][0].isdigit():
                raise ParseError("expected 'relation <name> <arity>'", lineno, tokens[0][1])
            rname, arity = tokens[1][0], int(tokens[2][0])
            if arity < 1:
                raise ParseError("relation arity must be positive", lineno, tokens[2][1])
            if rname in [n for n, _ in sig]:
                raise ParseError(f"duplicate relation '{rname}'", lineno, tokens[1][1])
            sig.append((rname, arity))
            rels.append([])
        elif head == "end":
            if domain is None:
                raise ParseError("'end' before 'domain'", lineno, 1)
            ended = True
        else:
            if not sig:
                raise ParseError(f"unexpected token '{head}'", lineno, tokens[0][1])
            arity = sig[-1][1]
            if len(tokens) != arity:
                raise ParseError(f"arity mismatch: expected {arity} entries, got {len(tokens)}",
                                 lineno, tokens[0][1])
            row = []
            for tok, col in tokens:
                if not tok.lstrip("-").isdigit():
                    raise ParseError(f"not an element: '{tok}'", lineno, col)
                v = int(tok)
                if v < 0 or v >= domain:
                    raise ParseError(f"element {v} out of range", lineno, col)
                row.append(v)
            rels[-1].append(tuple(row))
    if name is None:
        raise ParseError("missing 'structure' header")
    if domain is None:
        raise ParseError("missing 'domain' line")
    if not ended:
        raise ParseError("missing 'end'")
    return Structure(name, domain, sig, rels)


def serialize_structure(s: Structure, labels: Sequence[str] | None = None) -> str:
    out = [f"structure {s.name}", f"domain {s.domain_size}"]
    if labels is not None:
        out += [f"# {i}: {lab}" for i, lab in enumerate(labels)]
    for (rname, arity), rel in zip(s.signature, s.relations):
        out.append(f"relation {rname} {arity}")
        out += [" ".join(map(str, row)) for row in rel.tolist()]
    out.append("end")
    return "\n".join(out) + "\n"


def load_structure(path) -> Structure:
    with open(path, encoding="utf-8") as fh:
        return parse_structure(fh.read())


def save_structure(s: Structure, path, labels=None):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_structure(s, labels))


# built-in structures

def clique(k: int) -> Structure:
    if k < 1:
        raise ValueError("clique needs k >= 1")
    edges = [(i, j) for i in range(k) for j in range(k) if i != j]
    return Structure(f"K{k}", k, [("E", 2)], [edges])


def cycle(n: int) -> Structure:
    if n < 3:
        raise ValueError("cycle needs n >= 3")
    edges = [(i, (i + 1) % n) for i in range(n)] + [((i + 1) % n, i) for i in range(n)]
    return Structure(f"C{n}", n, [("E", 2)], [edges])


def nae(k: int) -> Structure:
    """Ternary not-all-equal relation on k colours (hypergraph k-colouring)."""
    if k < 2:
        raise ValueError("nae needs k >= 2")
    triples = [t for t in np.ndindex(k, k, k) if not (t[0] == t[1] == t[2])]
    return Structure(f"H{k}", k, [("R", 3)], [triples])


def one_in_three() -> Structure:
    return Structure("T", 2, [("R", 3)], [[(1, 0, 0), (0, 1, 0), (0, 0, 1)]])


def odd_parity() -> Structure:
    """Boolean ternary structure ``x + y + z = 1 (mod 2)``."""
    triples = [t for t in np.ndindex(2, 2, 2) if sum(t) % 2 == 1]
    return Structure("L2", 2, [("R", 3)], [triples])


def horn() -> Structure:
    """Boolean structure with x&y->z, x&y->~z, {0}, {1}."""
    imp = [t for t in np.ndindex(2, 2, 2) if not (t[0] and t[1]) or t[2]]
    nimp = [t for t in np.ndindex(2, 2, 2) if not (t[0] and t[1]) or not t[2]]
    return Structure("Horn", 2, [("IMP", 3), ("NIMP", 3), ("ZERO", 1), ("ONE", 1)],
                     [imp, nimp, [(0,)], [(1,)]])


def graph(n: int, edges, name="G", symmetric=True) -> Structure:
    edges = list(map(tuple, edges))
    if symmetric:
        edges += [(b, a) for a, b in edges]
    return Structure(name, n, [("E", 2)], [edges])


def full_structure(signature, name="One") -> Structure:
    """One-element structure in which every relation holds."""
    sig = Signature(signature)
    return Structure(name, 1, sig, [[(0,) * k] for _, k in sig])


BUILTINS = {
    "T": one_in_three,
    "Horn": horn,
    "L2": odd_parity,
}


def builtin(name: str) -> Structure:
    """Structure by short name: ``K3``, ``C5``, ``H2``, ``T``, ``Horn``, ``L2``."""
    if name in BUILTINS:
        return BUILTINS[name]()
    m = re.fullmatch(r"([KCH])(\d+)", name)
    if not m:
        raise KeyError(f"unknown built-in structure '{name}'")
    kind, k = m.group(1), int(m.group(2))
    return {"K": clique, "C": cycle, "H": nae}[kind](k)
