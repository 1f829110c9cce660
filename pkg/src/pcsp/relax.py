"""BLP and AIP relaxations as exact linear systems, and the three promise deciders.

Variables are named ``mu[v][a]`` for an element v and value a, and
``mu[v1,..,vk][R][t]`` for a constraint, t being the mixed-radix index of
the tuple in A^k.  BLP emits tuple variables only for tuples of R^A (the
others are pinned to zero and dropped).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

from .core import PromiseTemplate, Structure
from .exact import IPOutcome, LPOutcome, check_farkas, check_obstruction, integer_feasible, nonneg_feasible
from .homsearch import gac

RATIONAL = "rational-nonneg"
INTEGER = "integer"


@dataclass(frozen=True)
class Var:
    scope: tuple          # (v,) for an element variable, (v1..vk) for a constraint variable
    relation: str | None  # None for element variables
    value: int            # a, or the tuple index t

    @property
    def name(self):
        if self.relation is None:
            return f"mu[{self.scope[0]}][{self.value}]"
        return f"mu[{','.join(map(str, self.scope))}][{self.relation}][{self.value}]"


@dataclass
class LinearSystem:
    variables: list
    rows: list            # each a dict {var position: int coefficient}
    rhs: list
    mode: str
    eliminated: list = field(default_factory=list)   # (var, {pos: coef}, const) for back-substitution
    full_variables: list | None = None
    full_rows: list | None = None
    full_rhs: list | None = None

    def matrix(self):
        n = len(self.variables)
        return [[row.get(j, 0) for j in range(n)] for row in self.rows]

    def satisfied_by(self, values) -> bool:
        return all(sum(c * values[j] for j, c in row.items()) == b for row, b in zip(self.rows, self.rhs))

    def __str__(self):
        return serialize_system(self)


def _emit(i: Structure, a: Structure, mode: str) -> LinearSystem:
    if not i.similar(a):
        raise ValueError("instance and template are not similar")
    d = a.domain_size
    variables = [Var((v,), None, x) for v in range(i.domain_size) for x in range(d)]
    pos = {var: k for k, var in enumerate(variables)}
    rows, rhs = [], []
    for v in range(i.domain_size):
        rows.append({pos[Var((v,), None, x)]: 1 for x in range(d)})
        rhs.append(1)
    for (rname, k), rel_i, rel_a in zip(i.signature, i.relations, a.relations):
        tindex = [sum(int(x) * d ** (k - 1 - p) for p, x in enumerate(t)) for t in rel_a.tolist()]
        for scope in map(tuple, rel_i.tolist()):
            tvars = []
            for t in tindex:
                var = Var(scope, rname, t)
                pos[var] = len(variables)
                variables.append(var)
                tvars.append(pos[var])
            for p in range(k):
                for x in range(d):
                    row = {}
                    for tv, t in zip(tvars, rel_a[:, p].tolist()):
                        if t == x:
                            row[tv] = row.get(tv, 0) + 1
                    ev = pos[Var((scope[p],), None, x)]
                    row[ev] = row.get(ev, 0) - 1
                    rows.append({j: c for j, c in row.items() if c})
                    rhs.append(0)
    return LinearSystem(variables, rows, rhs, mode)


def emit_blp(i: Structure, a: Structure) -> LinearSystem:
    """Feasible over the nonnegative rationals iff BLP_A(I) = 1."""
    return _emit(i, a, RATIONAL)


def emit_aip(i: Structure, a: Structure, simplify=False) -> LinearSystem:
    """The affine integer relaxation; ``simplify`` eliminates variables through
    unit-coefficient equations (keeping mu[v][a] for a >= 1), which is
    solution-preserving over the integers."""
    sys = _emit(i, a, INTEGER)
    if simplify:
        sys = _eliminate(sys, keep=lambda var: var.relation is None and var.value >= 1)
    return sys


def _eliminate(sys: LinearSystem, keep) -> LinearSystem:
    rows = [dict(r) for r in sys.rows]
    rhs = list(sys.rhs)
    eliminated = []
    for j, var in enumerate(sys.variables):
        if keep(var):
            continue
        k = next((k for k, r in enumerate(rows) if r.get(j) in (1, -1)), None)
        if k is None:
            continue
        piv = rows.pop(k)
        const = rhs.pop(k)
        c = piv.pop(j)
        # var = (const - sum piv) / c, c = +-1
        expr = {q: -w * c for q, w in piv.items()}
        val = const * c
        eliminated.append((j, expr, val))
        for r, row in enumerate(rows):
            w = row.pop(j, 0)
            if w:
                for q, e in expr.items():
                    row[q] = row.get(q, 0) + w * e
                    if row[q] == 0:
                        del row[q]
                rhs[r] -= w * val
    kept = [j for j, var in enumerate(sys.variables) if j not in {e[0] for e in eliminated}]
    renum = {j: k for k, j in enumerate(kept)}
    out_rows, out_rhs, seen = [], [], set()
    for row, b in zip(rows, rhs):
        if not row:
            if b != 0:
                out_rows.append({})
                out_rhs.append(b)
            continue
        if row[min(row)] < 0:
            row = {j: -c for j, c in row.items()}
            b = -b
        key = (tuple(sorted((renum[j], c) for j, c in row.items())), b)
        if key in seen:
            continue
        seen.add(key)
        out_rows.append({renum[j]: c for j, c in row.items()})
        out_rhs.append(b)
    return LinearSystem([sys.variables[j] for j in kept], out_rows, out_rhs, sys.mode,
                        eliminated=[(j, expr, val) for j, expr, val in eliminated],
                        full_variables=sys.variables, full_rows=sys.rows, full_rhs=sys.rhs)


def _expand(sys: LinearSystem, values):
    """Back-substitute eliminated variables into a full solution."""
    if sys.full_variables is None:
        return list(values)
    kept = [j for j in range(len(sys.full_variables)) if j not in {e[0] for e in sys.eliminated}]
    full = [None] * len(sys.full_variables)
    for j, v in zip(kept, values):
        full[j] = v
    for j, expr, val in reversed(sys.eliminated):
        full[j] = val + sum(c * full[q] for q, c in expr.items())
    return full


@dataclass
class RelaxSolution:
    feasible: bool
    values: dict | None = None          # variable name -> Fraction or int
    certificate: list | None = None     # Farkas vector (LP) or lattice obstruction (IP), per equation
    verified: bool = False

    def __bool__(self):
        return self.feasible

    def to_json(self) -> dict:
        fmt = lambda x: str(Fraction(x))
        out = {"feasible": self.feasible, "verified": self.verified}
        if self.values is not None:
            out["values"] = {k: fmt(v) for k, v in self.values.items()}
        if self.certificate is not None:
            out["certificate"] = [fmt(v) for v in self.certificate]
        return out


def lp_feasible(sys: LinearSystem) -> RelaxSolution:
    if sys.mode != RATIONAL:
        raise ValueError("lp_feasible needs a rational-nonneg system")
    A = sys.matrix()
    res: LPOutcome = nonneg_feasible(A, sys.rhs, ncols=len(sys.variables))
    if res.feasible:
        ok = sys.satisfied_by(res.x) and all(0 <= v <= 1 for v in res.x)
        return RelaxSolution(True, {var.name: v for var, v in zip(sys.variables, res.x)}, None, ok)
    return RelaxSolution(False, None, res.farkas, check_farkas(A, sys.rhs, res.farkas))


def ip_feasible(sys: LinearSystem) -> RelaxSolution:
    if sys.mode != INTEGER:
        raise ValueError("ip_feasible needs an integer system")
    A = sys.matrix()
    res: IPOutcome = integer_feasible(A, sys.rhs, ncols=len(sys.variables))
    if res.feasible:
        full = _expand(sys, res.x)
        variables = sys.full_variables or sys.variables
        ok = sys.satisfied_by(res.x)
        if sys.full_rows is not None:
            ok = ok and all(sum(c * full[j] for j, c in row.items()) == b
                            for row, b in zip(sys.full_rows, sys.full_rhs))
        return RelaxSolution(True, {var.name: v for var, v in zip(variables, full)}, None, ok)
    return RelaxSolution(False, None, res.obstruction, check_obstruction(A, sys.rhs, res.obstruction))


def serialize_system(sys: LinearSystem) -> str:
    lines = [f"# mode {sys.mode}"]
    for row, b in zip(sys.rows, sys.rhs):
        terms = " + ".join(f"{c}*{sys.variables[j].name}" for j, c in sorted(row.items())) or "0"
        lines.append(f"{terms} = {b}")
    return "\n".join(lines) + "\n"


def solution_json(sol: RelaxSolution) -> str:
    return json.dumps(sol.to_json(), indent=2, sort_keys=True)


# promise deciders

_CHARACTERIZATION_CACHE: dict = {}


def characterization(t: PromiseTemplate, method: str, max_arity=5) -> dict:
    """Whether "yes" answers of ``method`` transfer to B for this template.

    gac: exact (power structure test).  blp/aip: symmetric / alternating
    conditions checked at arities up to ``max_arity``; all SAT is evidence,
    one UNSAT proves the relaxation does not solve the template.
    """
    key = (t.a.digest(), t.b.digest(), method, max_arity)
    if key in _CHARACTERIZATION_CACHE:
        return _CHARACTERIZATION_CACHE[key]
    from .conditions import alternating, symmetric
    from .freestruct import width1_check
    from .indicator import check_condition_in_pol
    if method == "gac":
        ok = width1_check(t).holds
        info = {"status": "proved" if ok else "refuted", "test": "power structure maps to B"}
    else:
        arities = range(2, max_arity + 1) if method == "blp" else range(1, max_arity + 1, 2)
        gen = symmetric if method == "blp" else alternating
        results = {}
        for n in arities:
            try:
                results[n] = check_condition_in_pol(gen(n), t, node_budget=200_000).status
            except Exception as exc:   # capacity limits on big arities
                results[n] = f"unknown ({type(exc).__name__})"
        if any(v == "unsat" for v in results.values()):
            status = "refuted"
        elif all(v == "sat" for v in results.values()):
            status = "supported"
        else:
            status = "unknown"
        info = {"status": status, "test": f"{gen.__name__} polymorphisms", "arities": results}
    _CHARACTERIZATION_CACHE[key] = info
    return info


@dataclass
class PromiseAnswer:
    answer: str                 # "yes" or "no"
    method: str
    certificate: dict
    characterization: dict | None = None

    @property
    def sound_for_b(self) -> bool:
        """A "no" is always sound; a "yes" transfers to B only once the template passes the check."""
        if self.answer == "no":
            return True
        return bool(self.characterization) and self.characterization["status"] == "proved"


def solve_promise(t: PromiseTemplate, i: Structure, method: str, annotate=True) -> PromiseAnswer:
    if method == "gac":
        dom = gac(i, t.a)
        if dom is None:
            ans = PromiseAnswer("no", method, {"kind": "gac-wipeout"})
        else:
            ans = PromiseAnswer("yes", method, {"kind": "gac-domains",
                                                "domains": [sorted(s) for s in dom.sets]})
    elif method == "blp":
        sol = lp_feasible(emit_blp(i, t.a))
        ans = PromiseAnswer("yes" if sol.feasible else "no", method, sol.to_json())
    elif method == "aip":
        sol = ip_feasible(emit_aip(i, t.a))
        ans = PromiseAnswer("yes" if sol.feasible else "no", method, sol.to_json())
    else:
        raise ValueError(f"unknown method '{method}'")
    if annotate and ans.answer == "yes":
        ans.characterization = characterization(t, method)
    return ans
