import itertools

import hypothesis.strategies as st
import numpy as np
from hypothesis import HealthCheck, settings

from pcsp.core import Structure

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


# independent oracles: plain Python over tuples, no package internals

def all_maps(n, d):
    return itertools.product(range(d), repeat=n)


def oracle_homs(inst: Structure, tgt: Structure):
    rels_t = [set(map(tuple, r.tolist())) for r in tgt.relations]
    rels_i = [list(map(tuple, r.tolist())) for r in inst.relations]
    out = []
    for h in all_maps(inst.domain_size, tgt.domain_size):
        if all(tuple(h[x] for x in row) in rels_t[j] for j, rel in enumerate(rels_i) for row in rel):
            out.append(h)
    return out


def oracle_is_pol(table, in_d, out_d, arity, a: Structure, b: Structure):
    """f preserves every relation: all column choices from R^A map into R^B."""
    rb = [set(map(tuple, r.tolist())) for r in b.relations]
    for j, rel in enumerate(a.relations):
        rows = list(map(tuple, rel.tolist()))
        k = a.signature[j][1]
        for cols in itertools.product(rows, repeat=arity):
            img = tuple(table[sum(cols[i][p] * in_d ** (arity - 1 - i) for i in range(arity))] for p in range(k))
            if img not in rb[j]:
                return False
    return True


@st.composite
def structures(draw, sig=(("R", 2),), min_size=1, max_size=4, max_tuples=6, name="S"):
    n = draw(st.integers(min_size, max_size))
    rels = []
    for _, k in sig:
        rows = draw(st.lists(st.tuples(*[st.integers(0, n - 1)] * k), max_size=max_tuples))
        rels.append(rows)
    return Structure(name, n, sig, rels)


def edges_of(s: Structure):
    return set(map(tuple, s.relations[0].tolist()))


def as_array(x):
    return np.asarray(x, dtype=np.int64)
