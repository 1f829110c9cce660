import itertools

import pytest
from hypothesis import given
import hypothesis.strategies as st

from pcsp.core import Structure, clique, cycle, horn, nae, one_in_three
from pcsp.errors import BudgetExceeded
from pcsp.homsearch import (count_homs, enumerate_homs, find_hom, gac, kl_consistency, search_hom, verify_hom)

from conftest import oracle_homs, structures


def vvv():
    return Structure("vvv", 1, one_in_three().signature, [[(0, 0, 0)]])


def test_gac_wipes_out_on_repeated_variable():
    assert gac(vvv(), one_in_three()) is None


def test_gac_incomplete_on_odd_cycle():
    dom = gac(cycle(5), clique(2))
    assert dom is not None and all(s == {0, 1} for s in dom.sets)
    assert find_hom(cycle(5), clique(2)) is None


@pytest.mark.parametrize("s", [clique(3), cycle(5), nae(2)])
def test_gac_identity_keeps_full_domains(s):
    dom = gac(s, s)
    assert all(v == set(range(s.domain_size)) for v in dom.sets)


def test_gac_on_horn_respects_constants():
    h = horn()
    dom = gac(h, h)
    assert dom.sets == ({0}, {1})


def test_find_hom_examples():
    assert tuple(find_hom(clique(3), clique(3))) == (0, 1, 2)
    assert find_hom(cycle(5), clique(2)) is None
    h = find_hom(cycle(5), clique(3))
    assert h is not None and verify_hom(cycle(5), clique(3), h.mapping)


def test_enumerate_examples():
    assert count_homs(clique(2), clique(2)) == 2
    single = Structure("pt", 1, clique(3).signature, [[]])
    assert count_homs(single, clique(3)) == 3
    assert list(enumerate_homs(clique(3), clique(2))) == []


def test_enumerate_cap_flags_truncation():
    s = enumerate_homs(cycle(6), clique(3), cap=5)
    got = list(s)
    assert len(got) == 5 and s.truncated
    s = enumerate_homs(cycle(6), clique(3))
    assert len(list(s)) == 66 and not s.truncated


def test_enumeration_is_lexicographic_and_complete():
    got = [h.mapping for h in enumerate_homs(cycle(4), clique(3))]
    assert got == sorted(oracle_homs(cycle(4), clique(3)))


def test_budget():
    out = search_hom(cycle(7), clique(2), node_budget=0)
    assert out.status in ("budget", "unsat")
    with pytest.raises(BudgetExceeded):
        find_hom(clique(5), clique(4), node_budget=1)


def test_kl_consistency_examples():
    # pairs of a triangle-free partial colouring always extend to 3 elements, so (2,3) keeps a family;
    # (3,4) sees a whole K4 and empties
    assert kl_consistency(clique(4), clique(3), 2, 3) is not None
    assert kl_consistency(clique(4), clique(3), 3, 4) is None
    assert kl_consistency(cycle(5), clique(2), 1, 2) is not None
    for k, l in [(1, 1), (1, 2), (2, 2), (2, 3), (3, 3)]:
        assert kl_consistency(clique(3), clique(3), k, l) is not None


SMALL_TARGETS = [clique(2), clique(3), cycle(3),
                 Structure("D", 3, [("R", 2)], [[(0, 1), (1, 2), (2, 2)]]),
                 Structure("P", 2, [("R", 2)], [[(0, 1)]])]


@given(structures(max_size=6, max_tuples=7), st.sampled_from(SMALL_TARGETS))
def test_find_hom_matches_brute_force(inst, tgt):
    want = oracle_homs(inst, tgt)
    got = find_hom(inst, tgt)
    assert (got is not None) == bool(want)
    if got is not None:
        assert verify_hom(inst, tgt, got.mapping) and tuple(got) in set(want)


@given(structures(max_size=5, max_tuples=6), st.sampled_from(SMALL_TARGETS))
def test_enumeration_matches_brute_force(inst, tgt):
    assert [h.mapping for h in enumerate_homs(inst, tgt)] == sorted(oracle_homs(inst, tgt))


@given(structures(sig=(("R", 3),), max_size=6, max_tuples=5),
       st.sampled_from([one_in_three(), nae(2), nae(3)]), st.sampled_from(["static", "dom", "dom/wdeg"]))
def test_ternary_search_all_orders(inst, tgt, order):
    out = search_hom(inst, tgt, order=order)
    assert (out.status == "sat") == bool(oracle_homs(inst, tgt))


@given(structures(max_size=6, max_tuples=8), st.sampled_from(SMALL_TARGETS), st.integers(0, 1000))
def test_gac_order_independent_and_sound(inst, tgt, seed):
    base = gac(inst, tgt)
    shuffled = gac(inst, tgt, shuffle_seed=seed)
    assert (base is None) == (shuffled is None)
    if base is not None:
        assert base.sets == shuffled.sets
        # domains only shrink and keep every value used by some homomorphism
        for h in oracle_homs(inst, tgt):
            assert all(h[v] in base.sets[v] for v in range(inst.domain_size))
    else:
        assert not oracle_homs(inst, tgt)


@given(structures(max_size=4, max_tuples=5), st.sampled_from(SMALL_TARGETS[:3]))
def test_width_hierarchy_sanity(inst, tgt):
    if find_hom(inst, tgt) is not None:
        assert gac(inst, tgt) is not None
        for k, l in [(1, 1), (1, 2), (2, 2), (2, 3)]:
            assert kl_consistency(inst, tgt, k, l) is not None


def test_parallel_search_agrees():
    for inst, tgt in [(cycle(7), clique(3)), (cycle(7), clique(2)), (clique(4), clique(3))]:
        a = search_hom(inst, tgt)
        b = search_hom(inst, tgt, jobs=2, deterministic=False)
        assert a.status == b.status
        if b.mapping is not None:
            assert verify_hom(inst, tgt, b.mapping)


def oracle_kl(inst, tgt, k, l):
    """Naive fixpoint over partial maps stored as frozensets of (element, value) pairs."""
    n, d = inst.domain_size, tgt.domain_size
    rels_t = [set(map(tuple, r.tolist())) for r in tgt.relations]
    rels_i = [list(map(tuple, r.tolist())) for r in inst.relations]

    def is_partial_hom(f):
        m = dict(f)
        return all(tuple(m[v] for v in t) in rt for ri, rt in zip(rels_i, rels_t) for t in ri
                   if all(v in m for v in t))

    fam = {frozenset(zip(X, vals)) for s in range(min(l, n) + 1) for X in itertools.combinations(range(n), s)
           for vals in itertools.product(range(d), repeat=s)}
    fam = {f for f in fam if is_partial_hom(f)}
    while True:
        keep = set()
        for f in fam:
            if any(frozenset(g) not in fam for r in range(len(f)) for g in itertools.combinations(f, r)):
                continue
            dom = {v for v, _ in f}
            if len(f) <= k and any(not any(f <= g and {v for v, _ in g} == set(Y) for g in fam)
                                   for s in range(len(f), min(l, n) + 1)
                                   for Y in itertools.combinations(range(n), s) if dom <= set(Y)):
                continue
            keep.add(f)
        if keep == fam:
            return bool(fam)
        fam = keep


def test_kl_examples_match_oracle():
    assert oracle_kl(clique(4), clique(3), 2, 3)
    assert not oracle_kl(clique(4), clique(3), 3, 4)


@given(structures(max_size=4, max_tuples=5), st.sampled_from(SMALL_TARGETS[:3] + SMALL_TARGETS[4:]),
       st.sampled_from([(1, 1), (1, 2), (2, 2), (1, 3), (2, 3)]))
def test_kl_consistency_matches_oracle(inst, tgt, kl):
    assert (kl_consistency(inst, tgt, *kl) is not None) == oracle_kl(inst, tgt, *kl)
