import itertools

import numpy as np
import pytest
from hypothesis import given
import hypothesis.strategies as st

from pcsp.core import all_tuples, builtin, clique, horn, nae, odd_parity, one_in_three, template
from pcsp.errors import DomainMismatch, ParseError
from pcsp.minionlab import (FunctionTable, alternating_threshold, enumerate_polymorphisms, essential_coordinates,
                            example_2_16_g, example_2_17_g, fixing_sets, hamming_threshold, is_fixing,
                            is_polymorphism, k4loop_in_k3_k6, min_fixing_set, minor_of, named_function,
                            olsak_k_2k, parity, parse_function, projection, serialize_function, trash_colour)

from conftest import oracle_is_pol


def table(in_d, out_d, n, fn, name="f"):
    return FunctionTable(in_d, out_d, n, [fn(*x) for x in itertools.product(range(in_d), repeat=n)], name)


def test_or_is_polymorphism_of_1in3_nae():
    f = hamming_threshold(1)
    assert f.arity == 2 and list(f.outputs) == [0, 1, 1, 1]
    assert is_polymorphism(f, template(one_in_three(), nae(2))).ok


def test_identity_is_polymorphism():
    for s in (clique(3), horn(), one_in_three()):
        assert is_polymorphism(projection(s.domain_size, 1, 0), template(s)).ok


def test_xor_violation():
    xor = table(2, 2, 2, lambda x, y: x ^ y)
    chk = is_polymorphism(xor, template(clique(2)))
    assert not chk.ok
    # any reported column pair must be a genuine violation; (0,1),(1,0) is one
    rows = [tuple(col[p] for col in chk.columns) for p in range(2)]
    assert (xor(rows[0]), xor(rows[1])) not in {(0, 1), (1, 0)}
    assert (xor(0, 1), xor(1, 0)) == (1, 1)


def test_domain_mismatch():
    with pytest.raises(DomainMismatch):
        is_polymorphism(projection(2, 2, 0), template(clique(3)))


def test_minor_examples():
    g = table(3, 3, 2, lambda x, y: (x + 2 * y) % 3)
    diag = minor_of(g, (0, 0), 1)
    assert list(diag.outputs) == [0, 0, 0]
    p2 = projection(2, 3, 1)
    assert minor_of(p2, (1, 0, 0), 2) == projection(2, 2, 0)


def test_example_2_16_minor_is_first_projection():
    g = example_2_16_g(4)
    f = minor_of(g, (1, 0, 0, 0), 2)
    assert np.array_equal(f.outputs, projection(2, 2, 0, 4).outputs)


def test_enumeration_examples():
    assert {tuple(f.outputs) for f in enumerate_polymorphisms(template(one_in_three()), 2)} == {
        (0, 0, 1, 1), (0, 1, 0, 1)}
    unary = {tuple(f.outputs) for f in enumerate_polymorphisms(template(clique(3)), 1)}
    assert unary == set(itertools.permutations(range(3)))
    binary = {tuple(f.outputs) for f in enumerate_polymorphisms(template(clique(2)), 2)}
    assert binary == {(0, 0, 1, 1), (0, 1, 0, 1), (1, 1, 0, 0), (1, 0, 1, 0)}


@pytest.mark.parametrize("a,b,n", [("K2", "K3", 2), ("T", "H2", 2), ("H2", "H3", 2), ("K3", "K4", 1)])
def test_enumeration_matches_brute_force(a, b, n):
    A, B = builtin(a), builtin(b)
    got = {tuple(f.outputs) for f in enumerate_polymorphisms(template(A, B), n)}
    size = A.domain_size ** n
    want = {t for t in itertools.product(range(B.domain_size), repeat=size)
            if oracle_is_pol(t, A.domain_size, B.domain_size, n, A, B)}
    assert got == want


def test_enumeration_cap():
    s = enumerate_polymorphisms(template(clique(3), clique(4)), 2, cap=10)
    assert len(list(s)) == 10 and s.truncated
    arr = enumerate_polymorphisms(template(clique(3), clique(4)), 2).array()
    assert arr.shape == (1056, 9)


def test_is_polymorphism_agrees_with_oracle_on_random_tables():
    rng = np.random.default_rng(1)
    for a, b, n in [(clique(3), clique(4), 2), (one_in_three(), nae(2), 3), (horn(), horn(), 2)]:
        for _ in range(40):
            out = rng.integers(0, b.domain_size, a.domain_size ** n)
            f = FunctionTable(a.domain_size, b.domain_size, n, out)
            assert is_polymorphism(f, template(a, b)).ok == oracle_is_pol(
                tuple(out), a.domain_size, b.domain_size, n, a, b)


def test_essential_coordinates():
    assert essential_coordinates(projection(2, 3, 0)) == {0}
    assert essential_coordinates(FunctionTable(3, 3, 2, [1] * 9)) == frozenset()
    assert essential_coordinates(olsak_k_2k(3)) == {0, 1, 2}


def oracle_fixing(f, coords):
    n = f.arity
    for x in itertools.product(range(2), repeat=n):
        for c in (0, 1):
            if all(x[i] == c for i in coords) and f(x) != c:
                return False
    return True


def test_fixing_examples():
    for n in (2, 3, 4):
        and_ = table(2, 2, n, lambda *x: int(all(x)))
        assert not any(is_fixing(and_, {i}) for i in range(n))
        assert min_fixing_set(and_) == frozenset(range(n))
    maj = table(2, 2, 3, lambda *x: int(sum(x) >= 2))
    assert len(min_fixing_set(maj)) == 2
    assert min_fixing_set(projection(2, 4, 0)) == {0}
    assert min_fixing_set(maj, bound=1) is None


@given(st.integers(1, 4), st.data())
def test_fixing_sets_match_oracle_and_intersect(n, data):
    out = data.draw(st.lists(st.integers(0, 1), min_size=2 ** n, max_size=2 ** n))
    f = FunctionTable(2, 2, n, out)
    sets = fixing_sets(f)
    want = [frozenset(c) for r in range(n + 1) for c in itertools.combinations(range(n), r) if oracle_fixing(f, c)]
    assert set(sets) == set(want)
    for s1, s2 in itertools.combinations(sets, 2):
        assert s1 & s2


def minor_slice(t, n, m):
    pols = list(enumerate_polymorphisms(t, n))
    return pols, list(itertools.product(range(m), repeat=n))


@pytest.mark.parametrize("a,b", [("K2", "K3"), ("T", "H2"), ("H2", "H3")])
def test_minors_stay_in_the_minion(a, b):
    t = template(builtin(a), builtin(b))
    pols, maps = minor_slice(t, 2, 3)
    for f in pols:
        for pi in maps:
            g = minor_of(f, pi, 3)
            assert is_polymorphism(g, t).ok
            # essential coordinates of a minor lie in the image of the essential ones
            assert essential_coordinates(g) <= {pi[i] for i in essential_coordinates(f)}


def test_trash_colour_on_binary_k3_k4():
    count = 0
    for f in enumerate_polymorphisms(template(clique(3), clique(4)), 2):
        t, i, alpha = trash_colour(f)
        for x in itertools.product(range(3), repeat=2):
            assert f(x) in (t, alpha[x[i]])
        count += 1
    assert count == 1056


def test_named_functions():
    o = named_function("olsak_k_2k", 3)
    assert (o.in_domain, o.out_domain, o.arity) == (3, 6, 6)
    assert is_polymorphism(o, template(clique(3), clique(6))).ok
    g = example_2_17_g()
    assert is_polymorphism(g, template(clique(3), clique(5))).ok
    t, s = k4loop_in_k3_k6()
    assert (t.arity, s.arity) == (4, 12)
    assert is_polymorphism(alternating_threshold(3), template(one_in_three(), nae(2))).ok
    assert is_polymorphism(parity(3), template(one_in_three(), odd_parity())).ok
    with pytest.raises(KeyError):
        named_function("nope")


def test_olsak_function_not_into_smaller_clique():
    o = olsak_k_2k(3)
    small = FunctionTable(3, 5, 6, np.minimum(o.outputs, 4))
    assert not is_polymorphism(small, template(clique(3), clique(5))).ok


def test_function_text_round_trip():
    f = example_2_16_g(4)
    assert parse_function(serialize_function(f)) == f
    with pytest.raises(ParseError, match="expected 4 outputs"):
        parse_function("function f in 2 out 2 arity 2\n0 1 1\nend\n")
    with pytest.raises(ParseError, match="out of range"):
        parse_function("function f in 2 out 2 arity 1\n0 2\nend\n")


def test_table_rejects_wrong_length():
    with pytest.raises(ValueError):
        FunctionTable(2, 2, 2, [0, 1, 0])


def test_projection_table_layout():
    p = projection(3, 2, 1)
    assert np.array_equal(p.outputs, all_tuples(3, 2)[:, 1])
