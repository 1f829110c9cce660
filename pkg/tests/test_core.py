import numpy as np
import pytest
from hypothesis import given
import hypothesis.strategies as st

from pcsp.core import (Partition, Structure, all_tuples, builtin, clique, cycle, decode, disjoint_union, encode,
                       horn, nae, one_in_three, parse_structure, power, quotient, serialize_structure, size_cap,
                       template)
from pcsp.errors import CapacityError, ParseError, SignatureMismatch

from conftest import edges_of, structures

K3_TEXT = """structure K3
domain 3
relation ne 2
0 1
0 2
1 0
1 2
2 0
2 1
end
"""


def test_power_of_one_is_identical():
    assert power(clique(3), 1) == clique(3)


def test_power_k2_squared():
    p = power(clique(2), 2)
    assert p.domain_size == 4
    # (0,0)=0 (0,1)=1 (1,0)=2 (1,1)=3
    assert edges_of(p) == {(0, 3), (3, 0), (1, 2), (2, 1)}


def test_power_k3_squared_degrees():
    p = power(clique(3), 2)
    assert p.domain_size == 9
    assert len(p.relations[0]) == 36
    assert np.all(np.bincount(p.relations[0][:, 0]) == 4)


def test_power_by_definition():
    s = one_in_three()
    p = power(s, 2)
    rows = set(map(tuple, s.relations[0].tolist()))
    want = {tuple(a * 2 + b for a, b in zip(r1, r2)) for r1 in rows for r2 in rows}
    assert set(map(tuple, p.relations[0].tolist())) == want


@given(structures(sig=(("R", 2), ("U", 1)), max_size=3), st.integers(1, 3))
def test_power_counts(s, n):
    p = power(s, n)
    assert p.domain_size == s.domain_size ** n
    for r, rp in zip(s.relations, p.relations):
        assert len(rp) == len(r) ** n


def test_quotient_identity_partition():
    s = cycle(5)
    q, m = quotient(s, Partition.identity(5))
    assert q == s and list(m) == list(range(5))


def test_quotient_creates_loop():
    p = power(clique(2), 2)
    part = Partition.from_pairs(4, [0], [3])
    q, m = quotient(p, part)
    assert q.domain_size == 3
    assert (m[0], m[0]) in edges_of(q)


@given(structures(max_size=5), st.lists(st.tuples(st.integers(0, 4), st.integers(0, 4)), max_size=4),
       st.lists(st.tuples(st.integers(0, 4), st.integers(0, 4)), max_size=4))
def test_quotient_twice_is_quotient_by_join(s, pairs1, pairs2):
    n = s.domain_size
    pairs1 = [(a % n, b % n) for a, b in pairs1]
    pairs2 = [(a % n, b % n) for a, b in pairs2]
    p1 = Partition.from_pairs(n, [a for a, _ in pairs1], [b for _, b in pairs1])
    p2 = Partition.from_pairs(n, [a for a, _ in pairs2], [b for _, b in pairs2])
    q1, m1 = quotient(s, p1)
    p2_on_q = Partition.from_pairs(q1.domain_size, m1[[a for a, _ in pairs2]], m1[[b for _, b in pairs2]])
    q2, _ = quotient(q1, p2_on_q)
    qj, _ = quotient(s, p1.join(p2))
    assert q2 == qj


def test_partition_classes():
    p = Partition.from_pairs(6, [0, 2, 4], [2, 4, 5])
    assert p.classes() == [[0, 2, 4, 5], [1], [3]]
    assert p.class_count == 3
    with pytest.raises(ValueError):
        Partition([1, 0])


def test_disjoint_union():
    u, offs = disjoint_union([clique(2)])
    assert offs == (0,) and u == clique(2)
    u, offs = disjoint_union([clique(2), clique(2)])
    assert u.domain_size == 4 and edges_of(u) == {(0, 1), (1, 0), (2, 3), (3, 2)}
    u, _ = disjoint_union([power(clique(3), 2), power(clique(3), 6)])
    assert u.domain_size == 738
    with pytest.raises(SignatureMismatch):
        disjoint_union([clique(2), one_in_three()])


def test_parse_and_round_trip():
    s = parse_structure(K3_TEXT)
    assert s.domain_size == 3 and len(s.relations[0]) == 6 and s == clique(3)
    assert parse_structure(serialize_structure(s)) == s


def test_parse_canonicalizes_order():
    text = "structure X\ndomain 2\nrelation E 2\n1 0\n0 1\n1 0\nend\n"
    s = parse_structure(text)
    assert serialize_structure(s).splitlines()[3:5] == ["0 1", "1 0"]


@pytest.mark.parametrize("text,msg", [
    ("structure X\ndomain 3\nrelation ne 2\n0 3\nend\n", "element 3 out of range"),
    ("structure X\ndomain 3\nrelation ne 2\n0 1 2\nend\n", "arity mismatch"),
    ("structure X\nrelation ne 2\nend\n", "'relation' before 'domain'"),
    ("structure X\ndomain 3\n", "missing 'end'"),
    ("domain 3\nend\n", "'domain' before 'structure'"),
])
def test_parse_errors(text, msg):
    with pytest.raises(ParseError, match=msg):
        parse_structure(text)


def test_parse_error_carries_position():
    with pytest.raises(ParseError) as exc:
        parse_structure("structure X\ndomain 3\nrelation ne 2\n0 3\nend\n")
    assert exc.value.line == 4 and exc.value.column == 3


@given(structures(sig=(("R", 3), ("S", 1)), max_size=4))
def test_serialize_round_trip(s):
    assert parse_structure(serialize_structure(s)) == s


@given(st.integers(2, 4), st.integers(1, 4))
def test_encode_decode(base, n):
    x = all_tuples(base, n)
    assert np.array_equal(encode(x, base), np.arange(base ** n))
    assert np.array_equal(decode(encode(x, base), base, n), x)
    # first coordinate most significant
    assert tuple(x[1]) == (0,) * (n - 1) + (1,)


@pytest.mark.parametrize("a,b", [("K3", "K3"), ("K3", "K6"), ("C5", "K3"), ("T", "H2"), ("H2", "H4"),
                                 ("Horn", "Horn"), ("T", "L2"), ("K2", "K2")])
def test_builtin_templates_are_sane(a, b):
    assert template(builtin(a), builtin(b)).sanity() is not None


def test_builtins():
    assert builtin("T") == one_in_three() and builtin("H3") == nae(3)
    assert len(horn().signature) == 4
    with pytest.raises(KeyError):
        builtin("Q7")


def test_size_cap():
    with size_cap(max_elements=100):
        with pytest.raises(CapacityError):
            power(clique(3), 5)
    assert power(clique(3), 5).domain_size == 243


def test_element_out_of_range_rejected():
    with pytest.raises(ValueError):
        Structure("x", 2, [("E", 2)], [[(0, 2)]])
