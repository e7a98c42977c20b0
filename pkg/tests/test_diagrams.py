import pytest

from cascadesim.diagrams import (CASCADING, EQUAL_ORDER_CASCADING, LOCAL_FIELD,
                                 count_equal_order_cascading, count_total, enumerate_2vmi,
                                 generate_diagrams)


def test_total_counts():
    assert [count_total(n) for n in (1, 2, 3)] == [1, 5, 16]


def test_equal_order_counts():
    assert count_equal_order_cascading(1) == 0
    assert count_equal_order_cascading(3) == 5
    assert count_equal_order_cascading(5) == 21


def test_even_order_rejected():
    with pytest.raises(ValueError, match="odd orders only"):
        count_equal_order_cascading(4)


def test_invalid_orders():
    with pytest.raises(ValueError):
        count_total(0)
    with pytest.raises(ValueError):
        enumerate_2vmi(4)


@pytest.mark.parametrize("n", range(1, 7))
def test_enumeration_matches_formula(n):
    terms = list(generate_diagrams(n))
    assert len(terms) == count_total(n)
    if n % 2:
        eod = [t for t in terms if t.classification == EQUAL_ORDER_CASCADING]
        assert len(eod) == count_equal_order_cascading(n)


def test_first_order_is_single_local_field_term():
    (term,) = enumerate_2vmi(1)
    assert term.classification == LOCAL_FIELD
    assert term.a_order == 1 and term.b_order == 1


def test_second_order_has_five_local_field_terms():
    terms = enumerate_2vmi(2)
    assert len(terms) == 5
    assert all(t.classification == LOCAL_FIELD for t in terms)


def test_third_order_permuted_equal_order_terms():
    assert len(enumerate_2vmi(3, include_permutations=True, kind=EQUAL_ORDER_CASCADING)) == 30
    assert len(enumerate_2vmi(3, include_permutations=True)) == 6 * 16


def test_vacuum_ordering_invariants():
    for n in (1, 2, 3):
        for term in enumerate_2vmi(n, include_permutations=True):
            term.check()
            events = term.chronology()
            assert [e for e in events if e[1] == "b"][-1] == ("v", "b")
            assert events.index(("v", "b")) < events.index(("v", "a"))
            assert events[-1] == ("s", "a")


def test_classification_partition():
    terms = enumerate_2vmi(3, include_permutations=True)
    local = {t for t in terms if t.classification == LOCAL_FIELD}
    casc = set(enumerate_2vmi(3, include_permutations=True, kind=CASCADING))
    assert local.isdisjoint(casc)
    assert local | casc == set(terms)
    for t in casc:
        assert t.a_order >= 2 and t.b_order >= 2


def test_terms_are_distinct_and_serializable():
    terms = enumerate_2vmi(3, include_permutations=True)
    assert len(set(terms)) == len(terms)
    d = terms[0].to_dict()
    assert d["order"] == 3 and d["phase_spec"][-1] == ["ks", -1, "a"]
