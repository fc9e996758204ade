import itertools

import pytest
from hypothesis import given, settings, strategies as st

from dimbound.algebra import (Alphabet, Letter, RankClass, RankSymmetry,
                              enumerate_rank_classes, enumerate_words,
                              poly_adjoint, poly_degree, poly_hermitize,
                              poly_is_hermitian, poly_reduce)


def dichotomic_pair():
    return Alphabet([Letter(0, "A1", rule="dichotomic", party="A"),
                     Letter(1, "A2", rule="dichotomic", party="A")])


def projector_pair():
    return Alphabet([Letter(0, "P", rule="idempotent", party="A"),
                     Letter(1, "Q", rule="idempotent", party="A")])


def bell_alphabet():
    return Alphabet([Letter(0, "A1", rule="dichotomic", party="A"),
                     Letter(1, "A2", rule="dichotomic", party="A"),
                     Letter(2, "B1", rule="dichotomic", party="B"),
                     Letter(3, "B2", rule="dichotomic", party="B")])


def test_involution_squares_cancel():
    a = dichotomic_pair()
    assert a.reduce((0, 0)) == ()
    assert a.reduce((0, 0, 1)) == (1,)
    assert a.reduce((0, 1, 1, 0)) == ()


def test_idempotent_squares_collapse():
    a = projector_pair()
    assert a.reduce((0, 0)) == (0,)
    assert a.reduce((0, 0, 0, 1, 1)) == (0, 1)
    # no cancellation across distinct projectors
    assert a.reduce((0, 1, 0)) == (0, 1, 0)


def test_cross_party_letters_commute():
    a = bell_alphabet()
    # canonical form sorts commuting parties, so both orders agree
    assert a.reduce((2, 0)) == a.reduce((0, 2))
    assert a.reduce((3, 1, 2, 0)) == (1, 0, 3, 2)
    # same-party order is preserved
    assert a.reduce((1, 0)) == (1, 0)


def test_enumerate_words_counts_against_brute_force():
    a = dichotomic_pair()
    for deg in range(5):
        words = enumerate_words(a, deg, reduced=True)
        brute = set()
        for k in range(deg + 1):
            for tup in itertools.product(range(2), repeat=k):
                w = a.reduce(tup)
                if len(w) <= deg:
                    brute.add(w)
        assert set(words) == brute
        assert len(words) == len(set(words))


def test_enumerate_words_starts_with_identity():
    a = projector_pair()
    words = enumerate_words(a, 3, reduced=True)
    assert words[0] == ()
    # two projectors: alternating words only, 2 per length
    assert len(words) == 1 + 2 + 2 + 2


def test_poly_adjoint_involution():
    a = bell_alphabet()
    poly = {(0, 1): 1.5 + 0.5j, (2,): -2.0, (): 3.0}
    twice = poly_adjoint(poly_adjoint(poly, a), a)
    assert twice == poly_reduce(poly, a)


def test_poly_hermitize_fixes_adjoint():
    a = dichotomic_pair()
    poly = {(0, 1): 1.0 + 1.0j}
    herm = poly_hermitize(poly, a)
    assert poly_is_hermitian(herm, a)
    assert herm[(0, 1)] == pytest.approx(0.5 + 0.5j)
    assert herm[(1, 0)] == pytest.approx(0.5 - 0.5j)


def test_poly_degree():
    a = dichotomic_pair()
    assert poly_degree({(): 1.0}) == 0
    assert poly_degree({(0, 1, 0): 1.0, (1,): 2.0}) == 3


@given(st.lists(st.integers(0, 1), max_size=12))
@settings(max_examples=200, deadline=None)
def test_reduce_is_idempotent(word):
    a = dichotomic_pair()
    once = a.reduce(tuple(word))
    assert a.reduce(once) == once


@given(st.lists(st.integers(0, 3), max_size=10))
@settings(max_examples=200, deadline=None)
def test_reduce_respects_party_sort(word):
    a = bell_alphabet()
    w = a.reduce(tuple(word))
    parties = [a[i].party for i in w]
    assert parties == sorted(parties)


def test_rank_class_enumeration_plain():
    classes = enumerate_rank_classes([range(3), range(3)])
    assert len(classes) == 9
    assert all(isinstance(c, RankClass) for c in classes)
    assert {c.ranks for c in classes} == set(itertools.product(range(3), repeat=2))


def test_rank_class_group_sum_constraint():
    # members of a completeness group must have ranks summing to the dimension
    classes = enumerate_rank_classes([range(3)] * 4, groups=[((0, 1, 2, 3), 2)])
    assert {c.ranks for c in classes} == {
        r for r in itertools.product(range(3), repeat=4) if sum(r) == 2}
    assert len(classes) == 10


def test_rank_class_dedup_conserves_multiplicity():
    swap = RankSymmetry((1, 0), (False, False))
    classes = enumerate_rank_classes([range(3), range(3)], symmetries=[swap],
                                     dedup=True, caps=[2, 2])
    assert sum(c.multiplicity for c in classes) == 9
    assert len(classes) == 6


def test_rank_class_dedup_with_flip():
    # flip sends r -> cap - r, so (0,) and (2,) fall into one orbit
    flip = RankSymmetry((0,), (True,))
    classes = enumerate_rank_classes([range(3)], symmetries=[flip], dedup=True,
                                     caps=[2])
    ranks = sorted(c.ranks for c in classes)
    assert ranks == [(0,), (1,)]
    assert sum(c.multiplicity for c in classes) == 3
