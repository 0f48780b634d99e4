from math import comb

import pytest
from hypothesis import given
from hypothesis import strategies as st

from src.pathsig.words import all_words, shuffles, words_of_length


def test_words_of_length_order():
    assert list(words_of_length(2, 2)) == [(1, 1), (1, 2), (2, 1), (2, 2)]
    assert list(words_of_length(3, 0)) == [()]


def test_all_words_counts():
    assert len(list(all_words(2, 4))) == 31
    assert list(all_words(1, 2)) == [(), (1,), (1, 1)]


@pytest.mark.parametrize("u, v, expected", [
    ((), (1, 2), [(1, 2)]),
    ((1,), (), [(1,)]),
    ((1,), (2,), [(1, 2), (2, 1)]),
    ((1, 2), (3,), [(1, 2, 3), (1, 3, 2), (3, 1, 2)]),
    ((1,), (1,), [(1, 1), (1, 1)]),
])
def test_shuffles_small(u, v, expected):
    assert sorted(shuffles(u, v)) == sorted(expected)


words = st.lists(st.integers(min_value=1, max_value=3), max_size=4).map(tuple)


@given(words, words)
def test_shuffle_count_is_binomial(u, v):
    assert len(list(shuffles(u, v))) == comb(len(u) + len(v), len(u))


@given(words, words)
def test_shuffles_keep_both_orders(u, v):
    # tag letters so that repeated letters of u and v stay distinguishable
    tagged_u = tuple(("u", i) for i in range(len(u)))
    tagged_v = tuple(("v", i) for i in range(len(v)))
    for w in shuffles(tagged_u, tagged_v):
        assert [x for x in w if x[0] == "u"] == list(tagged_u)
        assert [x for x in w if x[0] == "v"] == list(tagged_v)
    assert len(set(shuffles(tagged_u, tagged_v))) == comb(len(u) + len(v), len(u))
