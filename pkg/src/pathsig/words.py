from itertools import product
from typing import Iterator, Sequence, Tuple

Word = Tuple[int, ...]


def words_of_length(dimension: int, length: int) -> Iterator[Word]:
    """
    Enumerates the words of a given length over the letters 1..dimension.

    Words come out in lexicographic order with the first letter varying
    slowest, which is also the order used when flattening a level.
    """
    return product(range(1, dimension + 1), repeat=length)


def all_words(dimension: int, max_length: int) -> Iterator[Word]:
    for length in range(max_length + 1):
        yield from words_of_length(dimension, length)


def shuffles(u: Sequence[int], v: Sequence[int]) -> Iterator[Word]:
    """
    Yields every interleaving of u and v that keeps the internal order of
    both words. Repeated interleavings are yielded once per way of producing
    them, so the result is the shuffle multiset.

    Args:
        u: The first word.
        v: The second word.

    Returns:
        An iterator over words of length len(u) + len(v).
    """
    if len(u) == 0:
        yield tuple(v)
    elif len(v) == 0:
        yield tuple(u)
    else:
        for w in shuffles(u[1:], v):
            yield (u[0],) + w
        for w in shuffles(u, v[1:]):
            yield (v[0],) + w
