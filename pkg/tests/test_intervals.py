from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rarelab.intervals import Interval, IntervalUnion, merge_intervals
from rarelab.rng import SeededRng, as_generator, stream_generators


def test_endpoint_conventions():
    iv = Interval(0.25, 0.5, False, True)
    assert not iv.contains(0.25)
    assert iv.contains(0.5)
    assert Interval(0.5, 0.5, True, True).contains(0.5)
    assert Interval(0.5, 0.5, True, False).is_empty


def test_union_rejects_overlap_and_bad_mass():
    with pytest.raises(ValueError):
        IntervalUnion((Interval(0, 0.5, True, True), Interval(0.5, 1, True, False)))
    with pytest.raises(ValueError):
        IntervalUnion((Interval(0, 0.5),), 0.0, "exact")
    with pytest.raises(ValueError):
        IntervalUnion((Interval(0, 1.5),))


def test_merge_touching_pieces():
    out = merge_intervals([Interval(0.5, 1), Interval(0, 0.5), Interval(0.7, 0.8)])
    assert out == (Interval(0, 1),)
    # open on both sides of 1/2: stays split
    out = merge_intervals([Interval(0, 0.5, True, False), Interval(0.5, 1, False, False)])
    assert len(out) == 2


def test_fraction_endpoints_and_arrays():
    A = IntervalUnion((Interval(Fraction(1, 3), Fraction(1, 2), False, True),))
    assert A.contains(Fraction(1, 2)) and not A.contains(Fraction(1, 3))
    lo, hi, loc, hic = A.arrays()
    assert lo.dtype == float and hi[0] == 0.5 and not loc[0] and hic[0]


@given(st.lists(st.floats(0, 1), min_size=1, max_size=50), st.floats(0, 0.5), st.floats(1e-6, 0.5),
       st.booleans(), st.booleans())
def test_contains_array_matches_scalar(xs, a, w, loc, hic):
    A = IntervalUnion((Interval(a, a + w, loc, hic),))
    xs = xs + [a, a + w]
    assert A.contains_array(xs).tolist() == [A.contains(x) for x in xs]


def test_rng_streams_independent_and_reproducible():
    a = SeededRng(7, 3).generator().random(5)
    b = SeededRng(7, 3).generator().random(5)
    c = SeededRng(7, 4).generator().random(5)
    assert np.array_equal(a, b) and not np.array_equal(a, c)
    gens = stream_generators(7, 3, offset=2)
    assert np.array_equal(gens[1].random(5), a) and np.array_equal(gens[2].random(5), c)
    assert isinstance(as_generator(5), np.random.Generator)
    with pytest.raises(ValueError):
        SeededRng(-1)
