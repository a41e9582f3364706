import os
import sys

import pytest
from pydantic import ValidationError, validate_call

dir_path = os.path.dirname(os.path.realpath(__file__))
sys.path.append(os.path.realpath(f"{dir_path}/../.."))

from voxquery.futils import curry, pmap, scan_pipe


class TestCurry:
    # Arguments may be supplied in any grouping
    def test_groupings(self):
        @curry
        def scale(depth, factor):
            return depth * factor

        assert scale(2.0, 3.0) == 6.0
        assert scale(2.0)(3.0) == 6.0
        assert scale(factor=3.0)(2.0) == 6.0
        assert scale(depth=2.0)(factor=3.0) == 6.0

    # Defaults do not hold back evaluation
    def test_defaults(self):
        @curry
        def lift(u, v, depth=1.0):
            return u * depth, v * depth

        assert lift(1.0, 2.0) == (1.0, 2.0)
        assert lift(1.0)(2.0, depth=2.0) == (2.0, 4.0)

    # Variadic parameters are optional
    def test_variadic(self):
        @curry
        def stack(first, *rest, **named):
            return first, rest, named

        assert stack(1) == (1, (), {})
        assert stack(1, 2, 3, k=4) == (1, (2, 3), {"k": 4})

    # Duplicated arguments still raise
    def test_duplicates(self):
        @curry
        def pair(a, b, c=0):
            return a, b, c

        with pytest.raises(TypeError):
            pair(1, c=2)(2, c=3)
        with pytest.raises(TypeError):
            pair(a=1)(1)

    # Validation only runs once the call is complete
    def test_validate_call(self):
        @curry
        @validate_call()
        def shift(x: int, offset: int):
            return x + offset

        partial = shift(offset=2)
        assert partial(3) == 5
        with pytest.raises(ValidationError):
            partial("three")

    # Built-ins without a signature need the fallback
    def test_fallback(self):
        with pytest.raises(ValueError):
            curry(max)
        assert curry(max, fallback=True)(3, 5) == 5


class TestScanPipe:
    # Every intermediate state is kept, the initial one is not
    def test_states(self):
        assert scan_pipe([lambda x: x + 1, lambda x: x * 10], 1) == [2, 20]

    # No functions give no states
    def test_empty(self):
        assert scan_pipe([], 5) == []

    # Curried over the initial state
    def test_curried(self):
        layers = scan_pipe([lambda x: x * 2] * 3)
        assert layers(1) == [2, 4, 8]


def add(x, y):
    return x + y


class TestPmap:
    # Results keep the input order
    def test_order(self):
        assert pmap(lambda x: x**2, range(8), n_workers=4) == [0, 1, 4, 9, 16, 25, 36, 49]

    # Several iterables are zipped
    def test_multiple(self):
        assert pmap(add, [1, 2, 3], [4, 5, 6], n_workers=3, executor="process") == [5, 7, 9]
