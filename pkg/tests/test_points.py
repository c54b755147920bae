import math

import pytest

from dynspanner import DuplicatePointError, PointStore
from dynspanner.points import aspect_ratio_of_coords, log2_aspect_ratio


def test_distance_examples():
    s = PointStore(2)
    a = s.insert((0.0, 0.0))
    b = s.insert((3.0, 4.0))
    c = s.insert((1.0, 1.0))
    assert s.distance(a, b) == 5.0
    assert s.distance(a, c) == pytest.approx(math.sqrt(2.0))
    assert s.distance(a, b) == s.distance(b, a)


def test_ids_sequential_never_reused():
    s = PointStore(2)
    a = s.insert((0.0, 0.0))
    b = s.insert((1.0, 0.0))
    assert (a, b) == (0, 1)
    s.delete(a)
    c = s.insert((2.0, 0.0))
    assert c == 2
    assert s.alive_ids() == [1, 2]
    assert not s.is_alive(a)


def test_duplicate_rejected():
    s = PointStore(2)
    s.insert((1.0, 1.0))
    with pytest.raises(DuplicatePointError):
        s.insert((1.0, 1.0))
    # A deleted point's coordinates may be reused.
    s.delete(0)
    assert s.insert((1.0, 1.0)) == 1


def test_nonfinite_rejected():
    s = PointStore(2)
    with pytest.raises(ValueError):
        s.insert((float("nan"), 0.0))
    with pytest.raises(ValueError):
        s.insert((float("inf"), 0.0))
    with pytest.raises(ValueError):
        s.insert((0.0,))


def test_distance_any_allows_retired_ids():
    s = PointStore(2)
    a = s.insert((0.0, 0.0))
    b = s.insert((3.0, 4.0))
    s.delete(a)
    with pytest.raises(KeyError):
        s.distance(a, b)
    assert s.distance_any(a, b) == 5.0


def test_aspect_ratio_helpers():
    import numpy as np

    coords = np.array([[0.0, 0.0], [1.0, 0.0], [10.0, 0.0]])
    assert aspect_ratio_of_coords(coords) == 10.0
    assert log2_aspect_ratio(coords) == pytest.approx(math.log2(10.0))
    with pytest.raises(ValueError):
        aspect_ratio_of_coords(np.array([[0.0, 0.0], [0.0, 0.0]]))
