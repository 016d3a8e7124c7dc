"""Group law, dilations, and the oscillator-spectrum combinatorics."""

import numpy as np
import pytest

from subwave.group import (
    GroupElement,
    dilate,
    enumerate_multi_indices,
    group_identity,
    group_inverse,
    group_multiply,
    homogeneous_dimension,
    oscillator_eigenvalue,
)


def random_element(rng, n=1):
    return GroupElement(rng.normal(size=n), rng.normal(size=n), rng.normal())


def assert_close(a, b, tol=1e-12):
    assert np.allclose(a.x, b.x, atol=tol)
    assert np.allclose(a.y, b.y, atol=tol)
    assert abs(a.t - b.t) <= tol * max(1.0, abs(a.t), abs(b.t))


def test_identity_is_neutral():
    rng = np.random.default_rng(0)
    for n in (1, 2, 3):
        e = group_identity(n)
        g = random_element(rng, n)
        assert_close(group_multiply(e, g), g, tol=0.0)
        assert_close(group_multiply(g, e), g, tol=0.0)


def test_associativity():
    rng = np.random.default_rng(7)
    for _ in range(200):
        n = int(rng.integers(1, 4))
        a, b, c = (random_element(rng, n) for _ in range(3))
        left = group_multiply(group_multiply(a, b), c)
        right = group_multiply(a, group_multiply(b, c))
        assert_close(left, right)


def test_inverse():
    rng = np.random.default_rng(3)
    for _ in range(100):
        n = int(rng.integers(1, 4))
        g = random_element(rng, n)
        e = group_multiply(g, group_inverse(g))
        assert np.allclose(e.x, 0.0, atol=1e-12)
        assert np.allclose(e.y, 0.0, atol=1e-12)
        assert abs(e.t) < 1e-12
        assert_close(group_multiply(group_inverse(g), g), group_identity(n))


def test_noncommutative_central_defect():
    a = GroupElement([1.0], [0.0], 0.0)
    b = GroupElement([0.0], [1.0], 0.0)
    ab = group_multiply(a, b)
    ba = group_multiply(b, a)
    assert np.allclose(ab.x, ba.x) and np.allclose(ab.y, ba.y)
    # the two products differ exactly by the symplectic area x.y' - x'.y
    assert ab.t - ba.t == pytest.approx(1.0)


def test_dilation_is_automorphism():
    rng = np.random.default_rng(11)
    for _ in range(50):
        n = int(rng.integers(1, 3))
        a, b = random_element(rng, n), random_element(rng, n)
        r = float(rng.uniform(0.2, 3.0))
        assert_close(dilate(group_multiply(a, b), r),
                     group_multiply(dilate(a, r), dilate(b, r)))


def test_dilation_scales_center_quadratically():
    g = GroupElement([1.0], [2.0], 3.0)
    d = dilate(g, 2.0)
    assert np.allclose(d.x, [2.0]) and np.allclose(d.y, [4.0])
    assert d.t == pytest.approx(12.0)
    with pytest.raises(ValueError):
        dilate(g, 0.0)
    with pytest.raises(ValueError):
        dilate(g, -1.0)


def test_element_validation():
    with pytest.raises(ValueError):
        GroupElement([1.0, 2.0], [1.0], 0.0)
    with pytest.raises(ValueError):
        GroupElement([[1.0]], [[1.0]], 0.0)
    with pytest.raises(ValueError):
        GroupElement([np.nan], [0.0], 0.0)
    with pytest.raises(ValueError):
        group_multiply(GroupElement([1.0], [0.0], 0.0),
                       GroupElement([1.0, 0.0], [0.0, 0.0], 0.0))


def test_homogeneous_dimension():
    assert homogeneous_dimension(1) == 4
    assert homogeneous_dimension(2) == 6
    assert homogeneous_dimension(5) == 12
    with pytest.raises(ValueError):
        homogeneous_dimension(0)


def test_oscillator_eigenvalue():
    assert oscillator_eigenvalue((0,)) == 1
    assert oscillator_eigenvalue((3,)) == 7
    assert oscillator_eigenvalue((0, 0)) == 2
    assert oscillator_eigenvalue((1, 2)) == 8
    with pytest.raises(ValueError):
        oscillator_eigenvalue((-1,))


def test_enumerate_multi_indices_n1():
    idx = enumerate_multi_indices(1, 15.0)
    assert idx == [(k,) for k in range(8)]


def test_enumerate_multi_indices_graded_and_prefix_stable():
    for n in (1, 2, 3):
        small = enumerate_multi_indices(n, 7.0)
        large = enumerate_multi_indices(n, 13.0)
        assert large[: len(small)] == small
        mus = [oscillator_eigenvalue(k) for k in large]
        assert all(mu <= 13.0 for mu in mus)
        assert mus == sorted(mus)


def test_enumerate_multi_indices_empty_truncation():
    # mu_0 = n is the bottom of the spectrum; anything below it is empty
    with pytest.raises(ValueError):
        enumerate_multi_indices(2, 1.5)
