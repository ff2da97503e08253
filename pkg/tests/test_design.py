import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from egokit.design import (
    BoxDomain,
    evaluate_benchmark,
    lhs,
    make_benchmark,
    min_distance,
    sample_lengthscales,
)


def test_box_domain_rejects_inverted_bounds():
    with pytest.raises(ValueError):
        BoxDomain(np.array([0.0, 1.0]), np.array([1.0, 0.5]))


def test_box_domain_cube():
    dom = BoxDomain.cube(-5, 5, 3)
    assert dom.dim == 3
    assert np.all(dom.width == 10.0)
    assert dom.contains([0.0, 0.0, 0.0])
    assert not dom.contains([0.0, 0.0, 5.1])


class TestLhs:
    def test_single_point_inside_domain(self):
        dom = BoxDomain.cube(-5, 5, 2)
        pts = lhs(1, dom, np.random.default_rng(0))
        assert pts.shape == (1, 2)
        assert dom.contains(pts)

    def test_one_point_per_decile(self):
        dom = BoxDomain.cube(0, 1, 2)
        pts = lhs(10, dom, np.random.default_rng(1))
        for j in range(2):
            strata = np.floor(np.sort(pts[:, j]) * 10).astype(int)
            assert list(strata) == list(range(10))

    def test_two_seeds_differ_but_both_stratified(self):
        dom = BoxDomain.cube(-5, 5, 5)
        a = lhs(100, dom, np.random.default_rng(1))
        b = lhs(100, dom, np.random.default_rng(2))
        assert not np.allclose(a, b)
        for pts in (a, b):
            unit = (pts - dom.lower) / dom.width
            for j in range(5):
                strata = np.sort(np.floor(unit[:, j] * 100).astype(int))
                assert list(strata) == list(range(100))

    def test_midpoint_mode_hits_stratum_centers(self):
        dom = BoxDomain.cube(0, 1, 1)
        pts = lhs(4, dom, np.random.default_rng(3), midpoint=True)
        assert sorted(np.round(pts[:, 0], 12)) == [0.125, 0.375, 0.625, 0.875]

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=2**32 - 1),
           n=st.integers(min_value=1, max_value=40))
    def test_stratification_holds_for_every_seed(self, seed, n):
        dom = BoxDomain.cube(-3, 7, 2)
        pts = lhs(n, dom, np.random.default_rng(seed))
        assert dom.contains(pts)
        unit = (pts - dom.lower) / dom.width
        for j in range(2):
            strata = np.sort(np.floor(unit[:, j] * n).astype(int))
            assert list(strata) == list(range(n))

    def test_rejects_nonpositive_n(self):
        with pytest.raises(ValueError):
            lhs(0, BoxDomain.cube(0, 1, 1), np.random.default_rng(0))


class TestSampleLengthscales:
    def test_single_value_in_range(self):
        thetas = sample_lengthscales(1, np.random.default_rng(0))
        assert thetas.shape == (1,)
        assert 0.01 <= thetas[0] <= 10.0

    def test_five_values_one_per_log_stratum(self):
        thetas = sample_lengthscales(5, np.random.default_rng(4))
        edges = 10.0 ** np.linspace(-2, 1, 6)
        for i, theta in enumerate(thetas):
            assert edges[i] <= theta <= edges[i + 1]

    @settings(max_examples=100, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=2**32 - 1))
    def test_sorted_and_in_range_for_every_seed(self, seed):
        thetas = sample_lengthscales(5, np.random.default_rng(seed))
        assert np.all(np.diff(thetas) >= 0)
        assert np.all((thetas >= 1e-2) & (thetas <= 1e1))


class TestMinDistance:
    def test_zero_for_a_design_point(self):
        X = np.array([[1.0, 2.0], [3.0, 4.0]])
        assert min_distance(X[0], X) == 0.0

    def test_three_four_five_triangle(self):
        assert min_distance(np.array([0.0, 0.0]), np.array([[3.0, 4.0]])) == 5.0

    @settings(max_examples=100, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=2**32 - 1))
    def test_matches_naive_double_loop(self, seed):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(rng.integers(1, 12), 3))
        x = rng.normal(size=3)
        naive = min(float(np.sqrt(np.sum((x - row) ** 2))) for row in X)
        assert min_distance(x, X) == pytest.approx(naive, rel=1e-12)


class TestBenchmarks:
    @pytest.mark.parametrize("name", ["sphere", "ackley", "rastrigin"])
    @pytest.mark.parametrize("dim", [1, 2, 5])
    def test_minimum_is_zero_at_offset(self, name, dim):
        fn = make_benchmark(name, dim)
        assert evaluate_benchmark(fn, fn.optimum) == pytest.approx(0.0, abs=1e-12)

    def test_sphere_1d_at_minus_five(self):
        fn = make_benchmark("sphere", 1)
        assert fn(np.array([-5.0])) == pytest.approx(56.25)

    def test_rastrigin_2d_unit_offset(self):
        # z = (1, 0): 20 + 1 - 10 cos(2 pi) - 10 cos(0) = 1
        fn = make_benchmark("rastrigin", 2)
        assert fn(np.array([3.5, 2.5])) == pytest.approx(1.0, abs=1e-10)

    def test_dimension_mismatch_raises(self):
        fn = make_benchmark("sphere", 2)
        with pytest.raises(ValueError):
            fn(np.array([1.0, 2.0, 3.0]))

    def test_unknown_name_rejected(self):
        with pytest.raises(ValueError):
            make_benchmark("rosenbrock", 2)

    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=2**32 - 1),
           name=st.sampled_from(["sphere", "ackley", "rastrigin"]))
    def test_nonnegative_everywhere(self, seed, name):
        rng = np.random.default_rng(seed)
        fn = make_benchmark(name, 3)
        x = rng.uniform(-5, 5, size=3)
        assert evaluate_benchmark(fn, x) >= 0.0
