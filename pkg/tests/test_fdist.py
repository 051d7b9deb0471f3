import itertools

import pytest

from blockmon import fdist
from blockmon.errors import ConvergenceError, InputError
from blockmon.fdist import f_cdf, f_quantile
from oracles import bisect_quantile, f_cdf_quad

DOFS = [(1, 1), (1, 30), (2, 7), (5, 10), (10, 90), (17, 483), (52, 448), (3, 5000)]


@pytest.mark.parametrize("q", [0.5, 0.95, 0.99])
@pytest.mark.parametrize("d1, d2", DOFS)
def test_roundtrip(q, d1, d2):
    assert f_cdf(f_quantile(q, d1, d2), d1, d2) == pytest.approx(q, abs=1e-9)


@pytest.mark.parametrize("d", [1, 2, 5, 33, 400])
def test_equal_dofs_median_is_one(d):
    assert f_quantile(0.5, d, d) == pytest.approx(1.0, rel=1e-12)


def test_upper_quantile_5_10():
    # frozen from bisection on a quadrature CDF: 3.325834530413017
    assert f_quantile(0.95, 5, 10) == pytest.approx(3.325834530413017, rel=1e-6)
    ref = bisect_quantile(lambda x: f_cdf_quad(x, 5, 10), 0.95)
    assert f_quantile(0.95, 5, 10) == pytest.approx(ref, rel=1e-6)


@pytest.mark.parametrize("q, d1, d2", list(itertools.product([1e-6, 0.999999], [1, 4], [3, 200])))
def test_extreme_tails(q, d1, d2):
    x = f_quantile(q, d1, d2)
    assert f_cdf(x, d1, d2) == pytest.approx(q, abs=1e-12)


def test_monotone_in_probability():
    xs = [f_quantile(q, 6, 40) for q in (0.1, 0.5, 0.9, 0.99)]
    assert xs == sorted(xs)


@pytest.mark.parametrize("args", [(0.0, 3, 3), (1.0, 3, 3), (0.5, 0, 3), (0.5, 3, 0.5)])
def test_bad_arguments(args):
    with pytest.raises(InputError):
        f_quantile(*args)


def test_iteration_cap(monkeypatch):
    monkeypatch.setattr(fdist, "MAX_ITER", 1)
    with pytest.raises(ConvergenceError):
        f_quantile(0.95, 5, 10)
