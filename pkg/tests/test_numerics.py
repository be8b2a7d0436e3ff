import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pwsurv.numerics import log1m_exp, log_sum_exp

finite_floats = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)


class TestLogSumExp:
    def test_two_zeros(self):
        assert log_sum_exp([0.0, 0.0]) == pytest.approx(math.log(2.0), abs=1e-15)

    def test_overflow_guard(self):
        assert log_sum_exp([1000.0, 1000.0]) == pytest.approx(1000.0 + math.log(2.0))

    def test_weighted_units(self):
        assert log_sum_exp([0.0, 0.0], weights=[1.0, 3.0]) == pytest.approx(
            math.log(4.0), abs=1e-15
        )

    def test_single_value(self):
        assert log_sum_exp([2.5]) == pytest.approx(2.5)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            log_sum_exp([])

    def test_nan_rejected(self):
        with pytest.raises(ValueError):
            log_sum_exp([0.0, float("nan")])

    def test_inf_rejected(self):
        with pytest.raises(ValueError):
            log_sum_exp([0.0, float("inf")])

    @pytest.mark.parametrize("w", [[1.0, 0.0], [1.0, -2.0], [1.0, float("nan")]])
    def test_bad_weights_rejected(self, w):
        with pytest.raises(ValueError):
            log_sum_exp([0.0, 0.0], weights=w)

    def test_weight_shape_mismatch(self):
        with pytest.raises(ValueError):
            log_sum_exp([0.0, 0.0], weights=[1.0])


@settings(deadline=None, max_examples=300)
@given(
    values=st.lists(finite_floats, min_size=1, max_size=8),
    shift=st.floats(min_value=-1e3, max_value=1e3, allow_nan=False),
)
def test_shift_equivariance(values, shift):
    base = log_sum_exp(values)
    shifted = log_sum_exp([v + shift for v in values])
    assert shifted == pytest.approx(base + shift, rel=1e-12, abs=1e-9)


@settings(deadline=None, max_examples=300)
@given(
    values=st.lists(st.floats(min_value=-50, max_value=50), min_size=1, max_size=8),
    data=st.data(),
)
def test_weights_fold_into_values(values, data):
    weights = data.draw(
        st.lists(
            st.floats(min_value=1e-6, max_value=1e6),
            min_size=len(values),
            max_size=len(values),
        )
    )
    weighted = log_sum_exp(values, weights=weights)
    folded = log_sum_exp([v + math.log(w) for v, w in zip(values, weights)])
    assert weighted == pytest.approx(folded, abs=1e-12)


class TestLog1mExp:
    def test_half(self):
        # 1 - exp(-ln 2) = 1/2
        assert log1m_exp(-math.log(2.0)) == pytest.approx(-math.log(2.0), abs=1e-15)

    def test_near_zero_argument(self):
        # 60-digit mpmath: log(1 - exp(-1e-10)) = -23.02585092999045684...
        assert log1m_exp(-1e-10) == pytest.approx(-23.025850929990457, rel=1e-13)

    def test_very_negative_argument(self):
        # 60-digit mpmath: log(1 - exp(-50)) = -1.928749847963917783e-22
        assert log1m_exp(-50.0) == pytest.approx(-1.9287498479639178e-22, rel=1e-13)

    @pytest.mark.parametrize("a", [0.0, 1e-12, 5.0])
    def test_domain_error(self, a):
        with pytest.raises(ValueError):
            log1m_exp(a)


@settings(deadline=None, max_examples=300)
@given(a=st.floats(min_value=-50.0, max_value=-1e-8))
def test_log1m_exp_complement_identity(a):
    assert math.exp(log1m_exp(a)) + math.exp(a) == pytest.approx(1.0, abs=1e-12)
