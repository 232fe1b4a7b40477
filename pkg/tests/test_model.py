import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fobs.cstr import CstrParams, cstr_system, steady_state
from fobs.model import (
    LinearSystem,
    NonlinearSystem,
    NumericOverflowError,
    functional_sequence,
    iterate_map,
    numerical_rank,
    observability_index,
)


def test_iterate_scalar_power():
    sys = LinearSystem([[2.0]], [[1.0]], [[1.0]])
    assert iterate_map(sys, 3, [1.0]) == pytest.approx([8.0])


def test_iterate_zero_is_identity(rng):
    sys = LinearSystem(rng.standard_normal((3, 3)), [[1, 0, 0]], [[0, 1, 0]])
    x = rng.standard_normal(3)
    np.testing.assert_array_equal(iterate_map(sys, 0, x), x)


def test_cstr_reference_is_fixed_point():
    P = CstrParams()
    sys = cstr_system(P, steady_state(P))
    np.testing.assert_allclose(iterate_map(sys, 1, np.zeros(4)), 0.0, atol=1e-12)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_iterate_reports_overflow_index():
    sys = NonlinearSystem(
        F=lambda x: x * 1e200, H=lambda x: x, q=lambda x: x[0], n=1, p=1,
        domain_box=([-1.0], [1.0]),
    )
    with pytest.raises(NumericOverflowError) as info:
        iterate_map(sys, 5, [1.0])
    assert info.value.index == 2


def test_iterate_rejects_wrong_dimension():
    sys = LinearSystem([[1.0]], [[1.0]], [[1.0]])
    with pytest.raises(ValueError):
        iterate_map(sys, 1, [1.0, 2.0])


def test_functional_sequence_geometric():
    sys = LinearSystem([[0.5]], [[1.0]], [[1.0]])
    qs, hs = functional_sequence(sys, 2, [4.0])
    np.testing.assert_allclose(qs, [4, 2, 1])
    np.testing.assert_allclose(hs, [[4], [2], [1]])


def test_functional_sequence_v1(diag_system):
    qs, hs = functional_sequence(diag_system, 1, [1.0, 1.0])
    np.testing.assert_allclose(qs, [1.0, 0.5])
    np.testing.assert_allclose(hs, [[1.0], [0.8]])


def test_functional_sequence_single_pass():
    calls = []

    def F(x):
        calls.append(1)
        return 0.5 * x

    sys = NonlinearSystem(F=F, H=lambda x: x, q=lambda x: x[0], n=1, p=1,
                          domain_box=([-1.0], [1.0]))
    functional_sequence(sys, 4, [1.0])
    assert len(calls) == 4


@pytest.mark.parametrize(
    "F, H, expected",
    [
        ([[0.3, 2.0], [-1.0, 0.7]], [[1, 0], [0, 1]], 1),
        ([[1, 1], [0, 1]], [[1, 0]], 2),
        ([[0.8, 0], [0, 0.5]], [[1, 0]], None),
    ],
)
def test_observability_index(F, H, expected):
    sys = LinearSystem(F, H, [[1.0] * len(F)])
    assert observability_index(sys) == expected


def test_numerical_rank_threshold():
    M = np.diag([1.0, 1e-3, 1e-12])
    assert numerical_rank(M) == 2
    assert numerical_rank(np.zeros((2, 2))) == 0


def test_linear_system_validates_shapes():
    with pytest.raises(ValueError):
        LinearSystem([[1, 0], [0, 1]], [[1, 0, 0]], [[1, 0]])
    with pytest.raises(ValueError):
        LinearSystem([[1, 0], [0, 1]], [[1, 0]], [[1, 0, 0]])
    with pytest.raises(ValueError):
        LinearSystem([[np.nan]], [[1]], [[1]])


def test_nonlinear_box_must_be_ordered():
    with pytest.raises(ValueError):
        NonlinearSystem(F=lambda x: x, H=lambda x: x, q=lambda x: x[0], n=1, p=1,
                        domain_box=([1.0], [1.0]))


def test_linear_wrap_matches(rng):
    sys = LinearSystem(rng.standard_normal((3, 3)), rng.standard_normal((2, 3)), rng.standard_normal((1, 3)))
    nl = sys.as_nonlinear()
    x = rng.standard_normal(3)
    a = functional_sequence(sys, 3, x)
    b = functional_sequence(nl, 3, x)
    np.testing.assert_allclose(a[0], b[0], rtol=1e-14)
    np.testing.assert_allclose(a[1], b[1], rtol=1e-14)


small = st.floats(-1.0, 1.0, allow_nan=False)


@settings(max_examples=60, deadline=None)
@given(
    F=arrays(np.float64, (3, 3), elements=small),
    x=arrays(np.float64, (3,), elements=small),
    a=st.integers(0, 6),
    b=st.integers(0, 6),
)
def test_semigroup_and_matrix_power(F, x, a, b):
    sys = LinearSystem(F, [[1.0, 0, 0]], [[0, 1.0, 0]])
    lhs = iterate_map(sys, a + b, x)
    rhs = iterate_map(sys, a, iterate_map(sys, b, x))
    scale = max(1.0, np.max(np.abs(lhs)))
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * scale
    direct = np.linalg.matrix_power(F, a + b) @ x
    assert np.max(np.abs(lhs - direct)) <= 1e-12 * max(1.0, np.max(np.abs(direct)))


@settings(max_examples=40, deadline=None)
@given(
    F=arrays(np.float64, (3, 3), elements=small),
    H=arrays(np.float64, (2, 3), elements=small),
    s=arrays(np.float64, (2,), elements=st.floats(0.1, 10.0) | st.floats(-10.0, -0.1)),
)
def test_observability_index_row_scaling(F, H, s):
    a = LinearSystem(F, H, [[1.0, 0, 0]])
    b = LinearSystem(F, s[:, None] * H, [[1.0, 0, 0]])
    assert observability_index(a) == observability_index(b)
