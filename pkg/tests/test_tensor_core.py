import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from stringphase.tensor_core import (
    ContractVarianceError, DegenerateMetricError, DimensionMismatchError, MetricValue, TensorError,
    TensorValue, antisymmetrize, contract, contract_pair, identity, levi_civita,
    levi_civita_symbol, permutation_sign, raise_lower, symmetrize, tensor_product,
)

MINK = np.diag([-1.0, 1, 1, 1])
finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def spd(rng, n):
    a = rng.normal(size=(n, n))
    return a @ a.T + n * np.eye(n)


def test_shape_and_variance_validation():
    with pytest.raises(TensorError):
        TensorValue(np.zeros((3, 3)), ("u",))
    with pytest.raises(TensorError):
        TensorValue(np.zeros((3, 2)), ("u", "d"))
    with pytest.raises(TensorError):
        TensorValue(np.zeros(3), ("x",))


def test_values_are_immutable():
    t = TensorValue(np.ones(3), ("u",))
    with pytest.raises(ValueError):
        t.components[0] = 2.0


def test_trace_of_identity_is_dim():
    assert float(contract(identity(4), 0, 1).components) == 4.0


def test_contract_rejects_equal_variance():
    g = MetricValue.from_matrix(np.eye(3))
    with pytest.raises(ContractVarianceError):
        contract(g.g, 0, 1)


def test_metric_times_inverse_is_identity(rng):
    for n in (2, 3, 4):
        m = MetricValue.from_matrix(spd(rng, n))
        d = contract_pair(m.g_inv, 1, m.g, 0)
        assert d.variance == ("u", "d")
        np.testing.assert_allclose(d.components, np.eye(n), atol=1e-12)


def test_minkowski_lowering_flips_time_component():
    m = MetricValue.from_matrix(MINK)
    v = TensorValue(np.array([1.0, 0, 0, 0]), ("u",))
    low = raise_lower(v, m, 0)
    assert low.variance == ("d",)
    np.testing.assert_array_equal(low.components, [-1.0, 0, 0, 0])
    assert m.signature == (-1, 1, 1, 1)


@given(arrays(float, (3, 3, 3), elements=finite), st.integers(0, 2))
def test_raise_lower_is_an_involution(comps, slot):
    m = MetricValue.from_matrix(np.array([[2.0, 0.3, 0], [0.3, 1.0, 0.1], [0, 0.1, 1.5]]))
    t = TensorValue(comps, ("u", "d", "u"))
    back = raise_lower(raise_lower(t, m, slot), m, slot)
    np.testing.assert_allclose(back.components, t.components, atol=1e-12 * (1 + np.abs(comps).max()))


def test_raise_lower_dim_mismatch():
    with pytest.raises(DimensionMismatchError):
        raise_lower(TensorValue(np.ones(3), ("u",)), MetricValue.from_matrix(MINK), 0)


def test_levi_civita_normalisation():
    assert levi_civita(MetricValue.from_matrix(np.eye(3))).eps.components[0, 1, 2] == 1.0
    assert levi_civita(MetricValue.from_matrix(MINK)).eps.components[0, 1, 2, 3] == 1.0
    om = 1.3
    eps = levi_civita(MetricValue.from_matrix(om ** 2 * MINK)).eps.components
    assert eps[0, 1, 2, 3] == pytest.approx(om ** 4, rel=1e-14)


def test_levi_civita_degenerate():
    with pytest.raises(DegenerateMetricError):
        MetricValue.from_matrix(np.diag([1.0, 1.0, 0.0]))


@pytest.mark.parametrize("n", [2, 3, 4])
def test_levi_civita_total_antisymmetry(n):
    eps = levi_civita_symbol(n)
    for a in range(n):
        for b in range(a + 1, n):
            np.testing.assert_array_equal(eps, -np.swapaxes(eps, a, b))


def test_epsilon_contraction_identity():
    # eps_{abcd} eps^{abcd} = -4! in Lorentzian signature
    m = MetricValue.from_matrix(MINK)
    eps = levi_civita(m).eps
    up = eps
    for s in range(4):
        up = raise_lower(up, m, s)
    assert np.sum(eps.components * up.components) == pytest.approx(-24.0)


def test_permutation_sign():
    assert permutation_sign([0, 1, 2]) == 1
    assert permutation_sign([1, 0, 2]) == -1
    assert permutation_sign([1, 2, 0]) == 1


@given(arrays(float, (4, 4), elements=finite))
def test_antisymmetrising_a_symmetric_pair_is_zero(a):
    s = symmetrize(TensorValue(a, ("d", "d")), 0, 1)
    assert antisymmetrize(s, 0, 1).max_abs() == 0.0


@given(arrays(float, (3,), elements=finite), arrays(float, (3,), elements=finite))
def test_tensor_product_then_contract_is_dot(u, w):
    t = tensor_product(TensorValue(u, ("u",)), TensorValue(w, ("d",)))
    assert float(contract(t, 0, 1).components) == pytest.approx(float(u @ w), abs=1e-9)


def test_operations_are_pure():
    a = TensorValue(np.arange(9.0).reshape(3, 3), ("u", "d"))
    r1 = contract(a, 0, 1).components.tobytes()
    r2 = contract(a, 0, 1).components.tobytes()
    assert r1 == r2
