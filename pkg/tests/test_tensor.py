import numpy as np
import pytest

from esefn import functional as F
from esefn.errors import DimensionError, NonFiniteError, UsageError
from esefn.gradcheck import finite_diff_grad, relative_error
from esefn.tensor import Tensor, backward, topological_order


def test_shape_invariants():
    t = Tensor(np.arange(6.0).reshape(2, 3), requires_grad=True)
    assert t.data.size == np.prod(t.shape)
    assert t.grad.shape == t.shape and not t.grad.any()
    assert Tensor([1.0]).grad is None


def test_rank_above_three_rejected():
    with pytest.raises(DimensionError):
        Tensor(np.zeros((1, 1, 1, 1)))


@pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
def test_non_finite_is_an_error(bad):
    with pytest.raises(NonFiniteError):
        Tensor([1.0, bad])


@pytest.mark.filterwarnings("ignore:overflow")
def test_non_finite_op_output_is_an_error():
    x = Tensor([1e308], requires_grad=True)
    with pytest.raises(NonFiniteError):
        x * 10.0


def test_sum_gives_ones():
    x = Tensor([1.0, -2.0, 5.0], requires_grad=True)
    backward(x.sum())
    np.testing.assert_array_equal(x.grad, np.ones(3))


def test_backward_twice_doubles_grads():
    x = Tensor([0.3, -1.2], requires_grad=True)
    w = Tensor([[0.5, 2.0]], requires_grad=True)
    b = Tensor([0.1], requires_grad=True)

    def loss():
        return F.sigmoid(F.fully_connected(x, w, b)).sum()

    backward(loss())
    first = w.grad.copy(), x.grad.copy(), b.grad.copy()
    backward(loss())
    for g1, g2 in zip(first, (w.grad, x.grad, b.grad)):
        np.testing.assert_array_equal(g2, 2 * g1)


def test_non_scalar_seed_is_usage_error():
    x = Tensor([1.0, 2.0], requires_grad=True)
    with pytest.raises(UsageError):
        backward(x * 2.0)


def test_backward_without_grad_is_usage_error():
    with pytest.raises(UsageError):
        backward(Tensor(1.0))


def test_single_weight_sigmoid_matches_finite_difference():
    x = np.array([0.7, -1.3, 0.4])
    w = Tensor([[0.2, 0.5, -0.9]], requires_grad=True)
    b = Tensor([0.0])

    def f(_):
        return F.sigmoid(F.fully_connected(Tensor(x), w, b)).sum()

    backward(f(w))
    numeric = finite_diff_grad(f, w, 1e-6)
    assert relative_error(w.grad, numeric) < 1e-6


def test_topological_order_visits_each_node_once_parents_first():
    a = Tensor([1.0, 2.0], requires_grad=True)
    b = a * 2.0
    c = a + b
    d = (b * c).sum()
    order = topological_order(d)
    assert len(order) == len({id(n) for n in order})
    pos = {id(n): i for i, n in enumerate(order)}
    for node in order:
        for parent in node._parents:
            assert pos[id(parent)] < pos[id(node)]


def test_shared_subexpression_gradient():
    # d/da sum(a * (a + 2a)) = 6a
    a = Tensor([1.0, -2.0], requires_grad=True)
    b = a * 2.0
    backward((a * (a + b)).sum())
    np.testing.assert_allclose(a.grad, 6 * a.data, rtol=0, atol=1e-15)


def test_broadcast_arithmetic_gradients():
    x = Tensor(np.ones((2, 3)), requires_grad=True)
    s = Tensor([2.0, 3.0, 4.0], requires_grad=True)
    backward((x * s - s).sum())
    np.testing.assert_array_equal(x.grad, np.tile([2.0, 3.0, 4.0], (2, 1)))
    np.testing.assert_array_equal(s.grad, [0.0, 0.0, 0.0])


def test_finite_diff_sum_of_squares():
    x = Tensor([1.0, 2.0])
    g = finite_diff_grad(lambda t: (t * t).sum(), x, 1e-5)
    np.testing.assert_allclose(g, [2.0, 4.0], atol=1e-8)
    np.testing.assert_array_equal(x.data, [1.0, 2.0])


def test_finite_diff_relu_sum_away_from_kinks():
    # dyadic point and step keep every perturbation exactly representable
    x = Tensor([1.5, -0.5, 2.0, -3.0])
    g = finite_diff_grad(lambda t: F.relu(t).sum(), x, 2.0**-16)
    np.testing.assert_array_equal(g, [1.0, 0.0, 1.0, 0.0])


def test_finite_diff_rejects_nonpositive_eps():
    with pytest.raises(ValueError):
        finite_diff_grad(lambda t: t.sum(), Tensor([1.0]), 0.0)
