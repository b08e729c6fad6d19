import threading
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from ribforge.core.errors import BackwardError, ShapeError, TensorError
from ribforge.tensor import (
    Tensor,
    add,
    backward,
    concat,
    create,
    matmul,
    is_grad_enabled,
    no_grad,
    pad2d,
    slice_,
    softmax,
)


def test_create_is_deterministic_per_seed():
    a = create((3, 4), "normal", seed=5)
    b = create((3, 4), "normal", seed=5)
    c = create((3, 4), "normal", seed=6)
    assert a.data.tobytes() == b.data.tobytes()
    assert not np.array_equal(a.data, c.data)
    assert a.dtype == np.float32


def test_create_rejects_bad_requests():
    with pytest.raises(TensorError):
        create((2, -1))
    with pytest.raises(TensorError):
        create((2, 2), "uniform")
    with pytest.raises(TensorError):
        create((2, 2), "bogus")
    with pytest.raises(TensorError):
        create((2**20, 2**20))


def test_broadcast_gradient_is_summed_back():
    a = Tensor(np.ones((2, 3)), requires_grad=True)
    b = Tensor(np.ones((1, 3)), requires_grad=True)
    backward(add(a, b).sum())
    np.testing.assert_array_equal(a.grad, np.ones((2, 3)))
    np.testing.assert_array_equal(b.grad, np.full((1, 3), 2.0))


def test_incompatible_broadcast_raises():
    with pytest.raises(ShapeError):
        add(Tensor(np.ones((2, 3))), Tensor(np.ones((4, 3))))


def test_reused_tensor_accumulates_gradient():
    x = Tensor(np.array([1.0, 2.0, 3.0]), requires_grad=True)
    y = (x * x + x * 3.0).sum()
    backward(y)
    np.testing.assert_allclose(x.grad, 2 * x.data + 3.0)


def test_grads_accumulate_across_backward_calls():
    x = Tensor(np.array([1.0, -2.0]), requires_grad=True)
    backward((x * 2.0).sum())
    backward((x * 2.0).sum())
    np.testing.assert_allclose(x.grad, [4.0, 4.0])


def test_backward_twice_through_same_graph_raises():
    x = Tensor(np.array([1.0, 2.0]), requires_grad=True)
    loss = (x * x).sum()
    backward(loss)
    with pytest.raises(BackwardError):
        backward(loss)


def test_backward_needs_scalar_tracked_loss():
    x = Tensor(np.ones(3), requires_grad=True)
    with pytest.raises(BackwardError):
        backward(x * 2.0)
    with pytest.raises(BackwardError):
        backward(Tensor(np.ones(1)))


def test_no_grad_records_nothing():
    x = Tensor(np.ones(3), requires_grad=True)
    with no_grad():
        y = x * 2.0
    assert not y.requires_grad
    assert y._node is None
    assert (x * 2.0).requires_grad


def test_node_sequence_is_unique_across_threads():
    def build(_):
        x = Tensor(np.ones(4), requires_grad=True)
        outputs = []
        for _ in range(50):
            x = x * 1.5
            outputs.append(x._node.seq)
        return outputs

    with ThreadPoolExecutor(max_workers=4) as pool:
        runs = list(pool.map(build, range(8)))
    seqs = [s for run in runs for s in run]
    assert len(set(seqs)) == len(seqs)
    assert all(run == sorted(run) for run in runs)


def test_no_grad_is_per_thread():
    inside = threading.Event()
    checked = threading.Event()
    seen = {}

    def worker():
        with no_grad():
            inside.set()
            checked.wait(timeout=5)
            seen["worker"] = is_grad_enabled()

    thread = threading.Thread(target=worker)
    thread.start()
    assert inside.wait(timeout=5)
    seen["main"] = is_grad_enabled()
    checked.set()
    thread.join()
    assert seen == {"main": True, "worker": False}


def test_detach_cuts_the_graph():
    x = Tensor(np.ones(2), requires_grad=True)
    d = (x * 3.0).detach()
    assert not d.requires_grad
    np.testing.assert_array_equal(d.data, [3.0, 3.0])


def test_matmul_batched_gradients():
    rng = np.random.default_rng(0)
    a = Tensor(rng.normal(size=(2, 3, 4)), requires_grad=True, dtype=np.float64)
    b = Tensor(rng.normal(size=(4, 5)), requires_grad=True, dtype=np.float64)
    backward(matmul(a, b).sum())
    np.testing.assert_allclose(a.grad, np.ones((2, 3, 5)) @ b.data.T)
    np.testing.assert_allclose(b.grad, np.einsum("nij,nik->jk", a.data, np.ones((2, 3, 5))))


def test_matmul_shape_mismatch():
    with pytest.raises(ShapeError):
        matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((4, 2))))


def test_softmax_rows_sum_to_one_and_are_stable():
    x = Tensor(np.array([[1000.0, 1001.0, 1002.0], [-5.0, 0.0, 5.0]]))
    out = softmax(x, axis=-1).data
    assert np.all(np.isfinite(out))
    np.testing.assert_allclose(out.sum(axis=-1), 1.0, rtol=1e-6)


def test_concat_and_slice_route_gradients():
    a = Tensor(np.ones((1, 2, 2)), requires_grad=True)
    b = Tensor(np.ones((1, 3, 2)), requires_grad=True)
    out = concat([a, b], axis=1)
    assert out.shape == (1, 5, 2)
    backward(slice_(out, (slice(None), slice(1, 3))).sum())
    np.testing.assert_array_equal(a.grad, [[[0, 0], [1, 1]]])
    np.testing.assert_array_equal(b.grad, [[[1, 1], [0, 0], [0, 0]]])


def test_replicate_padding_keeps_constant_fields_constant():
    x = Tensor(np.full((1, 1, 3, 3), 0.7))
    out = pad2d(x, 2, mode="replicate")
    assert out.shape == (1, 1, 7, 7)
    np.testing.assert_allclose(out.data, 0.7)


def test_zero_padding_and_unknown_mode():
    x = Tensor(np.ones((1, 1, 2, 2)))
    out = pad2d(x, (1, 0, 0, 1))
    assert out.shape == (1, 1, 3, 3)
    assert out.data.sum() == 4
    with pytest.raises(TensorError):
        pad2d(x, 1, mode="reflect")
