import numpy as np
import pytest

from ribforge.core.errors import ShapeError
from ribforge.tensor import (
    Tensor,
    backward,
    conv2d,
    conv_output_extent,
    conv_transpose2d,
    global_avg_pool,
    pool2d,
    upsample_bilinear,
)


def naive_conv2d(x, w, stride=1, padding=0, dilation=1):
    N, C, H, W = x.shape
    Co, _, kh, kw = w.shape
    xp = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    Ho = conv_output_extent(H, kh, stride, padding, dilation)
    Wo = conv_output_extent(W, kw, stride, padding, dilation)
    out = np.zeros((N, Co, Ho, Wo))
    for n in range(N):
        for o in range(Co):
            for i in range(Ho):
                for j in range(Wo):
                    acc = 0.0
                    for c in range(C):
                        for a in range(kh):
                            for b in range(kw):
                                acc += w[o, c, a, b] * xp[n, c, i * stride + a * dilation, j * stride + b * dilation]
                    out[n, o, i, j] = acc
    return out


def t64(a, grad=False):
    return Tensor(np.asarray(a, dtype=np.float64), requires_grad=grad, dtype=np.float64)


@pytest.mark.parametrize("stride,padding,dilation", [(1, 0, 1), (1, 1, 1), (2, 1, 1), (1, 2, 2), (2, 2, 2)])
def test_conv2d_matches_naive_loops(rng, stride, padding, dilation):
    x = rng.normal(size=(2, 3, 7, 6))
    w = rng.normal(size=(4, 3, 3, 3))
    out = conv2d(t64(x), t64(w), stride=stride, padding=padding, dilation=dilation).data
    np.testing.assert_allclose(out, naive_conv2d(x, w, stride, padding, dilation), rtol=1e-10, atol=1e-12)


def test_identity_kernel_reproduces_input(rng):
    x = rng.normal(size=(1, 2, 5, 5))
    w = np.zeros((2, 2, 3, 3))
    w[0, 0, 1, 1] = w[1, 1, 1, 1] = 1.0
    out = conv2d(t64(x), t64(w), padding=1).data
    np.testing.assert_allclose(out, x)


def test_conv2d_bias_and_shape_errors(rng):
    x = t64(rng.normal(size=(1, 2, 4, 4)))
    w = t64(rng.normal(size=(3, 2, 3, 3)))
    out = conv2d(x, w, t64([1.0, 2.0, 3.0]))
    np.testing.assert_allclose(out.data - conv2d(x, w).data, np.broadcast_to(np.array([1.0, 2.0, 3.0])[None, :, None, None], out.shape))
    with pytest.raises(ShapeError):
        conv2d(x, t64(rng.normal(size=(3, 5, 3, 3))))
    with pytest.raises(ShapeError):
        conv2d(x, w, t64([1.0]))
    with pytest.raises(ShapeError):
        conv2d(t64(np.ones((1, 2, 2, 2))), t64(np.ones((1, 2, 5, 5))))


def test_conv_transpose_output_extent():
    x = t64(np.ones((1, 3, 5, 4)))
    w = t64(np.ones((3, 2, 4, 4)))
    out = conv_transpose2d(x, w, stride=2, padding=1)
    assert out.shape == (1, 2, 10, 8)
    out = conv_transpose2d(x, w, stride=2, padding=1, output_padding=1)
    assert out.shape == (1, 2, 11, 9)


def test_adjoint_identity_over_random_shapes():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        N = int(rng.integers(1, 3))
        Ci, Co = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        k = int(rng.integers(1, 4))
        stride = int(rng.integers(1, 3))
        padding = int(rng.integers(0, k))
        dilation = int(rng.integers(1, 3))
        H = int(rng.integers(dilation * (k - 1) + 1, 9))
        W = int(rng.integers(dilation * (k - 1) + 1, 9))
        x = rng.normal(size=(N, Ci, H, W))
        w = rng.normal(size=(Co, Ci, k, k))
        y_fwd = conv2d(t64(x), t64(w), stride=stride, padding=padding, dilation=dilation).data
        y = rng.normal(size=y_fwd.shape)
        # conv_transpose2d reads weights as [in, out, kh, kw]: here in = Co
        out_h = (y.shape[2] - 1) * stride - 2 * padding + dilation * (k - 1) + 1
        out_w = (y.shape[3] - 1) * stride - 2 * padding + dilation * (k - 1) + 1
        back = conv_transpose2d(
            t64(y), t64(w), stride=stride, padding=padding,
            output_padding=(H - out_h, W - out_w), dilation=dilation,
        ).data
        lhs = float(np.sum(y_fwd * y))
        rhs = float(np.sum(x * back))
        assert abs(lhs - rhs) <= 1e-4 * max(abs(lhs), abs(rhs), 1.0)


def test_conv_input_gradient_is_the_transpose(rng):
    x = t64(rng.normal(size=(1, 2, 6, 6)), grad=True)
    w = t64(rng.normal(size=(3, 2, 3, 3)))
    g = rng.normal(size=(1, 3, 3, 3))
    out = conv2d(x, w, stride=2, padding=1)
    backward((out * t64(g)).sum())
    expected = conv_transpose2d(t64(g), w, stride=2, padding=1, output_padding=1).data
    np.testing.assert_allclose(x.grad, expected, rtol=1e-10, atol=1e-12)


def test_max_pool_routes_gradient_to_first_argmax():
    x = t64(np.array([[[[1.0, 3.0], [3.0, 0.0]]]]), grad=True)
    out = pool2d("max", x, 2)
    assert out.data.item() == 3.0
    backward(out.sum())
    np.testing.assert_array_equal(x.grad, [[[[0.0, 1.0], [0.0, 0.0]]]])


def test_avg_and_global_pool(rng):
    x = rng.normal(size=(2, 3, 4, 4))
    avg = pool2d("avg", t64(x), 2).data
    np.testing.assert_allclose(avg, x.reshape(2, 3, 2, 2, 2, 2).mean(axis=(3, 5)))
    np.testing.assert_allclose(global_avg_pool(t64(x)).data[..., 0, 0], x.mean(axis=(2, 3)))
    with pytest.raises(ShapeError):
        pool2d("median", t64(x), 2)
    with pytest.raises(ShapeError):
        pool2d("max", t64(x), 5)


def test_upsample_same_size_is_identity_and_constants_survive(rng):
    x = rng.normal(size=(1, 2, 3, 5))
    np.testing.assert_allclose(upsample_bilinear(t64(x), 3, 5).data, x)
    const = np.full((1, 1, 3, 3), 0.25)
    np.testing.assert_allclose(upsample_bilinear(t64(const), 7, 6).data, 0.25)
    np.testing.assert_allclose(upsample_bilinear(t64(const), 6, 6, align_corners=True).data, 0.25)
    with pytest.raises(ShapeError):
        upsample_bilinear(t64(x), 0, 4)
