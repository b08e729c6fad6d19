"""
Convolution, pooling and resampling kernels.

Convolutions are lowered to im2col: a strided window view of the padded input
is contracted against the kernel with ``np.tensordot`` (one BLAS call per
pass). col2im is the matching scatter-add over kernel taps. Each output
element is a single contraction with a fixed reduction order.
"""
from typing import Optional, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import as_strided

from ribforge.core.errors import ShapeError
from .tensor import Tensor, make_result

IntPair = Union[int, Tuple[int, int]]


def _pair(v: IntPair) -> Tuple[int, int]:
    return (v, v) if isinstance(v, int) else (int(v[0]), int(v[1]))


def conv_output_extent(size: int, kernel: int, stride: int, padding: int, dilation: int = 1) -> int:
    return (size + 2 * padding - dilation * (kernel - 1) - 1) // stride + 1


def _windows(xp: np.ndarray, kh: int, kw: int, sh: int, sw: int, dh: int, dw: int, Ho: int, Wo: int) -> np.ndarray:
    """Strided view [N, C, kh, kw, Ho, Wo] over a padded [N, C, Hp, Wp] array"""
    N, C = xp.shape[:2]
    sN, sC, sH, sW = xp.strides
    return as_strided(
        xp,
        shape=(N, C, kh, kw, Ho, Wo),
        strides=(sN, sC, sH * dh, sW * dw, sH * sh, sW * sw),
        writeable=False,
    )


def _col2im(cols: np.ndarray, padded_shape, kh, kw, sh, sw, dh, dw) -> np.ndarray:
    """Scatter-add [N, C, kh, kw, Ho, Wo] taps into a zero array of ``padded_shape``"""
    out = np.zeros(padded_shape, dtype=cols.dtype)
    Ho, Wo = cols.shape[-2:]
    for i in range(kh):
        r0 = i * dh
        for j in range(kw):
            c0 = j * dw
            out[:, :, r0:r0 + sh * (Ho - 1) + 1:sh, c0:c0 + sw * (Wo - 1) + 1:sw] += cols[:, :, i, j]
    return out


def conv2d(
    x: Tensor,
    weight: Tensor,
    bias: Optional[Tensor] = None,
    stride: IntPair = 1,
    padding: IntPair = 0,
    dilation: IntPair = 1,
) -> Tensor:
    """2-D cross-correlation: x [N,Cin,H,W], weight [Cout,Cin,kh,kw] -> [N,Cout,H',W']"""
    if x.ndim != 4 or weight.ndim != 4:
        raise ShapeError(f"conv2d expects 4-D input and weight, got {x.shape} and {weight.shape}")
    N, C, H, W = x.shape
    Co, Ci, kh, kw = weight.shape
    if Ci != C:
        raise ShapeError(f"conv2d channel mismatch: input has {C}, weight expects {Ci}")
    sh, sw = _pair(stride)
    ph, pw = _pair(padding)
    dh, dw = _pair(dilation)
    Ho = conv_output_extent(H, kh, sh, ph, dh)
    Wo = conv_output_extent(W, kw, sw, pw, dw)
    if Ho < 1 or Wo < 1:
        raise ShapeError(f"conv2d output extent {Ho}x{Wo} is not positive for input {H}x{W}")
    xp = np.pad(x.data, ((0, 0), (0, 0), (ph, ph), (pw, pw))) if (ph or pw) else x.data
    xp = np.ascontiguousarray(xp)
    cols = _windows(xp, kh, kw, sh, sw, dh, dw, Ho, Wo)
    out = np.tensordot(weight.data, cols, axes=([1, 2, 3], [1, 2, 3]))  # [Co, N, Ho, Wo]
    out = np.ascontiguousarray(out.transpose(1, 0, 2, 3))
    if bias is not None:
        if bias.shape != (Co,):
            raise ShapeError(f"conv2d bias shape {bias.shape} != ({Co},)")
        out = out + bias.data.reshape(1, Co, 1, 1)

    inputs = (x, weight) if bias is None else (x, weight, bias)

    def backward(g):
        gx = gw = gb = None
        if x.requires_grad:
            dcols = np.tensordot(weight.data, g, axes=([0], [1]))  # [Ci, kh, kw, N, Ho, Wo]
            dcols = dcols.transpose(3, 0, 1, 2, 4, 5)
            dxp = _col2im(dcols, xp.shape, kh, kw, sh, sw, dh, dw)
            gx = np.ascontiguousarray(dxp[:, :, ph:ph + H, pw:pw + W])
        if weight.requires_grad:
            gw = np.tensordot(g, cols, axes=([0, 2, 3], [0, 4, 5]))  # [Co, Ci, kh, kw]
        if bias is not None and bias.requires_grad:
            gb = g.sum(axis=(0, 2, 3))
        return (gx, gw) if bias is None else (gx, gw, gb)

    return make_result(out, inputs, backward, "conv2d")


def conv_transpose2d(
    x: Tensor,
    weight: Tensor,
    bias: Optional[Tensor] = None,
    stride: IntPair = 1,
    padding: IntPair = 0,
    output_padding: IntPair = 0,
    dilation: IntPair = 1,
) -> Tensor:
    """Adjoint of conv2d: x [N,Cin,H,W], weight [Cin,Cout,kh,kw] -> [N,Cout,H',W']

    H' = (H-1)*stride - 2*padding + dilation*(kh-1) + 1 + output_padding.
    """
    if x.ndim != 4 or weight.ndim != 4:
        raise ShapeError(f"conv_transpose2d expects 4-D input and weight, got {x.shape} and {weight.shape}")
    N, C, H, W = x.shape
    Ci, Co, kh, kw = weight.shape
    if Ci != C:
        raise ShapeError(f"conv_transpose2d channel mismatch: input has {C}, weight expects {Ci}")
    sh, sw = _pair(stride)
    ph, pw = _pair(padding)
    oph, opw = _pair(output_padding)
    dh, dw = _pair(dilation)
    Ho = (H - 1) * sh - 2 * ph + dh * (kh - 1) + 1 + oph
    Wo = (W - 1) * sw - 2 * pw + dw * (kw - 1) + 1 + opw
    if Ho < 1 or Wo < 1:
        raise ShapeError(f"conv_transpose2d output extent {Ho}x{Wo} is not positive")
    padded_shape = (N, Co, Ho + 2 * ph, Wo + 2 * pw)
    cols = np.tensordot(weight.data, x.data, axes=([0], [1]))  # [Co, kh, kw, N, H, W]
    cols = cols.transpose(3, 0, 1, 2, 4, 5)
    outp = _col2im(cols, padded_shape, kh, kw, sh, sw, dh, dw)
    out = np.ascontiguousarray(outp[:, :, ph:ph + Ho, pw:pw + Wo])
    if bias is not None:
        if bias.shape != (Co,):
            raise ShapeError(f"conv_transpose2d bias shape {bias.shape} != ({Co},)")
        out = out + bias.data.reshape(1, Co, 1, 1)

    inputs = (x, weight) if bias is None else (x, weight, bias)

    def backward(g):
        gp = np.zeros(padded_shape, dtype=g.dtype)
        gp[:, :, ph:ph + Ho, pw:pw + Wo] = g
        gcols = _windows(gp, kh, kw, sh, sw, dh, dw, H, W)  # [N, Co, kh, kw, H, W]
        gx = gw = gb = None
        if x.requires_grad:
            gx = np.tensordot(gcols, weight.data, axes=([1, 2, 3], [1, 2, 3]))  # [N, H, W, Ci]
            gx = np.ascontiguousarray(gx.transpose(0, 3, 1, 2))
        if weight.requires_grad:
            gw = np.tensordot(x.data, gcols, axes=([0, 2, 3], [0, 4, 5]))  # [Ci, Co, kh, kw]
        if bias is not None and bias.requires_grad:
            gb = g.sum(axis=(0, 2, 3))
        return (gx, gw) if bias is None else (gx, gw, gb)

    return make_result(out, inputs, backward, "conv_transpose2d")


def pool2d(kind: str, x: Tensor, kernel: IntPair, stride: Optional[IntPair] = None, padding: IntPair = 0) -> Tensor:
    """Max or average pooling; max routes gradient to the first argmax in row-major order"""
    if x.ndim != 4:
        raise ShapeError(f"pool2d expects 4-D input, got {x.shape}")
    N, C, H, W = x.shape
    kh, kw = _pair(kernel)
    sh, sw = _pair(stride if stride is not None else kernel)
    ph, pw = _pair(padding)
    if kh > H + 2 * ph or kw > W + 2 * pw:
        raise ShapeError(f"pool kernel {kh}x{kw} larger than padded input {H + 2 * ph}x{W + 2 * pw}")
    Ho = conv_output_extent(H, kh, sh, ph)
    Wo = conv_output_extent(W, kw, sw, pw)
    if kind == "max":
        fill = -np.inf
    elif kind == "avg":
        fill = 0.0
    else:
        raise ShapeError(f"unknown pool kind '{kind}'")
    xp = np.pad(x.data, ((0, 0), (0, 0), (ph, ph), (pw, pw)), constant_values=fill) if (ph or pw) else x.data
    xp = np.ascontiguousarray(xp)
    win = _windows(xp, kh, kw, sh, sw, 1, 1, Ho, Wo)  # [N, C, kh, kw, Ho, Wo]

    if kind == "max":
        flat = win.transpose(0, 1, 4, 5, 2, 3).reshape(N, C, Ho, Wo, kh * kw)
        arg = flat.argmax(axis=-1)
        out = np.take_along_axis(flat, arg[..., None], axis=-1)[..., 0]

        def backward(g):
            taps = np.zeros((N, C, Ho, Wo, kh * kw), dtype=g.dtype)
            np.put_along_axis(taps, arg[..., None], g[..., None], axis=-1)
            taps = taps.reshape(N, C, Ho, Wo, kh, kw).transpose(0, 1, 4, 5, 2, 3)
            gp = _col2im(taps, xp.shape, kh, kw, sh, sw, 1, 1)
            return (np.ascontiguousarray(gp[:, :, ph:ph + H, pw:pw + W]),)
    else:
        area = x.dtype.type(kh * kw)
        out = win.sum(axis=(2, 3)) / area

        def backward(g):
            taps = np.broadcast_to((g / area)[:, :, None, None], (N, C, kh, kw, Ho, Wo))
            gp = _col2im(taps, xp.shape, kh, kw, sh, sw, 1, 1)
            return (np.ascontiguousarray(gp[:, :, ph:ph + H, pw:pw + W]),)

    return make_result(np.ascontiguousarray(out), (x,), backward, f"{kind}_pool2d")


def global_avg_pool(x: Tensor) -> Tensor:
    """[N,C,H,W] -> [N,C,1,1]"""
    N, C, H, W = x.shape
    area = x.dtype.type(H * W)
    out = x.data.sum(axis=(2, 3), keepdims=True) / area

    def backward(g):
        return (np.broadcast_to(g / area, x.shape).copy(),)

    return make_result(out, (x,), backward, "global_avg_pool")


def _interp_matrix(size_in: int, size_out: int, align_corners: bool, dtype) -> np.ndarray:
    """Row i holds the bilinear weights of output index i over the input axis"""
    if size_out == size_in and not align_corners:
        return np.eye(size_in, dtype=dtype)
    dst = np.arange(size_out, dtype=np.float64)
    if align_corners:
        scale = (size_in - 1) / (size_out - 1) if size_out > 1 else 0.0
        src = dst * scale
    else:
        src = (dst + 0.5) * (size_in / size_out) - 0.5
        src = np.maximum(src, 0.0)
    i0 = np.minimum(np.floor(src).astype(np.int64), size_in - 1)
    i1 = np.minimum(i0 + 1, size_in - 1)
    lam = src - i0
    m = np.zeros((size_out, size_in), dtype=np.float64)
    rows = np.arange(size_out)
    np.add.at(m, (rows, i0), 1.0 - lam)
    np.add.at(m, (rows, i1), lam)
    return m.astype(dtype)


def upsample_bilinear(x: Tensor, out_h: int, out_w: int, align_corners: bool = False) -> Tensor:
    """Bilinear resize of the trailing two axes (half-pixel centers by default)"""
    if out_h < 1 or out_w < 1:
        raise ShapeError(f"upsample target {out_h}x{out_w} must be positive")
    H, W = x.shape[-2:]
    Ah = _interp_matrix(H, out_h, align_corners, x.dtype)
    Aw = _interp_matrix(W, out_w, align_corners, x.dtype)
    out = np.matmul(np.matmul(Ah, x.data), Aw.T)

    def backward(g):
        return (np.matmul(np.matmul(Ah.T, g), Aw),)

    return make_result(out, (x,), backward, "upsample_bilinear")
