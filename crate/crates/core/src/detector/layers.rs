//! Per-example tensor kernels. All tensors are dense, channel-major.

use super::real::Real;

/// Unfolds a `channels x height x width` input into a
/// `(channels * k * k) x (out_h * out_w)` matrix for a valid, stride-1
/// convolution with a `k x k` kernel.
pub(crate) fn im2col<T: Real>(
    input: &[T],
    channels: usize,
    height: usize,
    width: usize,
    k: usize,
    cols: &mut [T],
) {
    let (oh, ow) = (height - k + 1, width - k + 1);
    let p = oh * ow;
    debug_assert_eq!(cols.len(), channels * k * k * p);
    for c in 0..channels {
        let plane = &input[c * height * width..(c + 1) * height * width];
        for ky in 0..k {
            for kx in 0..k {
                let row = (c * k + ky) * k + kx;
                let dst = &mut cols[row * p..(row + 1) * p];
                for oy in 0..oh {
                    let src = &plane[(oy + ky) * width + kx..(oy + ky) * width + kx + ow];
                    dst[oy * ow..(oy + 1) * ow].copy_from_slice(src);
                }
            }
        }
    }
}

/// [`im2col`] in transposed, pixel-major layout: `(out_h * out_w) x
/// (channels * k * k)`. Weight gradients multiply against this form without
/// a strided operand.
pub(crate) fn im2col_t<T: Real>(
    input: &[T],
    channels: usize,
    height: usize,
    width: usize,
    k: usize,
    cols: &mut [T],
) {
    let (oh, ow) = (height - k + 1, width - k + 1);
    let rows = channels * k * k;
    debug_assert_eq!(cols.len(), rows * oh * ow);
    for (pix, dst) in cols.chunks_exact_mut(rows).enumerate() {
        let (oy, ox) = (pix / ow, pix % ow);
        for (seg, d) in dst.chunks_exact_mut(k).enumerate() {
            let (c, ky) = (seg / k, seg % k);
            let src = &input[c * height * width + (oy + ky) * width + ox..][..k];
            for (d, &s) in d.iter_mut().zip(src) {
                *d = s;
            }
        }
    }
}

/// Adjoint of [`im2col`]: accumulates column gradients back onto the input.
pub(crate) fn col2im<T: Real>(
    cols: &[T],
    channels: usize,
    height: usize,
    width: usize,
    k: usize,
    grad_input: &mut [T],
) {
    let (oh, ow) = (height - k + 1, width - k + 1);
    let p = oh * ow;
    for c in 0..channels {
        let plane = &mut grad_input[c * height * width..(c + 1) * height * width];
        for ky in 0..k {
            for kx in 0..k {
                let row = (c * k + ky) * k + kx;
                let src = &cols[row * p..(row + 1) * p];
                for oy in 0..oh {
                    let dst = &mut plane[(oy + ky) * width + kx..(oy + ky) * width + kx + ow];
                    for (d, &s) in dst.iter_mut().zip(&src[oy * ow..(oy + 1) * ow]) {
                        *d += s;
                    }
                }
            }
        }
    }
}

/// Adds `bias[c]` to every element of output channel `c` and rectifies.
pub(crate) fn bias_relu<T: Real>(out: &mut [T], bias: &[T], plane: usize) {
    for (c, &b) in bias.iter().enumerate() {
        for v in &mut out[c * plane..(c + 1) * plane] {
            *v = (*v + b).max(T::zero());
        }
    }
}

/// 2x2, stride-2 max pool with floor semantics. Records the flat input index
/// of each winner; ties go to the first element in row-major window order.
pub(crate) fn maxpool2<T: Real>(
    input: &[T],
    channels: usize,
    height: usize,
    width: usize,
    out: &mut [T],
    argmax: &mut [u32],
) {
    let (oh, ow) = (height / 2, width / 2);
    for c in 0..channels {
        let base = c * height * width;
        for oy in 0..oh {
            for ox in 0..ow {
                let i0 = base + 2 * oy * width + 2 * ox;
                let mut best = i0;
                for idx in [i0 + 1, i0 + width, i0 + width + 1] {
                    if input[idx] > input[best] {
                        best = idx;
                    }
                }
                let o = (c * oh + oy) * ow + ox;
                out[o] = input[best];
                argmax[o] = best as u32;
            }
        }
    }
}

/// Routes pooled gradients to their argmax positions, masked by the
/// rectifier that fed the pool (`pooled > 0`).
pub(crate) fn maxpool2_relu_backward<T: Real>(
    grad_out: &[T],
    pooled: &[T],
    argmax: &[u32],
    grad_in: &mut [T],
) {
    grad_in.iter_mut().for_each(|g| *g = T::zero());
    for ((&g, &v), &idx) in grad_out.iter().zip(pooled).zip(argmax) {
        if v > T::zero() {
            grad_in[idx as usize] += g;
        }
    }
}

/// `out[i] = sum_j m[i * cols + j]`.
pub(crate) fn add_row_sums<T: Real>(m: &[T], cols: usize, out: &mut [T]) {
    for (o, row) in out.iter_mut().zip(m.chunks_exact(cols)) {
        *o += row.iter().copied().sum::<T>();
    }
}

/// `out[j] += sum_i m[i * cols + j]`.
pub(crate) fn add_col_sums<T: Real>(m: &[T], cols: usize, out: &mut [T]) {
    for row in m.chunks_exact(cols) {
        for (o, &v) in out.iter_mut().zip(row) {
            *o += v;
        }
    }
}

/// Dot product with eight independent accumulators so the loop vectorizes.
pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let tail: T = ca.remainder().iter().zip(cb.remainder()).map(|(&x, &y)| x * y).sum();
    let mut acc = [T::zero(); 8];
    for (x, y) in ca.zip(cb) {
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    let pairs = [acc[0] + acc[4], acc[1] + acc[5], acc[2] + acc[6], acc[3] + acc[7]];
    (pairs[0] + pairs[2]) + (pairs[1] + pairs[3]) + tail
}

/// `y += alpha * x`.
pub(crate) fn axpy<T: Real>(alpha: T, x: &[T], y: &mut [T]) {
    for (y, &x) in y.iter_mut().zip(x) {
        *y += alpha * x;
    }
}

/// Fully connected layer on a small batch: `out[b][o] = x[b] . w[o]`.
/// Streams each weight row once, which beats a packed GEMM when the batch is
/// far narrower than the weight matrix.
pub(crate) fn dense<T: Real>(x: &[T], batch: usize, w: &[T], out_width: usize) -> Vec<T> {
    let in_width = x.len() / batch;
    let mut out = vec![T::zero(); batch * out_width];
    for (o, row) in w.chunks_exact(in_width).enumerate() {
        for (b, xb) in x.chunks_exact(in_width).enumerate() {
            out[b * out_width + o] = dot(xb, row);
        }
    }
    out
}

/// Input gradient of [`dense`]: `dx[b] = sum_o dy[b][o] w[o]`.
pub(crate) fn dense_input_grad<T: Real>(dy: &[T], batch: usize, w: &[T], in_width: usize) -> Vec<T> {
    let out_width = dy.len() / batch;
    let mut dx = vec![T::zero(); batch * in_width];
    for (o, row) in w.chunks_exact(in_width).enumerate() {
        for (b, dxb) in dx.chunks_exact_mut(in_width).enumerate() {
            let g = dy[b * out_width + o];
            if g != T::zero() {
                axpy(g, row, dxb);
            }
        }
    }
    dx
}

/// Weight gradient of [`dense`]: `dw[o] += sum_b dy[b][o] x[b]`.
pub(crate) fn dense_weight_grad<T: Real>(dy: &[T], batch: usize, x: &[T], dw: &mut [T]) {
    let in_width = x.len() / batch;
    let out_width = dy.len() / batch;
    for (o, row) in dw.chunks_exact_mut(in_width).enumerate() {
        for (b, xb) in x.chunks_exact(in_width).enumerate() {
            let g = dy[b * out_width + o];
            if g != T::zero() {
                axpy(g, xb, row);
            }
        }
    }
}
