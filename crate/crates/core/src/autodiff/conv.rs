//! GEMM-backed convolution kernels.
//!
//! Layouts (all row-major):
//! - `conv2d`: x `[N,C,H,W]`, w `[F,C,k,k]` -> y `[N,F,Ho,Wo]` with
//!   `Ho = (H + 2p - k)/s + 1`.
//! - `conv2d_transpose`: x `[N,C,H,W]`, w `[C,F,k,k]` -> y `[N,F,Ho,Wo]` with
//!   `Ho = (H - 1)*s - 2p + k`; this is the adjoint of `conv2d` with the same
//!   stride/pad geometry.
//!
//! Forward passes and input gradients parallelize over the batch axis; each
//! sample writes a disjoint output slice, so results are bit-identical
//! regardless of thread count. Weight gradients accumulate sequentially over
//! the batch to keep the summation order fixed.

use rayon::prelude::*;

use super::tensor::Tensor;
use crate::error::{Error, Result};

/// c = alpha * op(a) * op(b) + beta * c, row-major, op = transpose when flagged.
/// `a` is (m x k) before transposition, `b` is (k x n) before transposition.
pub(crate) fn gemm(
    ta: bool,
    tb: bool,
    m: usize,
    k: usize,
    n: usize,
    alpha: f32,
    a: &[f32],
    b: &[f32],
    beta: f32,
    c: &mut [f32],
) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    let (rsa, csa) = if ta { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if tb { (1, k as isize) } else { (n as isize, 1) };
    unsafe {
        matrixmultiply::sgemm(
            m,
            k,
            n,
            alpha,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct ConvGeom {
    pub c_in: usize,
    pub h: usize,
    pub w: usize,
    pub k: usize,
    pub stride: usize,
    pub pad: usize,
    pub ho: usize,
    pub wo: usize,
}

impl ConvGeom {
    fn forward(c_in: usize, h: usize, w: usize, k: usize, stride: usize, pad: usize) -> Result<Self> {
        if k == 0 || stride == 0 {
            return Err(Error::Config("conv kernel and stride must be >= 1".into()));
        }
        if h + 2 * pad < k || w + 2 * pad < k {
            return Err(Error::Dimension {
                axis: 2,
                expected: k,
                actual: h + 2 * pad,
                context: "padded input smaller than kernel".into(),
            });
        }
        let ho = (h + 2 * pad - k) / stride + 1;
        let wo = (w + 2 * pad - k) / stride + 1;
        Ok(Self { c_in, h, w, k, stride, pad, ho, wo })
    }
}

/// Gather padded patches: cols[(c*k+ky)*k+kx, oh*wo+ow] = x[c, oh*s-p+ky, ow*s-p+kx].
fn im2col(x: &[f32], g: &ConvGeom, cols: &mut [f32]) {
    let (k, s, p) = (g.k, g.stride, g.pad);
    let (h, w, ho, wo) = (g.h, g.w, g.ho, g.wo);
    debug_assert_eq!(cols.len(), g.c_in * k * k * ho * wo);
    let mut row = 0;
    for c in 0..g.c_in {
        let plane = &x[c * h * w..(c + 1) * h * w];
        for ky in 0..k {
            for kx in 0..k {
                let dst = &mut cols[row * ho * wo..(row + 1) * ho * wo];
                for oh in 0..ho {
                    let iy = (oh * s + ky) as isize - p as isize;
                    let drow = &mut dst[oh * wo..(oh + 1) * wo];
                    if iy < 0 || iy >= h as isize {
                        drow.fill(0.0);
                        continue;
                    }
                    let src = &plane[iy as usize * w..(iy as usize + 1) * w];
                    for (ow, d) in drow.iter_mut().enumerate() {
                        let ix = (ow * s + kx) as isize - p as isize;
                        *d = if ix >= 0 && ix < w as isize {
                            src[ix as usize]
                        } else {
                            0.0
                        };
                    }
                }
                row += 1;
            }
        }
    }
}

/// Scatter-add patches back: the adjoint of `im2col`.
fn col2im(cols: &[f32], g: &ConvGeom, x: &mut [f32]) {
    let (k, s, p) = (g.k, g.stride, g.pad);
    let (h, w, ho, wo) = (g.h, g.w, g.ho, g.wo);
    debug_assert_eq!(cols.len(), g.c_in * k * k * ho * wo);
    let mut row = 0;
    for c in 0..g.c_in {
        let plane = &mut x[c * h * w..(c + 1) * h * w];
        for ky in 0..k {
            for kx in 0..k {
                let src = &cols[row * ho * wo..(row + 1) * ho * wo];
                for oh in 0..ho {
                    let iy = (oh * s + ky) as isize - p as isize;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    let dst = &mut plane[iy as usize * w..(iy as usize + 1) * w];
                    for (ow, v) in src[oh * wo..(oh + 1) * wo].iter().enumerate() {
                        let ix = (ow * s + kx) as isize - p as isize;
                        if ix >= 0 && ix < w as isize {
                            dst[ix as usize] += v;
                        }
                    }
                }
                row += 1;
            }
        }
    }
}

fn conv_shapes(x: &Tensor, w: &Tensor, stride: usize, pad: usize) -> Result<(usize, usize, ConvGeom)> {
    x.expect_rank(4, "conv2d input")?;
    w.expect_rank(4, "conv2d weights")?;
    let (n, c, h, wd) = (x.shape()[0], x.shape()[1], x.shape()[2], x.shape()[3]);
    let (f, wc, k, k2) = (w.shape()[0], w.shape()[1], w.shape()[2], w.shape()[3]);
    if k != k2 {
        return Err(Error::Dimension {
            axis: 3,
            expected: k,
            actual: k2,
            context: "conv2d kernel must be square".into(),
        });
    }
    if wc != c {
        return Err(Error::Dimension {
            axis: 1,
            expected: c,
            actual: wc,
            context: "conv2d weight channels".into(),
        });
    }
    Ok((n, f, ConvGeom::forward(c, h, wd, k, stride, pad)?))
}

pub(crate) fn conv2d_forward(x: &Tensor, w: &Tensor, stride: usize, pad: usize) -> Result<Tensor> {
    let (n, f, g) = conv_shapes(x, w, stride, pad)?;
    let ckk = g.c_in * g.k * g.k;
    let owo = g.ho * g.wo;
    let mut y = vec![0.0f32; n * f * owo];
    let xs = x.data();
    y.par_chunks_mut(f * owo).enumerate().for_each(|(i, yn)| {
        let mut cols = vec![0.0f32; ckk * owo];
        im2col(&xs[i * g.c_in * g.h * g.w..(i + 1) * g.c_in * g.h * g.w], &g, &mut cols);
        gemm(false, false, f, ckk, owo, 1.0, w.data(), &cols, 0.0, yn);
    });
    Tensor::new(vec![n, f, g.ho, g.wo], y)
}

pub(crate) fn conv2d_backward(
    x: &Tensor,
    w: &Tensor,
    dy: &[f32],
    stride: usize,
    pad: usize,
    dx: &mut [f32],
    dw: &mut [f32],
) -> Result<()> {
    let (n, f, g) = conv_shapes(x, w, stride, pad)?;
    let ckk = g.c_in * g.k * g.k;
    let owo = g.ho * g.wo;
    let plane = g.c_in * g.h * g.w;
    let xs = x.data();

    dx.par_chunks_mut(plane).enumerate().for_each(|(i, dxn)| {
        let mut cols = vec![0.0f32; ckk * owo];
        gemm(true, false, ckk, f, owo, 1.0, w.data(), &dy[i * f * owo..(i + 1) * f * owo], 0.0, &mut cols);
        col2im(&cols, &g, dxn);
    });

    // Weight gradient accumulates in batch order.
    let mut cols = vec![0.0f32; ckk * owo];
    for i in 0..n {
        im2col(&xs[i * plane..(i + 1) * plane], &g, &mut cols);
        gemm(false, true, f, owo, ckk, 1.0, &dy[i * f * owo..(i + 1) * f * owo], &cols, 1.0, dw);
    }
    Ok(())
}

fn convt_shapes(x: &Tensor, w: &Tensor, stride: usize, pad: usize) -> Result<(usize, usize, ConvGeom)> {
    x.expect_rank(4, "conv2d_transpose input")?;
    w.expect_rank(4, "conv2d_transpose weights")?;
    let (n, c, h, wd) = (x.shape()[0], x.shape()[1], x.shape()[2], x.shape()[3]);
    let (wc, f, k, k2) = (w.shape()[0], w.shape()[1], w.shape()[2], w.shape()[3]);
    if k != k2 {
        return Err(Error::Dimension {
            axis: 3,
            expected: k,
            actual: k2,
            context: "conv2d_transpose kernel must be square".into(),
        });
    }
    if wc != c {
        return Err(Error::Dimension {
            axis: 0,
            expected: c,
            actual: wc,
            context: "conv2d_transpose weight channels".into(),
        });
    }
    if (h.saturating_sub(1)) * stride + k < 2 * pad + 1 {
        return Err(Error::Dimension {
            axis: 2,
            expected: 2 * pad + 1,
            actual: (h - 1) * stride + k,
            context: "transpose output collapses to zero extent".into(),
        });
    }
    let ho = (h - 1) * stride + k - 2 * pad;
    let wo = (wd - 1) * stride + k - 2 * pad;
    // The adjoint conv runs from the (ho, wo) grid back to (h, w).
    let g = ConvGeom { c_in: f, h: ho, w: wo, k, stride, pad, ho: h, wo: wd };
    Ok((n, c, g))
}

pub(crate) fn conv2d_transpose_forward(
    x: &Tensor,
    w: &Tensor,
    stride: usize,
    pad: usize,
) -> Result<Tensor> {
    let (n, c, g) = convt_shapes(x, w, stride, pad)?;
    let f = g.c_in;
    let fkk = f * g.k * g.k;
    let hw = g.ho * g.wo; // input spatial size of the transpose op
    let out_plane = f * g.h * g.w;
    let mut y = vec![0.0f32; n * out_plane];
    let xs = x.data();
    y.par_chunks_mut(out_plane).enumerate().for_each(|(i, yn)| {
        let mut cols = vec![0.0f32; fkk * hw];
        gemm(true, false, fkk, c, hw, 1.0, w.data(), &xs[i * c * hw..(i + 1) * c * hw], 0.0, &mut cols);
        col2im(&cols, &g, yn);
    });
    Tensor::new(vec![n, f, g.h, g.w], y)
}

pub(crate) fn conv2d_transpose_backward(
    x: &Tensor,
    w: &Tensor,
    dy: &[f32],
    stride: usize,
    pad: usize,
    dx: &mut [f32],
    dw: &mut [f32],
) -> Result<()> {
    let (n, c, g) = convt_shapes(x, w, stride, pad)?;
    let f = g.c_in;
    let fkk = f * g.k * g.k;
    let hw = g.ho * g.wo;
    let out_plane = f * g.h * g.w;
    let xs = x.data();

    dx.par_chunks_mut(c * hw).enumerate().for_each(|(i, dxn)| {
        let mut cols = vec![0.0f32; fkk * hw];
        im2col(&dy[i * out_plane..(i + 1) * out_plane], &g, &mut cols);
        gemm(false, false, c, fkk, hw, 1.0, w.data(), &cols, 0.0, dxn);
    });

    let mut cols = vec![0.0f32; fkk * hw];
    for i in 0..n {
        im2col(&dy[i * out_plane..(i + 1) * out_plane], &g, &mut cols);
        gemm(false, true, c, hw, fkk, 1.0, &xs[i * c * hw..(i + 1) * c * hw], &cols, 1.0, dw);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tensor(shape: &[usize], data: Vec<f32>) -> Tensor {
        Tensor::new(shape.to_vec(), data).unwrap()
    }

    #[test]
    fn all_ones_kernel_sums_patches() {
        let x = tensor(&[1, 1, 4, 4], (1..=16).map(|v| v as f32).collect());
        let w = tensor(&[1, 1, 2, 2], vec![1.0; 4]);
        let y = conv2d_forward(&x, &w, 2, 0).unwrap();
        assert_eq!(y.shape(), &[1, 1, 2, 2]);
        assert_eq!(y.data(), &[14.0, 22.0, 46.0, 54.0]);
    }

    #[test]
    fn conv_shape_formula() {
        let x = Tensor::zeros(&[1, 3, 32, 32]);
        let w = Tensor::zeros(&[16, 3, 4, 4]);
        let y = conv2d_forward(&x, &w, 2, 1).unwrap();
        assert_eq!(y.shape(), &[1, 16, 16, 16]);
    }

    #[test]
    fn transpose_shape_formula() {
        let x = Tensor::zeros(&[1, 1, 2, 2]);
        let w = Tensor::zeros(&[1, 1, 2, 2]);
        let y = conv2d_transpose_forward(&x, &w, 2, 0).unwrap();
        assert_eq!(y.shape(), &[1, 1, 4, 4]);
    }

    #[test]
    fn rejects_channel_mismatch() {
        let x = Tensor::zeros(&[1, 3, 8, 8]);
        let w = Tensor::zeros(&[4, 2, 3, 3]);
        let err = conv2d_forward(&x, &w, 1, 1).unwrap_err();
        assert!(err.to_string().contains("axis 1"));
    }

    /// <conv(x,w), y> must equal <x, conv_transpose(y, w)>. Conv weights
    /// [F,C,k,k] reinterpret directly as transpose weights [in,out,k,k].
    #[test]
    fn conv_and_transpose_are_adjoint() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        // geometries chosen so (h + 2p - k) % s == 0 and shapes round-trip
        for &(c, f, h, k, s, p) in &[(2usize, 3usize, 7usize, 3usize, 2usize, 1usize), (1, 2, 5, 2, 1, 0), (3, 1, 4, 4, 2, 1)] {
            let x = Tensor::rand_uniform(&[2, c, h, h], -1.0, 1.0, &mut rng);
            let w = Tensor::rand_uniform(&[f, c, k, k], -1.0, 1.0, &mut rng);
            let cx = conv2d_forward(&x, &w, s, p).unwrap();
            let y = Tensor::rand_uniform(cx.shape(), -1.0, 1.0, &mut rng);

            let xt = conv2d_transpose_forward(&y, &w, s, p).unwrap();
            assert_eq!(xt.shape(), x.shape());

            let lhs: f64 = cx
                .data()
                .iter()
                .zip(y.data())
                .map(|(a, b)| (*a as f64) * (*b as f64))
                .sum();
            let rhs: f64 = x
                .data()
                .iter()
                .zip(xt.data())
                .map(|(a, b)| (*a as f64) * (*b as f64))
                .sum();
            let rel = (lhs - rhs).abs() / lhs.abs().max(rhs.abs());
            assert!(rel <= 1e-5, "adjoint identity violated: {lhs} vs {rhs}");
        }
    }
}
