//! Numeric kernels shared by the tape (training) and the inference path.
//!
//! Everything is a plain function over [`Array`]s so both paths compute
//! through identical code, and oracles in tests can target one surface.

use super::array::{Array, Scalar};

/// Logit value assigned to masked-out entries of a log-softmax; exp() of it
/// underflows to exactly zero in both precisions.
pub const MASKED_LOGP: f64 = -1.0e30;

/// Spatial output size of a convolution axis; None when non-positive.
pub fn conv_out_dim(input: usize, kernel: usize, stride: usize, padding: usize) -> Option<usize> {
    let padded = input + 2 * padding;
    if padded < kernel {
        return None;
    }
    Some((padded - kernel) / stride + 1)
}

/// 2D cross-correlation. x: [N,C,H,W], w: [O,C,kh,kw], b: [O] -> [N,O,Ho,Wo].
pub fn conv2d_forward<T: Scalar>(
    x: &Array<T>,
    w: &Array<T>,
    b: &Array<T>,
    stride: usize,
    padding: usize,
) -> Array<T> {
    let (n, c, h, wd) = dims4(x.shape(), "conv2d input");
    let (o, cw, kh, kw) = dims4(w.shape(), "conv2d weight");
    assert_eq!(c, cw, "conv2d channel mismatch: input {c}, weight {cw}");
    assert_eq!(b.shape(), &[o], "conv2d bias shape");
    let ho = conv_out_dim(h, kh, stride, padding).expect("non-positive conv output height");
    let wo = conv_out_dim(wd, kw, stride, padding).expect("non-positive conv output width");

    let mut out = Array::zeros(&[n, o, ho, wo]);
    let xd = x.data();
    let wdat = w.data();
    let bd = b.data();
    let od = out.data_mut();
    // In-bounds kernel column range for an output column: kj such that
    // 0 <= wi_out*stride + kj - padding < wd. Contiguous in both x and w,
    // so the innermost loop is a straight dot product.
    let kj_range = |wi_out: usize| -> (usize, usize) {
        let base = wi_out * stride;
        let lo = padding.saturating_sub(base).min(kw);
        let hi = (wd + padding - base).min(kw);
        (lo, hi.max(lo))
    };
    for ni in 0..n {
        for oi in 0..o {
            let w_base = oi * c * kh * kw;
            for hi_out in 0..ho {
                for wi_out in 0..wo {
                    let (kj_lo, kj_hi) = kj_range(wi_out);
                    let wi_lo = wi_out * stride + kj_lo - padding;
                    let mut acc = bd[oi];
                    for ci in 0..c {
                        let x_base = ((ni * c + ci) * h) * wd;
                        let wk_base = w_base + ci * kh * kw;
                        for ki in 0..kh {
                            let hi = (hi_out * stride + ki) as isize - padding as isize;
                            if hi < 0 || hi >= h as isize {
                                continue;
                            }
                            let x_off = x_base + hi as usize * wd + wi_lo;
                            let w_off = wk_base + ki * kw + kj_lo;
                            let len = kj_hi - kj_lo;
                            let xrow = &xd[x_off..x_off + len];
                            let wrow = &wdat[w_off..w_off + len];
                            let mut dot = T::zero();
                            for (xv, wv) in xrow.iter().zip(wrow) {
                                dot = dot + *xv * *wv;
                            }
                            acc = acc + dot;
                        }
                    }
                    od[((ni * o + oi) * ho + hi_out) * wo + wi_out] = acc;
                }
            }
        }
    }
    out
}

/// Gradients of conv2d. Returns (grad_x, grad_w, grad_b); grad_x is skipped
/// when `need_x` is false (the input is usually an observation leaf).
pub fn conv2d_backward<T: Scalar>(
    x: &Array<T>,
    w: &Array<T>,
    gout: &Array<T>,
    stride: usize,
    padding: usize,
    need_x: bool,
) -> (Option<Array<T>>, Array<T>, Array<T>) {
    let (n, c, h, wd) = dims4(x.shape(), "conv2d input");
    let (o, _, kh, kw) = dims4(w.shape(), "conv2d weight");
    let (gn, go, ho, wo) = dims4(gout.shape(), "conv2d grad");
    assert_eq!((gn, go), (n, o), "conv2d grad batch/channel mismatch");

    let mut gx = if need_x { Some(Array::zeros(x.shape())) } else { None };
    let mut gw = Array::zeros(w.shape());
    let mut gb = Array::zeros(&[o]);
    let xd = x.data();
    let wdat = w.data();
    let gd = gout.data();
    let kj_range = |wi_out: usize| -> (usize, usize) {
        let base = wi_out * stride;
        let lo = padding.saturating_sub(base).min(kw);
        let hi = (wd + padding - base).min(kw);
        (lo, hi.max(lo))
    };
    for ni in 0..n {
        for oi in 0..o {
            let w_base = oi * c * kh * kw;
            for hi_out in 0..ho {
                for wi_out in 0..wo {
                    let g = gd[((ni * o + oi) * ho + hi_out) * wo + wi_out];
                    if g == T::zero() {
                        continue;
                    }
                    gb.data_mut()[oi] = gb.data_mut()[oi] + g;
                    let (kj_lo, kj_hi) = kj_range(wi_out);
                    let wi_lo = wi_out * stride + kj_lo - padding;
                    let len = kj_hi - kj_lo;
                    for ci in 0..c {
                        let x_base = ((ni * c + ci) * h) * wd;
                        let wk_base = w_base + ci * kh * kw;
                        for ki in 0..kh {
                            let hi = (hi_out * stride + ki) as isize - padding as isize;
                            if hi < 0 || hi >= h as isize {
                                continue;
                            }
                            let x_off = x_base + hi as usize * wd + wi_lo;
                            let w_off = wk_base + ki * kw + kj_lo;
                            let xrow = &xd[x_off..x_off + len];
                            let grow = &mut gw.data_mut()[w_off..w_off + len];
                            for (gwv, xv) in grow.iter_mut().zip(xrow) {
                                *gwv = *gwv + g * *xv;
                            }
                            if let Some(gx) = gx.as_mut() {
                                let wrow = &wdat[w_off..w_off + len];
                                let gxrow = &mut gx.data_mut()[x_off..x_off + len];
                                for (gxv, wv) in gxrow.iter_mut().zip(wrow) {
                                    *gxv = *gxv + g * *wv;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    (gx, gw, gb)
}

/// x: [N,I], w: [O,I], b: [O] -> [N,O].
pub fn linear_forward<T: Scalar>(x: &Array<T>, w: &Array<T>, b: &Array<T>) -> Array<T> {
    let (n, i) = dims2(x.shape(), "linear input");
    let (o, iw) = dims2(w.shape(), "linear weight");
    assert_eq!(i, iw, "linear shape mismatch: input dim {i}, weight dim {iw}");
    assert_eq!(b.shape(), &[o], "linear bias shape");
    let mut out = Array::zeros(&[n, o]);
    let xd = x.data();
    let wd = w.data();
    let bd = b.data();
    let od = out.data_mut();
    for ni in 0..n {
        let xrow = &xd[ni * i..(ni + 1) * i];
        for oi in 0..o {
            let wrow = &wd[oi * i..(oi + 1) * i];
            let mut acc = bd[oi];
            for (xv, wv) in xrow.iter().zip(wrow) {
                acc = acc + *xv * *wv;
            }
            od[ni * o + oi] = acc;
        }
    }
    out
}

pub fn linear_backward<T: Scalar>(
    x: &Array<T>,
    w: &Array<T>,
    gout: &Array<T>,
    need_x: bool,
) -> (Option<Array<T>>, Array<T>, Array<T>) {
    let (n, i) = dims2(x.shape(), "linear input");
    let (o, _) = dims2(w.shape(), "linear weight");
    let gd = gout.data();
    let xd = x.data();
    let wd = w.data();

    let mut gw = Array::zeros(w.shape());
    let mut gb = Array::zeros(&[o]);
    for ni in 0..n {
        for oi in 0..o {
            let g = gd[ni * o + oi];
            gb.data_mut()[oi] = gb.data_mut()[oi] + g;
            let grow = &mut gw.data_mut()[oi * i..(oi + 1) * i];
            let xrow = &xd[ni * i..(ni + 1) * i];
            for k in 0..i {
                grow[k] = grow[k] + g * xrow[k];
            }
        }
    }
    let gx = if need_x {
        let mut gx = Array::zeros(x.shape());
        for ni in 0..n {
            let grow = &gd[ni * o..(ni + 1) * o];
            let xgrow = &mut gx.data_mut()[ni * i..(ni + 1) * i];
            for oi in 0..o {
                let g = grow[oi];
                let wrow = &wd[oi * i..(oi + 1) * i];
                for k in 0..i {
                    xgrow[k] = xgrow[k] + g * wrow[k];
                }
            }
        }
        Some(gx)
    } else {
        None
    };
    (gx, gw, gb)
}

pub fn sigmoid<T: Scalar>(v: T) -> T {
    let one = T::one();
    one / (one + (-v).exp())
}

/// Row-wise masked log-softmax over the last axis. Masked entries get
/// [`MASKED_LOGP`]. Panics if a row is fully masked.
pub fn masked_log_softmax<T: Scalar>(x: &Array<T>, mask: &[bool]) -> Array<T> {
    let k = *x.shape().last().expect("log_softmax on empty shape");
    assert_eq!(mask.len(), k, "mask length must match last axis");
    let rows = x.numel() / k;
    let mut out = Array::zeros(x.shape());
    for r in 0..rows {
        let row = &x.data()[r * k..(r + 1) * k];
        let mut maxv = T::neg_infinity();
        for (j, &v) in row.iter().enumerate() {
            if mask[j] && v > maxv {
                maxv = v;
            }
        }
        assert!(maxv > T::neg_infinity(), "masked_log_softmax: all entries masked");
        let mut denom = T::zero();
        for (j, &v) in row.iter().enumerate() {
            if mask[j] {
                denom = denom + (v - maxv).exp();
            }
        }
        let log_denom = denom.ln();
        let orow = &mut out.data_mut()[r * k..(r + 1) * k];
        for j in 0..k {
            orow[j] = if mask[j] { row[j] - maxv - log_denom } else { T::from_f64(MASKED_LOGP) };
        }
    }
    out
}

pub fn softmax<T: Scalar>(x: &Array<T>) -> Array<T> {
    let k = *x.shape().last().expect("softmax on empty shape");
    let mask = vec![true; k];
    masked_log_softmax(x, &mask).map(|v| v.exp())
}

fn dims2(shape: &[usize], what: &str) -> (usize, usize) {
    assert_eq!(shape.len(), 2, "{what} must be 2-d, got {shape:?}");
    (shape[0], shape[1])
}

fn dims4(shape: &[usize], what: &str) -> (usize, usize, usize, usize) {
    assert_eq!(shape.len(), 4, "{what} must be 4-d, got {shape:?}");
    (shape[0], shape[1], shape[2], shape[3])
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct six-loop convolution oracle, independent of the kernel above.
    fn conv_oracle(
        x: &Array<f64>,
        w: &Array<f64>,
        b: &Array<f64>,
        stride: usize,
        padding: usize,
    ) -> Array<f64> {
        let (n, c, h, wd) = (x.shape()[0], x.shape()[1], x.shape()[2], x.shape()[3]);
        let (o, kh, kw) = (w.shape()[0], w.shape()[2], w.shape()[3]);
        let ho = (h + 2 * padding - kh) / stride + 1;
        let wo = (wd + 2 * padding - kw) / stride + 1;
        let mut out = Array::zeros(&[n, o, ho, wo]);
        for ni in 0..n {
            for oi in 0..o {
                for y in 0..ho {
                    for xx in 0..wo {
                        let mut acc = b.data()[oi];
                        for ci in 0..c {
                            for ki in 0..kh {
                                for kj in 0..kw {
                                    let hi = (y * stride + ki) as isize - padding as isize;
                                    let wi = (xx * stride + kj) as isize - padding as isize;
                                    if hi >= 0 && (hi as usize) < h && wi >= 0 && (wi as usize) < wd
                                    {
                                        acc += x.data()
                                            [((ni * c + ci) * h + hi as usize) * wd + wi as usize]
                                            * w.data()[((oi * c + ci) * kh + ki) * kw + kj];
                                    }
                                }
                            }
                        }
                        out.data_mut()[((ni * o + oi) * ho + y) * wo + xx] = acc;
                    }
                }
            }
        }
        out
    }

    #[test]
    fn identity_kernel_passes_input_through() {
        let x = Array::<f32>::from_vec(&[1, 1, 3, 3], (1..=9).map(|v| v as f32).collect());
        let w = Array::<f32>::from_vec(&[1, 1, 1, 1], vec![1.0]);
        let b = Array::<f32>::zeros(&[1]);
        let y = conv2d_forward(&x, &w, &b, 1, 0);
        assert_eq!(y.data(), x.data());
    }

    #[test]
    fn conv_matches_direct_oracle() {
        use rand::Rng;
        let mut rng = crate::seed::rng(11, crate::seed::Domain::ParamInit, 0);
        for &(stride, padding) in &[(1usize, 0usize), (1, 1), (2, 0), (2, 2)] {
            let x = Array::<f64>::from_vec(
                &[1, 4, 8, 8],
                (0..256).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            );
            let w = Array::<f64>::from_vec(
                &[3, 4, 3, 3],
                (0..108).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            );
            let b =
                Array::<f64>::from_vec(&[3], (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect());
            let got = conv2d_forward(&x, &w, &b, stride, padding);
            let want = conv_oracle(&x, &w, &b, stride, padding);
            assert_eq!(got.shape(), want.shape());
            for (a, b) in got.data().iter().zip(want.data()) {
                assert!((a - b).abs() < 1e-6, "conv mismatch: {a} vs {b}");
            }
        }
    }

    #[test]
    fn softmax_of_equal_logits_is_uniform() {
        let x = Array::<f32>::filled(&[1, 5], 3.25);
        let s = softmax(&x);
        for &v in s.data() {
            assert!((v - 0.2).abs() < 1e-6);
        }
        let total: f32 = s.data().iter().sum();
        assert!((total - 1.0).abs() < 1e-6);
    }

    #[test]
    fn masked_entries_get_zero_probability() {
        let x = Array::<f32>::from_vec(&[1, 4], vec![0.0, 1.0, 2.0, 3.0]);
        let mask = vec![true, false, true, false];
        let lp = masked_log_softmax(&x, &mask);
        let p: Vec<f32> = lp.data().iter().map(|v| v.exp()).collect();
        assert_eq!(p[1], 0.0);
        assert_eq!(p[3], 0.0);
        assert!((p[0] + p[2] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn no_nan_for_extreme_logits() {
        let x = Array::<f32>::from_vec(&[1, 4], vec![-50.0, 50.0, 0.0, 49.0]);
        let s = softmax(&x);
        assert!(s.data().iter().all(|v| v.is_finite()));
        let lp = masked_log_softmax(&x, &[true; 4]);
        assert!(lp.data().iter().all(|v| v.is_finite()));
    }
}
