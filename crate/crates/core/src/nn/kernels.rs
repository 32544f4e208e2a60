//! Forward/backward kernels for the three layer kinds plus the two
//! parameter-free spatial ops the models compose around them
//! (2x space-to-depth and 2x nearest-neighbor upsampling).

use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Per-position channel mix: `[B,Ci,H,W] x [Co,Ci] + [Co] -> [B,Co,H,W]`.
pub fn dense_forward<F: Scalar>(input: &Tensor<F>, w: &Tensor<F>, b: &Tensor<F>) -> Tensor<F> {
    let (batch, ci, h, wd) = input.dims4().expect("dense input rank 4");
    let co = w.shape()[0];
    let plane = h * wd;
    let mut out = Tensor::zeros(vec![batch, co, h, wd]);
    let x = input.data();
    let wv = w.data();
    let bv = b.data();
    let o = out.data_mut();
    for bi in 0..batch {
        for oc in 0..co {
            let dst = (bi * co + oc) * plane;
            for p in 0..plane {
                o[dst + p] = bv[oc];
            }
            for ic in 0..ci {
                let wgt = wv[oc * ci + ic];
                let src = (bi * ci + ic) * plane;
                for p in 0..plane {
                    o[dst + p] = o[dst + p] + wgt * x[src + p];
                }
            }
        }
    }
    out
}

pub fn dense_backward<F: Scalar>(
    input: &Tensor<F>,
    w: &Tensor<F>,
    grad_out: &Tensor<F>,
) -> (Tensor<F>, Tensor<F>, Tensor<F>) {
    let (batch, ci, h, wd) = input.dims4().expect("dense input rank 4");
    let co = w.shape()[0];
    let plane = h * wd;
    let mut dw = Tensor::zeros(vec![co, ci]);
    let mut db = Tensor::zeros(vec![co]);
    let mut dx = Tensor::zeros(vec![batch, ci, h, wd]);
    let x = input.data();
    let wv = w.data();
    let go = grad_out.data();
    {
        let dwv = dw.data_mut();
        for bi in 0..batch {
            for oc in 0..co {
                let src = (bi * co + oc) * plane;
                for ic in 0..ci {
                    let xin = (bi * ci + ic) * plane;
                    let mut acc = F::zero();
                    for p in 0..plane {
                        acc = acc + go[src + p] * x[xin + p];
                    }
                    dwv[oc * ci + ic] = dwv[oc * ci + ic] + acc;
                }
            }
        }
    }
    {
        let dbv = db.data_mut();
        for bi in 0..batch {
            for oc in 0..co {
                let src = (bi * co + oc) * plane;
                let mut acc = F::zero();
                for p in 0..plane {
                    acc = acc + go[src + p];
                }
                dbv[oc] = dbv[oc] + acc;
            }
        }
    }
    {
        let dxv = dx.data_mut();
        for bi in 0..batch {
            for ic in 0..ci {
                let dst = (bi * ci + ic) * plane;
                for oc in 0..co {
                    let wgt = wv[oc * ci + ic];
                    let src = (bi * co + oc) * plane;
                    for p in 0..plane {
                        dxv[dst + p] = dxv[dst + p] + wgt * go[src + p];
                    }
                }
            }
        }
    }
    (dw, db, dx)
}

/// Stride-1 3x3 convolution with zero same-padding:
/// `[B,Ci,H,W] x [Co,Ci,3,3] + [Co] -> [B,Co,H,W]`.
pub fn conv3x3_forward<F: Scalar>(input: &Tensor<F>, w: &Tensor<F>, b: &Tensor<F>) -> Tensor<F> {
    let (batch, ci, h, wd) = input.dims4().expect("conv input rank 4");
    let co = w.shape()[0];
    let mut out = Tensor::zeros(vec![batch, co, h, wd]);
    let x = input.data();
    let wv = w.data();
    let bv = b.data();
    let o = out.data_mut();
    for bi in 0..batch {
        for oc in 0..co {
            let dst = (bi * co + oc) * h * wd;
            for p in 0..h * wd {
                o[dst + p] = bv[oc];
            }
            for ic in 0..ci {
                let src = (bi * ci + ic) * h * wd;
                let wbase = (oc * ci + ic) * 9;
                for ky in 0..3usize {
                    for kx in 0..3usize {
                        let wgt = wv[wbase + ky * 3 + kx];
                        // output row y reads input row y + ky - 1
                        let y0 = 1usize.saturating_sub(ky);
                        let y1 = h.min(h + 1 - ky);
                        let x0 = 1usize.saturating_sub(kx);
                        let x1 = wd.min(wd + 1 - kx);
                        for y in y0..y1 {
                            let iy = y + ky - 1;
                            let orow = dst + y * wd;
                            let irow = src + iy * wd;
                            for xc in x0..x1 {
                                let ix = xc + kx - 1;
                                o[orow + xc] = o[orow + xc] + wgt * x[irow + ix];
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

pub fn conv3x3_backward<F: Scalar>(
    input: &Tensor<F>,
    w: &Tensor<F>,
    grad_out: &Tensor<F>,
) -> (Tensor<F>, Tensor<F>, Tensor<F>) {
    let (batch, ci, h, wd) = input.dims4().expect("conv input rank 4");
    let co = w.shape()[0];
    let mut dw = Tensor::zeros(vec![co, ci, 3, 3]);
    let mut db = Tensor::zeros(vec![co]);
    let mut dx = Tensor::zeros(vec![batch, ci, h, wd]);
    let x = input.data();
    let wv = w.data();
    let go = grad_out.data();
    {
        let dbv = db.data_mut();
        for bi in 0..batch {
            for oc in 0..co {
                let src = (bi * co + oc) * h * wd;
                let mut acc = F::zero();
                for p in 0..h * wd {
                    acc = acc + go[src + p];
                }
                dbv[oc] = dbv[oc] + acc;
            }
        }
    }
    {
        let dwv = dw.data_mut();
        for bi in 0..batch {
            for oc in 0..co {
                let gsrc = (bi * co + oc) * h * wd;
                for ic in 0..ci {
                    let xsrc = (bi * ci + ic) * h * wd;
                    for ky in 0..3usize {
                        for kx in 0..3usize {
                            let y0 = 1usize.saturating_sub(ky);
                            let y1 = h.min(h + 1 - ky);
                            let x0 = 1usize.saturating_sub(kx);
                            let x1 = wd.min(wd + 1 - kx);
                            let mut acc = F::zero();
                            for y in y0..y1 {
                                let iy = y + ky - 1;
                                let grow = gsrc + y * wd;
                                let xrow = xsrc + iy * wd;
                                for xc in x0..x1 {
                                    acc = acc + go[grow + xc] * x[xrow + xc + kx - 1];
                                }
                            }
                            let wi = (oc * ci + ic) * 9 + ky * 3 + kx;
                            dwv[wi] = dwv[wi] + acc;
                        }
                    }
                }
            }
        }
    }
    {
        let dxv = dx.data_mut();
        for bi in 0..batch {
            for oc in 0..co {
                let gsrc = (bi * co + oc) * h * wd;
                for ic in 0..ci {
                    let xdst = (bi * ci + ic) * h * wd;
                    let wbase = (oc * ci + ic) * 9;
                    for ky in 0..3usize {
                        for kx in 0..3usize {
                            let wgt = wv[wbase + ky * 3 + kx];
                            let y0 = 1usize.saturating_sub(ky);
                            let y1 = h.min(h + 1 - ky);
                            let x0 = 1usize.saturating_sub(kx);
                            let x1 = wd.min(wd + 1 - kx);
                            for y in y0..y1 {
                                let iy = y + ky - 1;
                                let grow = gsrc + y * wd;
                                let xrow = xdst + iy * wd;
                                for xc in x0..x1 {
                                    dxv[xrow + xc + kx - 1] =
                                        dxv[xrow + xc + kx - 1] + wgt * go[grow + xc];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    (dw, db, dx)
}

pub fn relu_forward<F: Scalar>(input: &Tensor<F>) -> Tensor<F> {
    input.map(|v| if v > F::zero() { v } else { F::zero() })
}

pub fn relu_backward<F: Scalar>(input: &Tensor<F>, grad_out: &Tensor<F>) -> Tensor<F> {
    let data = input
        .data()
        .iter()
        .zip(grad_out.data())
        .map(|(&x, &g)| if x > F::zero() { g } else { F::zero() })
        .collect();
    Tensor::new(input.shape().to_vec(), data)
}

/// `[B,C,H,W] -> [B,4C,H/2,W/2]`; out channel `c*4 + dy*2 + dx` holds the
/// `(dy,dx)` phase of input channel `c`. Lossless permutation.
pub fn space_to_depth2<F: Scalar>(input: &Tensor<F>) -> Tensor<F> {
    let (batch, c, h, w) = input.dims4().expect("space_to_depth input rank 4");
    assert!(h % 2 == 0 && w % 2 == 0, "even spatial dims required");
    let (ho, wo) = (h / 2, w / 2);
    let mut out = Tensor::zeros(vec![batch, c * 4, ho, wo]);
    let x = input.data();
    let o = out.data_mut();
    for bi in 0..batch {
        for ic in 0..c {
            for dy in 0..2usize {
                for dx in 0..2usize {
                    let oc = ic * 4 + dy * 2 + dx;
                    let dst = (bi * c * 4 + oc) * ho * wo;
                    let src = (bi * c + ic) * h * w;
                    for y in 0..ho {
                        for xc in 0..wo {
                            o[dst + y * wo + xc] = x[src + (2 * y + dy) * w + 2 * xc + dx];
                        }
                    }
                }
            }
        }
    }
    out
}

pub fn space_to_depth2_backward<F: Scalar>(grad_out: &Tensor<F>) -> Tensor<F> {
    let (batch, c4, ho, wo) = grad_out.dims4().expect("grad rank 4");
    let c = c4 / 4;
    let (h, w) = (ho * 2, wo * 2);
    let mut dx = Tensor::zeros(vec![batch, c, h, w]);
    let go = grad_out.data();
    let o = dx.data_mut();
    for bi in 0..batch {
        for ic in 0..c {
            for dy in 0..2usize {
                for dxp in 0..2usize {
                    let oc = ic * 4 + dy * 2 + dxp;
                    let src = (bi * c4 + oc) * ho * wo;
                    let dst = (bi * c + ic) * h * w;
                    for y in 0..ho {
                        for xc in 0..wo {
                            o[dst + (2 * y + dy) * w + 2 * xc + dxp] = go[src + y * wo + xc];
                        }
                    }
                }
            }
        }
    }
    dx
}

/// `[B,C,H,W] -> [B,C,2H,2W]`, each value copied into a 2x2 block.
pub fn nearest_upsample2x<F: Scalar>(input: &Tensor<F>) -> Tensor<F> {
    let (batch, c, h, w) = input.dims4().expect("upsample input rank 4");
    let mut out = Tensor::zeros(vec![batch, c, 2 * h, 2 * w]);
    let x = input.data();
    let o = out.data_mut();
    for plane_idx in 0..batch * c {
        let src = plane_idx * h * w;
        let dst = plane_idx * 4 * h * w;
        for y in 0..h {
            for xc in 0..w {
                let v = x[src + y * w + xc];
                let base = dst + 2 * y * 2 * w + 2 * xc;
                o[base] = v;
                o[base + 1] = v;
                o[base + 2 * w] = v;
                o[base + 2 * w + 1] = v;
            }
        }
    }
    out
}

/// Gradient of [`nearest_upsample2x`]: sum each 2x2 block.
pub fn nearest_upsample2x_backward<F: Scalar>(grad_out: &Tensor<F>) -> Tensor<F> {
    let (batch, c, h2, w2) = grad_out.dims4().expect("grad rank 4");
    let (h, w) = (h2 / 2, w2 / 2);
    let mut dx = Tensor::zeros(vec![batch, c, h, w]);
    let go = grad_out.data();
    let o = dx.data_mut();
    for plane_idx in 0..batch * c {
        let src = plane_idx * h2 * w2;
        let dst = plane_idx * h * w;
        for y in 0..h {
            for xc in 0..w {
                let base = src + 2 * y * w2 + 2 * xc;
                o[dst + y * w + xc] = go[base] + go[base + 1] + go[base + w2] + go[base + w2 + 1];
            }
        }
    }
    dx
}
