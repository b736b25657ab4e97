//! Convolutional value network: the tile rows are reshaped to an
//! H x W x F image in index order, pushed through 3x3 same-padding
//! convolution + ReLU blocks, globally mean-pooled per channel and fed
//! to a tanh head.

use super::tensor::dot;
use super::{ConvNetConfig, Init, NeuralError, ParamSet, ParamSpec};
use crate::games::TileEncoding;
use crate::scalar::Scalar;

pub(crate) fn schema(cfg: &ConvNetConfig) -> Vec<ParamSpec> {
    let k2 = cfg.kernel * cfg.kernel;
    let mut out = Vec::new();
    for l in 0..cfg.conv_layers {
        let in_ch = if l == 0 {
            cfg.feature_dim
        } else {
            cfg.channels
        };
        out.push(ParamSpec::new(
            format!("conv{l}.w"),
            vec![cfg.channels, in_ch, cfg.kernel, cfg.kernel],
            Init::Uniform {
                fan_in: in_ch * k2,
                fan_out: cfg.channels * k2,
            },
        ));
        out.push(ParamSpec::new(
            format!("conv{l}.b"),
            vec![cfg.channels],
            Init::Zero,
        ));
    }
    out.push(ParamSpec::new(
        "head.w",
        vec![1, cfg.channels],
        Init::Uniform {
            fan_in: cfg.channels,
            fan_out: 1,
        },
    ));
    out.push(ParamSpec::new("head.b", vec![1], Init::Zero));
    out
}

/// Activation storage for one sample.
pub struct ConvWorkspace<S> {
    /// images[0] is the F x H x W input; images[l + 1] the ReLU output
    /// of conv layer l, each stored [channel][row][col].
    images: Vec<Vec<S>>,
    /// Pre-ReLU activations per conv layer.
    zs: Vec<Vec<S>>,
    pooled: Vec<S>,
    v_out: S,
    dimg_a: Vec<S>,
    dimg_b: Vec<S>,
    dpool: Vec<S>,
}

impl<S: Scalar> ConvWorkspace<S> {
    pub(crate) fn new(cfg: &ConvNetConfig) -> ConvWorkspace<S> {
        let (h, w) = cfg.grid;
        let plane = h * w;
        let mut images = vec![vec![S::zero(); cfg.feature_dim * plane]];
        for _ in 0..cfg.conv_layers {
            images.push(vec![S::zero(); cfg.channels * plane]);
        }
        let zs = (0..cfg.conv_layers)
            .map(|_| vec![S::zero(); cfg.channels * plane])
            .collect();
        let buf = cfg.channels.max(cfg.feature_dim) * plane;
        ConvWorkspace {
            images,
            zs,
            pooled: vec![S::zero(); cfg.channels],
            v_out: S::zero(),
            dimg_a: vec![S::zero(); buf],
            dimg_b: vec![S::zero(); buf],
            dpool: vec![S::zero(); cfg.channels],
        }
    }

    /// Post-activation feature map of conv layer `l` for inspection.
    pub fn feature_map(&self, l: usize) -> &[S] {
        &self.images[l + 1]
    }

    /// Pre-activation map of conv layer `l`.
    pub fn pre_activation(&self, l: usize) -> &[S] {
        &self.zs[l]
    }
}

/// One 3x3 same-padded convolution layer, writing pre-activations.
#[allow(clippy::too_many_arguments)]
fn conv3x3<S: Scalar>(
    input: &[S],
    in_ch: usize,
    h: usize,
    w: usize,
    weights: &[S],
    bias: &[S],
    out_ch: usize,
    z: &mut [S],
) {
    let plane = h * w;
    for oc in 0..out_ch {
        let wbase = oc * in_ch * 9;
        for r in 0..h {
            for c in 0..w {
                let mut acc = bias[oc];
                for ic in 0..in_ch {
                    let kbase = wbase + ic * 9;
                    let ibase = ic * plane;
                    for (ky, kdy) in (-1isize..=1).enumerate() {
                        let rr = r as isize + kdy;
                        if rr < 0 || rr >= h as isize {
                            continue;
                        }
                        for (kx, kdx) in (-1isize..=1).enumerate() {
                            let cc = c as isize + kdx;
                            if cc < 0 || cc >= w as isize {
                                continue;
                            }
                            acc += weights[kbase + ky * 3 + kx]
                                    * input[ibase + rr as usize * w + cc as usize];
                        }
                    }
                }
                z[oc * plane + r * w + c] = acc;
            }
        }
    }
}

pub(crate) fn forward<S: Scalar>(
    cfg: &ConvNetConfig,
    params: &ParamSet<S>,
    enc: &TileEncoding<S>,
    ws: &mut ConvWorkspace<S>,
) -> Result<S, NeuralError> {
    let (h, w) = cfg.grid;
    let plane = h * w;
    if enc.features() != cfg.feature_dim {
        return Err(NeuralError::ShapeMismatch(format!(
            "encoding has {} features, net expects {}",
            enc.features(),
            cfg.feature_dim
        )));
    }
    if enc.tiles() != plane {
        return Err(NeuralError::ShapeMismatch(format!(
            "encoding has {} tiles, grid needs {plane}",
            enc.tiles()
        )));
    }

    // Tile rows (T x F) to channel planes (F x H x W) in index order.
    {
        let im0 = &mut ws.images[0];
        for t in 0..plane {
            let row = enc.row(t);
            for (f, &v) in row.iter().enumerate() {
                im0[f * plane + t] = v;
            }
        }
    }

    for l in 0..cfg.conv_layers {
        let in_ch = if l == 0 {
            cfg.feature_dim
        } else {
            cfg.channels
        };
        let (prev, rest) = ws.images.split_at_mut(l + 1);
        conv3x3(
            &prev[l],
            in_ch,
            h,
            w,
            params.get(2 * l).values(),
            params.get(2 * l + 1).values(),
            cfg.channels,
            &mut ws.zs[l],
        );
        for (o, &z) in rest[0].iter_mut().zip(ws.zs[l].iter()) {
            *o = if z > S::zero() { z } else { S::zero() };
        }
    }

    let last = &ws.images[cfg.conv_layers];
    let inv = S::one() / S::from_f64_lossy(plane as f64);
    for (oc, p) in ws.pooled.iter_mut().enumerate() {
        *p = last[oc * plane..(oc + 1) * plane]
            .iter()
            .copied()
            .sum::<S>()
            * inv;
    }
    let head_w = params.get(2 * cfg.conv_layers);
    let head_b = params.get(2 * cfg.conv_layers + 1);
    let y = dot(head_w.values(), &ws.pooled) + head_b.values()[0];
    ws.v_out = y.tanh();
    Ok(ws.v_out)
}

pub(crate) fn backward<S: Scalar>(
    cfg: &ConvNetConfig,
    params: &ParamSet<S>,
    ws: &mut ConvWorkspace<S>,
    d_out: S,
    grads: &mut ParamSet<S>,
) {
    let (h, w) = cfg.grid;
    let plane = h * w;
    let dy = d_out * (S::one() - ws.v_out * ws.v_out);

    let head_w_ix = 2 * cfg.conv_layers;
    {
        let gw = grads.get_mut(head_w_ix);
        for (g, &p) in gw.values_mut().iter_mut().zip(ws.pooled.iter()) {
            *g += dy * p;
        }
    }
    grads.get_mut(head_w_ix + 1).values_mut()[0] += dy;

    let inv = S::one() / S::from_f64_lossy(plane as f64);
    for (dp, &wv) in ws.dpool.iter_mut().zip(params.get(head_w_ix).values()) {
        *dp = dy * wv * inv;
    }
    // d(last image): dpool spread uniformly over the plane.
    for oc in 0..cfg.channels {
        let g = ws.dpool[oc];
        for v in ws.dimg_a[oc * plane..(oc + 1) * plane].iter_mut() {
            *v = g;
        }
    }

    for l in (0..cfg.conv_layers).rev() {
        let in_ch = if l == 0 {
            cfg.feature_dim
        } else {
            cfg.channels
        };
        // ReLU mask: dz lives in dimg_a after this.
        for (g, &z) in ws.dimg_a[..cfg.channels * plane]
            .iter_mut()
            .zip(ws.zs[l].iter())
        {
            if z <= S::zero() {
                *g = S::zero();
            }
        }
        ws.dimg_b[..in_ch * plane]
            .iter_mut()
            .for_each(|v| *v = S::zero());
        let input = &ws.images[l];
        let weights = params.get(2 * l).values();
        {
            let gw = grads.get_mut(2 * l);
            let gw = gw.values_mut();
            for oc in 0..cfg.channels {
                let wbase = oc * in_ch * 9;
                for r in 0..h {
                    for c in 0..w {
                        let g = ws.dimg_a[oc * plane + r * w + c];
                        if g == S::zero() {
                            continue;
                        }
                        for ic in 0..in_ch {
                            let kbase = wbase + ic * 9;
                            let ibase = ic * plane;
                            for (ky, kdy) in (-1isize..=1).enumerate() {
                                let rr = r as isize + kdy;
                                if rr < 0 || rr >= h as isize {
                                    continue;
                                }
                                for (kx, kdx) in (-1isize..=1).enumerate() {
                                    let cc = c as isize + kdx;
                                    if cc < 0 || cc >= w as isize {
                                        continue;
                                    }
                                    let pix = ibase + rr as usize * w + cc as usize;
                                    gw[kbase + ky * 3 + kx] += g * input[pix];
                                    ws.dimg_b[pix] += g * weights[kbase + ky * 3 + kx];
                                }
                            }
                        }
                    }
                }
            }
        }
        {
            let gb = grads.get_mut(2 * l + 1);
            for (oc, gb) in gb.values_mut().iter_mut().enumerate().take(cfg.channels) {
                let mut acc = S::zero();
                for &g in &ws.dimg_a[oc * plane..(oc + 1) * plane] {
                    acc += g;
                }
                *gb += acc;
            }
        }
        std::mem::swap(&mut ws.dimg_a, &mut ws.dimg_b);
    }
}
