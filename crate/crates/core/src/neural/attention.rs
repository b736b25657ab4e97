//! Attention value network: per-tile affine embedding plus positional
//! rows, a stack of pre-norm encoder blocks, mean pooling and a small
//! tanh head. Forward saves every activation needed by the hand-written
//! backward pass.

use super::tensor::{
    affine, affine_backward, axpy, dot, layer_norm, layer_norm_backward, softmax_row,
    softmax_row_backward, Tensor,
};
use super::{AttentionNetConfig, Init, NeuralError, ParamSet, ParamSpec};
use crate::games::TileEncoding;
use crate::scalar::Scalar;

/// Flat-vector position of the learned positional table when present
/// (right after embed.w and embed.b).
pub(crate) const LEARNED_POS_INDEX: usize = 2;

/// Positions of one encoder layer's tensors in the flat parameter vector.
#[derive(Clone, Copy, Debug)]
struct LayerIx {
    ln1_g: usize,
    ln1_b: usize,
    wq: usize,
    bq: usize,
    wk: usize,
    bk: usize,
    wv: usize,
    bv: usize,
    wo: usize,
    bo: usize,
    ln2_g: usize,
    ln2_b: usize,
    ff_w1: usize,
    ff_b1: usize,
    ff_w2: usize,
    ff_b2: usize,
}

fn layer_ix(cfg: &AttentionNetConfig, l: usize) -> LayerIx {
    let base = if cfg.positional_mode == super::PositionalMode::Learned {
        3
    } else {
        2
    } + l * 16;
    LayerIx {
        ln1_g: base,
        ln1_b: base + 1,
        wq: base + 2,
        bq: base + 3,
        wk: base + 4,
        bk: base + 5,
        wv: base + 6,
        bv: base + 7,
        wo: base + 8,
        bo: base + 9,
        ln2_g: base + 10,
        ln2_b: base + 11,
        ff_w1: base + 12,
        ff_b1: base + 13,
        ff_w2: base + 14,
        ff_b2: base + 15,
    }
}

fn head_ix(cfg: &AttentionNetConfig) -> (usize, usize, usize, usize) {
    let base = if cfg.positional_mode == super::PositionalMode::Learned {
        3
    } else {
        2
    } + cfg.layers * 16;
    (base, base + 1, base + 2, base + 3)
}

pub(crate) fn schema(cfg: &AttentionNetConfig) -> Vec<ParamSpec> {
    let (d, f, ff) = (cfg.embed_dim, cfg.feature_dim, cfg.ff_dim);
    let mut out = vec![
        ParamSpec::new(
            "embed.w",
            vec![d, f],
            Init::Uniform {
                fan_in: f,
                fan_out: d,
            },
        ),
        ParamSpec::new("embed.b", vec![d], Init::Zero),
    ];
    if cfg.positional_mode == super::PositionalMode::Learned {
        out.push(ParamSpec::new(
            "pos.table",
            vec![cfg.max_tiles, d],
            Init::Uniform {
                fan_in: d,
                fan_out: d,
            },
        ));
    }
    for l in 0..cfg.layers {
        let p = |suffix: &str| format!("layer{l}.{suffix}");
        out.push(ParamSpec::new(p("ln1.gain"), vec![d], Init::One));
        out.push(ParamSpec::new(p("ln1.bias"), vec![d], Init::Zero));
        for name in ["attn.wq", "attn.wk", "attn.wv"] {
            out.push(ParamSpec::new(
                p(name),
                vec![d, d],
                Init::Uniform {
                    fan_in: d,
                    fan_out: d,
                },
            ));
            out.push(ParamSpec::new(
                p(&name.replace('w', "b")),
                vec![d],
                Init::Zero,
            ));
        }
        out.push(ParamSpec::new(
            p("attn.wo"),
            vec![d, d],
            Init::Uniform {
                fan_in: d,
                fan_out: d,
            },
        ));
        out.push(ParamSpec::new(p("attn.bo"), vec![d], Init::Zero));
        out.push(ParamSpec::new(p("ln2.gain"), vec![d], Init::One));
        out.push(ParamSpec::new(p("ln2.bias"), vec![d], Init::Zero));
        out.push(ParamSpec::new(
            p("ff.w1"),
            vec![ff, d],
            Init::Uniform {
                fan_in: d,
                fan_out: ff,
            },
        ));
        out.push(ParamSpec::new(p("ff.b1"), vec![ff], Init::Zero));
        out.push(ParamSpec::new(
            p("ff.w2"),
            vec![d, ff],
            Init::Uniform {
                fan_in: ff,
                fan_out: d,
            },
        ));
        out.push(ParamSpec::new(p("ff.b2"), vec![d], Init::Zero));
    }
    out.push(ParamSpec::new(
        "head.w1",
        vec![d, d],
        Init::Uniform {
            fan_in: d,
            fan_out: d,
        },
    ));
    out.push(ParamSpec::new("head.b1", vec![d], Init::Zero));
    out.push(ParamSpec::new(
        "head.w2",
        vec![1, d],
        Init::Uniform {
            fan_in: d,
            fan_out: 1,
        },
    ));
    out.push(ParamSpec::new("head.b2", vec![1], Init::Zero));
    out
}

/// Saved activations for one encoder layer.
struct LayerTrace<S> {
    mu1: Vec<S>,
    rstd1: Vec<S>,
    a: Vec<S>,
    q: Vec<S>,
    k: Vec<S>,
    v: Vec<S>,
    /// Attention probabilities, laid out [head][row][col] with stride
    /// t_cap so the current t can vary.
    probs: Vec<S>,
    attn_out: Vec<S>,
    h1: Vec<S>,
    mu2: Vec<S>,
    rstd2: Vec<S>,
    b: Vec<S>,
    z1: Vec<S>,
    r1: Vec<S>,
}

impl<S: Scalar> LayerTrace<S> {
    fn new(t_cap: usize, d: usize, ff: usize, heads: usize) -> LayerTrace<S> {
        LayerTrace {
            mu1: vec![S::zero(); t_cap],
            rstd1: vec![S::zero(); t_cap],
            a: vec![S::zero(); t_cap * d],
            q: vec![S::zero(); t_cap * d],
            k: vec![S::zero(); t_cap * d],
            v: vec![S::zero(); t_cap * d],
            probs: vec![S::zero(); heads * t_cap * t_cap],
            attn_out: vec![S::zero(); t_cap * d],
            h1: vec![S::zero(); t_cap * d],
            mu2: vec![S::zero(); t_cap],
            rstd2: vec![S::zero(); t_cap],
            b: vec![S::zero(); t_cap * d],
            z1: vec![S::zero(); t_cap * ff],
            r1: vec![S::zero(); t_cap * ff],
        }
    }
}

/// All buffers for one sample's forward and backward pass.
pub struct AttnWorkspace<S> {
    t_cap: usize,
    t_cur: usize,
    enc: Vec<S>,
    slots: Vec<usize>,
    /// h[0] = embeddings + positions; h[l+1] = output of layer l.
    h: Vec<Vec<S>>,
    layers: Vec<LayerTrace<S>>,
    pooled: Vec<S>,
    u1_pre: Vec<S>,
    u1: Vec<S>,
    v_out: S,
    // Backward scratch.
    dh: Vec<S>,
    dh1: Vec<S>,
    dtmp: Vec<S>,
    dattn: Vec<S>,
    dq: Vec<S>,
    dk: Vec<S>,
    dv: Vec<S>,
    dz1: Vec<S>,
    dp_row: Vec<S>,
    dpool: Vec<S>,
    du1: Vec<S>,
    denc: Vec<S>,
}

impl<S: Scalar> AttnWorkspace<S> {
    pub(crate) fn new(cfg: &AttentionNetConfig) -> AttnWorkspace<S> {
        let (t_cap, d, ff, heads) = (cfg.max_tiles, cfg.embed_dim, cfg.ff_dim, cfg.heads);
        AttnWorkspace {
            t_cap,
            t_cur: 0,
            enc: vec![S::zero(); t_cap * cfg.feature_dim],
            slots: vec![0; t_cap],
            h: (0..=cfg.layers)
                .map(|_| vec![S::zero(); t_cap * d])
                .collect(),
            layers: (0..cfg.layers)
                .map(|_| LayerTrace::new(t_cap, d, ff, heads))
                .collect(),
            pooled: vec![S::zero(); d],
            u1_pre: vec![S::zero(); d],
            u1: vec![S::zero(); d],
            v_out: S::zero(),
            dh: vec![S::zero(); t_cap * d],
            dh1: vec![S::zero(); t_cap * d],
            dtmp: vec![S::zero(); t_cap * d],
            dattn: vec![S::zero(); t_cap * d],
            dq: vec![S::zero(); t_cap * d],
            dk: vec![S::zero(); t_cap * d],
            dv: vec![S::zero(); t_cap * d],
            dz1: vec![S::zero(); t_cap * ff],
            dp_row: vec![S::zero(); t_cap],
            dpool: vec![S::zero(); d],
            du1: vec![S::zero(); d],
            denc: vec![S::zero(); t_cap * cfg.feature_dim],
        }
    }

    /// Attention probability rows of `layer`/`head` for inspection in
    /// tests: row sums must be 1.
    pub fn attention_rows(&self, layer: usize, head: usize) -> Vec<Vec<S>> {
        let t = self.t_cur;
        let tr = &self.layers[layer];
        (0..t)
            .map(|row| {
                let base = (head * self.t_cap + row) * self.t_cap;
                tr.probs[base..base + t].to_vec()
            })
            .collect()
    }
}

pub(crate) fn forward<S: Scalar>(
    cfg: &AttentionNetConfig,
    params: &ParamSet<S>,
    pos: &Tensor<S>,
    enc: &TileEncoding<S>,
    slots: Option<&[usize]>,
    ws: &mut AttnWorkspace<S>,
) -> Result<S, NeuralError> {
    let (t, f, d) = (enc.tiles(), cfg.feature_dim, cfg.embed_dim);
    if enc.features() != f {
        return Err(NeuralError::ShapeMismatch(format!(
            "encoding has {} features, net expects {f}",
            enc.features()
        )));
    }
    if t == 0 || t > cfg.max_tiles {
        return Err(NeuralError::ShapeMismatch(format!(
            "encoding has {t} tiles, net accepts 1..={}",
            cfg.max_tiles
        )));
    }
    if let Some(slots) = slots {
        if slots.len() != t || slots.iter().any(|&s| s >= cfg.max_tiles) {
            return Err(NeuralError::ShapeMismatch("bad positional slot map".into()));
        }
    }
    ws.t_cur = t;
    ws.enc[..t * f].copy_from_slice(&enc.values()[..t * f]);
    for (i, slot) in ws.slots[..t].iter_mut().enumerate() {
        *slot = slots.map_or(i, |s| s[i]);
    }

    // Embedding + positional rows.
    {
        let h0 = &mut ws.h[0][..t * d];
        affine(
            &ws.enc[..t * f],
            t,
            f,
            params.get(0).values(),
            params.get(1).values(),
            d,
            h0,
        );
        for (i, row) in h0.chunks_exact_mut(d).enumerate() {
            let slot = ws.slots[i];
            axpy(S::one(), &pos.values()[slot * d..(slot + 1) * d], row);
        }
    }

    let heads = cfg.heads;
    let dh = d / heads;
    let inv_sqrt = S::from_f64_lossy(1.0 / (dh as f64).sqrt());
    let ff = cfg.ff_dim;
    for l in 0..cfg.layers {
        let ix = layer_ix(cfg, l);
        let (before, after) = ws.h.split_at_mut(l + 1);
        let h_in = &before[l][..t * d];
        let h_out = &mut after[0][..t * d];
        let tr = &mut ws.layers[l];

        layer_norm(
            h_in,
            t,
            d,
            params.get(ix.ln1_g).values(),
            params.get(ix.ln1_b).values(),
            &mut tr.a[..t * d],
            &mut tr.mu1,
            &mut tr.rstd1,
        );
        let a = &tr.a[..t * d];
        affine(
            a,
            t,
            d,
            params.get(ix.wq).values(),
            params.get(ix.bq).values(),
            d,
            &mut tr.q[..t * d],
        );
        affine(
            a,
            t,
            d,
            params.get(ix.wk).values(),
            params.get(ix.bk).values(),
            d,
            &mut tr.k[..t * d],
        );
        affine(
            a,
            t,
            d,
            params.get(ix.wv).values(),
            params.get(ix.bv).values(),
            d,
            &mut tr.v[..t * d],
        );

        tr.attn_out[..t * d].iter_mut().for_each(|x| *x = S::zero());
        for head in 0..heads {
            let off = head * dh;
            for row in 0..t {
                let qr = &tr.q[row * d + off..row * d + off + dh];
                let p_base = (head * ws.t_cap + row) * ws.t_cap;
                let p_row = &mut tr.probs[p_base..p_base + t];
                for (u, pv) in p_row.iter_mut().enumerate() {
                    *pv = dot(qr, &tr.k[u * d + off..u * d + off + dh]) * inv_sqrt;
                }
                softmax_row(p_row);
                let out_row = &mut tr.attn_out[row * d + off..row * d + off + dh];
                for (u, &pv) in p_row.iter().enumerate() {
                    axpy(pv, &tr.v[u * d + off..u * d + off + dh], out_row);
                }
            }
        }

        // h1 = h_in + Wo(attn_out); reuse h_out as the affine target.
        affine(
            &tr.attn_out[..t * d],
            t,
            d,
            params.get(ix.wo).values(),
            params.get(ix.bo).values(),
            d,
            h_out,
        );
        for (h1v, (&hv, &mv)) in tr.h1[..t * d].iter_mut().zip(h_in.iter().zip(h_out.iter())) {
            *h1v = hv + mv;
        }

        layer_norm(
            &tr.h1[..t * d],
            t,
            d,
            params.get(ix.ln2_g).values(),
            params.get(ix.ln2_b).values(),
            &mut tr.b[..t * d],
            &mut tr.mu2,
            &mut tr.rstd2,
        );
        affine(
            &tr.b[..t * d],
            t,
            d,
            params.get(ix.ff_w1).values(),
            params.get(ix.ff_b1).values(),
            ff,
            &mut tr.z1[..t * ff],
        );
        for (r, &z) in tr.r1[..t * ff].iter_mut().zip(tr.z1[..t * ff].iter()) {
            *r = if z > S::zero() { z } else { S::zero() };
        }
        affine(
            &tr.r1[..t * ff],
            t,
            ff,
            params.get(ix.ff_w2).values(),
            params.get(ix.ff_b2).values(),
            d,
            h_out,
        );
        for (hv, &h1v) in h_out.iter_mut().zip(tr.h1[..t * d].iter()) {
            *hv += h1v;
        }
    }

    // Mean pooling over tiles, then the tanh head.
    let h_last = &ws.h[cfg.layers][..t * d];
    let inv_t = S::one() / S::from_f64_lossy(t as f64);
    for (j, p) in ws.pooled.iter_mut().enumerate() {
        let mut acc = S::zero();
        for row in 0..t {
            acc += h_last[row * d + j];
        }
        *p = acc * inv_t;
    }
    let (w1, b1, w2, b2) = head_ix(cfg);
    affine(
        &ws.pooled,
        1,
        d,
        params.get(w1).values(),
        params.get(b1).values(),
        d,
        &mut ws.u1_pre,
    );
    for (u, &z) in ws.u1.iter_mut().zip(ws.u1_pre.iter()) {
        *u = if z > S::zero() { z } else { S::zero() };
    }
    let y = dot(params.get(w2).values(), &ws.u1) + params.get(b2).values()[0];
    ws.v_out = y.tanh();
    Ok(ws.v_out)
}

pub(crate) fn backward<S: Scalar>(
    cfg: &AttentionNetConfig,
    params: &ParamSet<S>,
    ws: &mut AttnWorkspace<S>,
    d_out: S,
    grads: &mut ParamSet<S>,
) {
    let (t, d, ff, heads) = (ws.t_cur, cfg.embed_dim, cfg.ff_dim, cfg.heads);
    let dh_head = d / heads;
    let inv_sqrt = S::from_f64_lossy(1.0 / (dh_head as f64).sqrt());

    // Head: v = tanh(y).
    let dy = d_out * (S::one() - ws.v_out * ws.v_out);
    let (w1, b1, w2, b2) = head_ix(cfg);
    {
        let gw2 = grads.get_mut(w2);
        axpy(dy, &ws.u1, gw2.values_mut());
    }
    grads.get_mut(b2).values_mut()[0] += dy;
    for (du, &w) in ws.du1.iter_mut().zip(params.get(w2).values()) {
        *du = dy * w;
    }
    for (du, &z) in ws.du1.iter_mut().zip(ws.u1_pre.iter()) {
        if z <= S::zero() {
            *du = S::zero();
        }
    }
    ws.dpool.iter_mut().for_each(|x| *x = S::zero());
    {
        let (gw1, gb1) = grads_pair(grads, w1, b1);
        affine_backward(
            &ws.pooled,
            1,
            d,
            params.get(w1).values(),
            d,
            &ws.du1,
            gw1,
            gb1,
            &mut ws.dpool,
        );
    }

    // Pool: every tile row receives dpool / t.
    let inv_t = S::one() / S::from_f64_lossy(t as f64);
    for row in 0..t {
        for (x, &g) in ws.dh[row * d..(row + 1) * d]
            .iter_mut()
            .zip(ws.dpool.iter())
        {
            *x = g * inv_t;
        }
    }

    for l in (0..cfg.layers).rev() {
        let ix = layer_ix(cfg, l);
        let tr = &ws.layers[l];
        let h_in = &ws.h[l][..t * d];

        // h_out = h1 + ff2(relu(ff1(ln2(h1)))): split the residual.
        ws.dh1[..t * d].copy_from_slice(&ws.dh[..t * d]);
        ws.dz1[..t * ff].iter_mut().for_each(|x| *x = S::zero());
        {
            let (gw, gb) = grads_pair(grads, ix.ff_w2, ix.ff_b2);
            affine_backward(
                &tr.r1[..t * ff],
                t,
                ff,
                params.get(ix.ff_w2).values(),
                d,
                &ws.dh[..t * d],
                gw,
                gb,
                &mut ws.dz1[..t * ff],
            );
        }
        for (g, &z) in ws.dz1[..t * ff].iter_mut().zip(tr.z1[..t * ff].iter()) {
            if z <= S::zero() {
                *g = S::zero();
            }
        }
        ws.dtmp[..t * d].iter_mut().for_each(|x| *x = S::zero());
        {
            let (gw, gb) = grads_pair(grads, ix.ff_w1, ix.ff_b1);
            affine_backward(
                &tr.b[..t * d],
                t,
                d,
                params.get(ix.ff_w1).values(),
                ff,
                &ws.dz1[..t * ff],
                gw,
                gb,
                &mut ws.dtmp[..t * d],
            );
        }
        {
            let (gg, gb) = grads_pair(grads, ix.ln2_g, ix.ln2_b);
            layer_norm_backward(
                &tr.h1[..t * d],
                t,
                d,
                params.get(ix.ln2_g).values(),
                &tr.mu2,
                &tr.rstd2,
                &ws.dtmp[..t * d],
                gg,
                gb,
                &mut ws.dh1[..t * d],
            );
        }

        // h1 = h_in + Wo(attn_out).
        ws.dattn[..t * d].iter_mut().for_each(|x| *x = S::zero());
        {
            let (gw, gb) = grads_pair(grads, ix.wo, ix.bo);
            affine_backward(
                &tr.attn_out[..t * d],
                t,
                d,
                params.get(ix.wo).values(),
                d,
                &ws.dh1[..t * d],
                gw,
                gb,
                &mut ws.dattn[..t * d],
            );
        }

        // Attention core.
        for buf in [&mut ws.dq, &mut ws.dk, &mut ws.dv] {
            buf[..t * d].iter_mut().for_each(|x| *x = S::zero());
        }
        for head in 0..heads {
            let off = head * dh_head;
            for row in 0..t {
                let datt = &ws.dattn[row * d + off..row * d + off + dh_head];
                let p_base = (head * ws.t_cap + row) * ws.t_cap;
                let p_row = &tr.probs[p_base..p_base + t];
                for (u, dp) in ws.dp_row[..t].iter_mut().enumerate() {
                    *dp = dot(datt, &tr.v[u * d + off..u * d + off + dh_head]);
                }
                softmax_row_backward(p_row, &mut ws.dp_row[..t]);
                let qr = &tr.q[row * d + off..row * d + off + dh_head];
                #[allow(clippy::needless_range_loop)]
                for u in 0..t {
                    let ds = ws.dp_row[u] * inv_sqrt;
                    axpy(
                        ds,
                        &tr.k[u * d + off..u * d + off + dh_head],
                        &mut ws.dq[row * d + off..row * d + off + dh_head],
                    );
                    axpy(ds, qr, &mut ws.dk[u * d + off..u * d + off + dh_head]);
                    axpy(
                        p_row[u],
                        datt,
                        &mut ws.dv[u * d + off..u * d + off + dh_head],
                    );
                }
            }
        }

        // Back through the three projections into the shared LN1 output.
        ws.dtmp[..t * d].iter_mut().for_each(|x| *x = S::zero());
        {
            let (gw, gb) = grads_pair(grads, ix.wq, ix.bq);
            affine_backward(
                &tr.a[..t * d],
                t,
                d,
                params.get(ix.wq).values(),
                d,
                &ws.dq[..t * d],
                gw,
                gb,
                &mut ws.dtmp[..t * d],
            );
        }
        {
            let (gw, gb) = grads_pair(grads, ix.wk, ix.bk);
            affine_backward(
                &tr.a[..t * d],
                t,
                d,
                params.get(ix.wk).values(),
                d,
                &ws.dk[..t * d],
                gw,
                gb,
                &mut ws.dtmp[..t * d],
            );
        }
        {
            let (gw, gb) = grads_pair(grads, ix.wv, ix.bv);
            affine_backward(
                &tr.a[..t * d],
                t,
                d,
                params.get(ix.wv).values(),
                d,
                &ws.dv[..t * d],
                gw,
                gb,
                &mut ws.dtmp[..t * d],
            );
        }

        // dh_in = dh1 (residual) + LN1 path.
        ws.dh[..t * d].copy_from_slice(&ws.dh1[..t * d]);
        {
            let (gg, gb) = grads_pair(grads, ix.ln1_g, ix.ln1_b);
            layer_norm_backward(
                h_in,
                t,
                d,
                params.get(ix.ln1_g).values(),
                &tr.mu1,
                &tr.rstd1,
                &ws.dtmp[..t * d],
                gg,
                gb,
                &mut ws.dh[..t * d],
            );
        }
    }

    // Embedding (and learned positional table).
    if cfg.positional_mode == super::PositionalMode::Learned {
        let gpos = grads.get_mut(LEARNED_POS_INDEX);
        for row in 0..t {
            let slot = ws.slots[row];
            axpy(
                S::one(),
                &ws.dh[row * d..(row + 1) * d],
                &mut gpos.values_mut()[slot * d..(slot + 1) * d],
            );
        }
    }
    let f = cfg.feature_dim;
    ws.denc[..t * f].iter_mut().for_each(|x| *x = S::zero());
    let (gw, gb) = grads_pair(grads, 0, 1);
    affine_backward(
        &ws.enc[..t * f],
        t,
        f,
        params.get(0).values(),
        d,
        &ws.dh[..t * d],
        gw,
        gb,
        &mut ws.denc[..t * f],
    );
}

/// Two disjoint mutable tensors out of one gradient set.
fn grads_pair<S: Scalar>(grads: &mut ParamSet<S>, a: usize, b: usize) -> (&mut [S], &mut [S]) {
    assert_ne!(a, b);
    let (lo, hi, swapped) = if a < b { (a, b, false) } else { (b, a, true) };
    let (left, right) = grads.tensors_split_at_mut(hi);
    let ta = &mut left[lo];
    let tb = &mut right[0];
    if swapped {
        (tb.values_mut(), ta.values_mut())
    } else {
        (ta.values_mut(), tb.values_mut())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{GameId, GameState};
    use crate::neural::{
        Architecture, AttentionNetConfig, NetPreset, PositionalMode, ValueNet, Workspace,
    };
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_net(game: GameId, seed: u64) -> ValueNet<f64> {
        let cfg = AttentionNetConfig::for_game(
            &game.spec(),
            NetPreset::Small,
            PositionalMode::Sinusoidal,
        );
        ValueNet::new(Architecture::Attention(cfg), seed).unwrap()
    }

    fn random_encoding(tiles: usize, features: usize, seed: u64) -> TileEncoding<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut enc = TileEncoding::zeroed(tiles, features);
        let mover = rng.gen_bool(0.5);
        for i in 0..tiles {
            let hot = rng.gen_range(0..features - 1);
            let row = enc.row_mut(i);
            row[hot] = 1.0;
            row[features - 1] = if mover { 1.0 } else { 0.0 };
        }
        enc
    }

    #[test]
    fn single_tile_attends_to_itself_with_weight_one() {
        let cfg = AttentionNetConfig {
            embed_dim: 8,
            heads: 2,
            layers: 1,
            ff_dim: 16,
            positional_mode: PositionalMode::Sinusoidal,
            feature_dim: 3,
            max_tiles: 4,
        };
        let net: ValueNet<f64> = ValueNet::new(Architecture::Attention(cfg), 5).unwrap();
        let enc = random_encoding(1, 3, 9);
        let mut ws = net.workspace();
        net.forward(&enc, &mut ws).unwrap();
        let Workspace::Attention(ws) = &ws else {
            unreachable!()
        };
        for head in 0..2 {
            let rows = ws.attention_rows(0, head);
            assert_eq!(rows.len(), 1);
            assert!((rows[0][0] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zeroed_query_projection_gives_uniform_attention() {
        let mut net = small_net(GameId::TicTacToe, 3);
        let Architecture::Attention(cfg) = net.arch().clone() else {
            unreachable!()
        };
        for l in 0..cfg.layers {
            let ix = layer_ix(&cfg, l);
            net.params_mut().get_mut(ix.wq).fill(0.0);
            net.params_mut().get_mut(ix.bq).fill(0.0);
        }
        let enc = random_encoding(9, 4, 4);
        let mut ws = net.workspace();
        net.forward(&enc, &mut ws).unwrap();
        let Workspace::Attention(ws) = &ws else {
            unreachable!()
        };
        for l in 0..cfg.layers {
            for head in 0..cfg.heads {
                for row in ws.attention_rows(l, head) {
                    for p in row {
                        assert!((p - 1.0 / 9.0).abs() < 1e-12, "p {p}");
                    }
                }
            }
        }
    }

    #[test]
    fn attention_rows_sum_to_one_on_random_inputs() {
        let net = small_net(GameId::Reversi, 11);
        let mut ws = net.workspace();
        for seed in 0..5 {
            let enc = random_encoding(64, 4, seed);
            net.forward(&enc, &mut ws).unwrap();
            let Workspace::Attention(inner) = &ws else {
                unreachable!()
            };
            for l in 0..2 {
                for head in 0..2 {
                    for row in inner.attention_rows(l, head) {
                        let sum: f64 = row.iter().sum();
                        assert!((sum - 1.0).abs() < 1e-5, "sum {sum}");
                    }
                }
            }
        }
    }

    #[test]
    fn zero_parameters_give_zero_output() {
        let mut net = small_net(GameId::TicTacToe, 1);
        for i in 0..net.params().len() {
            net.params_mut().get_mut(i).fill(0.0);
        }
        let enc = random_encoding(9, 4, 2);
        let mut ws = net.workspace();
        assert_eq!(net.forward(&enc, &mut ws).unwrap(), 0.0);
    }

    #[test]
    fn output_stays_strictly_inside_unit_interval() {
        for seed in 0..8 {
            let net = small_net(GameId::Connect4, seed);
            let mut ws = net.workspace();
            let enc = random_encoding(42, 4, seed + 100);
            let v = net.forward(&enc, &mut ws).unwrap();
            assert!(v > -1.0 && v < 1.0, "v {v}");
        }
    }

    #[test]
    fn co_permuting_rows_and_positional_slots_is_invariant() {
        let net = small_net(GameId::Breakthrough(6), 21);
        let mut ws = net.workspace();
        let state = GameState::initial(GameId::Breakthrough(6));
        let enc: TileEncoding<f64> = state.encode_tiles(None).unwrap();
        let base = net.forward(&enc, &mut ws).unwrap();

        let perm = crate::games::TilePermutation::random(36, 77);
        let permuted = enc.permuted(&perm);
        let slots: Vec<usize> = (0..36).map(|i| perm.map(i)).collect();
        let moved = net
            .forward_with_position_slots(&permuted, &slots, &mut ws)
            .unwrap();
        assert!((base - moved).abs() < 1e-5, "base {base} moved {moved}");
    }

    #[test]
    fn rejects_wrong_feature_count() {
        let net = small_net(GameId::TicTacToe, 1);
        let enc = random_encoding(9, 3, 2);
        let mut ws = net.workspace();
        assert!(net.forward(&enc, &mut ws).is_err());
    }
}
