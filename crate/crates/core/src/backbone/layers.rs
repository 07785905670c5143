use crate::numeric::Matrix;

use super::{Activation, Backbone, BackboneError, BackboneInput, LayerKind};

enum Cache {
    Dense { x: Matrix, z: Matrix, rows: usize, cols: usize },
    Shared { x: Matrix, z: Matrix },
    MaxPool { argmax: Vec<usize>, width: usize },
    Message(Box<MessageCache>),
    Gin { input: Matrix, prop: Matrix, mixed: Matrix, z: Matrix },
    Sum { rows: usize },
}

struct MessageCache {
    pairs: Vec<(usize, usize)>,
    width: usize,
    e: Matrix,
    z1: Matrix,
    a1: Matrix,
    z2: Matrix,
    u: Matrix,
    z3: Matrix,
    a3: Matrix,
}

pub(super) struct Trace {
    caches: Vec<Cache>,
    pattern: Vec<u32>,
    pub output: Matrix,
}

impl Trace {
    pub fn pattern(&self) -> Vec<u32> {
        self.pattern.clone()
    }
}

fn weights(p: &[f64], fan_in: usize, fan_out: usize) -> Matrix {
    let mut w = Matrix::zeros(fan_in, fan_out);
    w.as_mut_slice().copy_from_slice(&p[..fan_in * fan_out]);
    w
}

/// `x W + 1bᵀ` with `W` row-major in `p`, followed by `b`.
fn affine(x: &Matrix, p: &[f64], fan_in: usize, fan_out: usize) -> Matrix {
    let mut z = x.matmul(&weights(p, fan_in, fan_out));
    let b = &p[fan_in * fan_out..fan_in * fan_out + fan_out];
    for i in 0..z.rows() {
        z.row_mut(i).iter_mut().zip(b).for_each(|(v, bv)| *v += bv);
    }
    z
}

/// Accumulates `∂W = xᵀ dz`, `∂b = 1ᵀ dz` into `g`; returns `dz Wᵀ`.
fn affine_back(x: &Matrix, p: &[f64], fan_in: usize, fan_out: usize, dz: &Matrix, g: &mut [f64]) -> Matrix {
    for i in 0..x.rows() {
        let xr = x.row(i);
        let dr = dz.row(i);
        for (a, xa) in xr.iter().enumerate() {
            if *xa == 0.0 {
                continue;
            }
            let gw = &mut g[a * fan_out..(a + 1) * fan_out];
            gw.iter_mut().zip(dr).for_each(|(gv, d)| *gv += xa * d);
        }
        let gb = &mut g[fan_in * fan_out..fan_in * fan_out + fan_out];
        gb.iter_mut().zip(dr).for_each(|(gv, d)| *gv += d);
    }
    dz.matmul_transposed(&weights(p, fan_in, fan_out))
}

fn activate(z: &Matrix, act: Activation, pattern: &mut Vec<u32>) -> Matrix {
    if act == Activation::Relu {
        pattern.extend(z.as_slice().iter().map(|&v| u32::from(v > 0.0)));
    }
    z.map(|v| act.apply(v))
}

fn gate(d: &Matrix, z: &Matrix, act: Activation) -> Matrix {
    let mut out = d.clone();
    out.as_mut_slice().iter_mut().zip(z.as_slice()).for_each(|(o, &zv)| *o *= act.derivative(zv));
    out
}

fn check_width(layer: usize, expected: usize, found: usize) -> Result<(), BackboneError> {
    if expected != found {
        return Err(BackboneError::WidthMismatch { layer, expected, found });
    }
    Ok(())
}

pub(super) fn forward(bb: &Backbone, params: &[f64], input: &BackboneInput) -> Result<Trace, BackboneError> {
    let n = input.n();
    let mut h = input.features.clone();
    if let Some(max_n) = bb.identifiers {
        if n > max_n {
            return Err(BackboneError::TooManyNodes { found: n, max: max_n });
        }
        let mut ids = Matrix::zeros(n, max_n);
        for i in 0..n {
            ids[(i, i)] = 1.0;
        }
        h = h.hcat(&ids);
    }
    if let Some(a) = &input.adjacency {
        if a.shape() != (n, n) {
            return Err(BackboneError::AdjacencyShape { expected: (n, n), found: a.shape() });
        }
    }
    let h0 = h.clone();
    let mut caches = Vec::with_capacity(bb.specs.len());
    let mut pattern = Vec::new();
    let mut at = 0;
    for (layer, s) in bb.specs.iter().enumerate() {
        let p = &params[at..at + s.param_count()];
        at += s.param_count();
        let (w, o) = (s.in_width, s.out_width);
        match s.kind {
            LayerKind::Dense => {
                let (rows, cols) = h.shape();
                check_width(layer, w, rows * cols)?;
                let x = h.reshape(1, rows * cols);
                let z = affine(&x, p, w, o);
                h = activate(&z, s.activation, &mut pattern);
                caches.push(Cache::Dense { x, z, rows, cols });
            }
            LayerKind::SharedDense => {
                check_width(layer, w, h.cols())?;
                let z = affine(&h, p, w, o);
                let out = activate(&z, s.activation, &mut pattern);
                caches.push(Cache::Shared { x: h, z });
                h = out;
            }
            LayerKind::MaxPoolConcat => {
                check_width(layer, w, h.cols())?;
                let mut argmax = vec![0usize; w];
                let mut pooled = Matrix::zeros(h.rows(), w);
                for (c, best) in argmax.iter_mut().enumerate() {
                    for i in 1..h.rows() {
                        if h[(i, c)] > h[(*best, c)] {
                            *best = i;
                        }
                    }
                    let m = if h.rows() > 0 { h[(*best, c)] } else { 0.0 };
                    for i in 0..h.rows() {
                        pooled[(i, c)] = m;
                    }
                }
                pattern.extend(argmax.iter().map(|&a| a as u32));
                h = h.hcat(&pooled);
                caches.push(Cache::MaxPool { argmax, width: w });
            }
            LayerKind::MessagePassing => {
                let a = input.adjacency.as_ref().ok_or(BackboneError::MissingAdjacency { layer })?;
                check_width(layer, w, h.cols())?;
                let mut pairs = Vec::new();
                for i in 0..n {
                    for j in 0..n {
                        if i != j && a[(i, j)] != 0.0 {
                            pairs.push((i, j));
                        }
                    }
                }
                let mut e = Matrix::zeros(pairs.len(), 2 * w + 1);
                for (r, &(i, j)) in pairs.iter().enumerate() {
                    let row = e.row_mut(r);
                    row[..w].copy_from_slice(h.row(i));
                    row[w..2 * w].copy_from_slice(h.row(j));
                    row[2 * w] = a[(i, j)];
                }
                let (p1, rest) = p.split_at((2 * w + 1) * o + o);
                let (p2, rest) = rest.split_at(o * o + o);
                let (p3, p4) = rest.split_at((w + o) * o + o);
                let z1 = affine(&e, p1, 2 * w + 1, o);
                let a1 = activate(&z1, s.activation, &mut pattern);
                let z2 = affine(&a1, p2, o, o);
                let m = activate(&z2, s.activation, &mut pattern);
                let mut agg = Matrix::zeros(n, o);
                for (r, &(i, _)) in pairs.iter().enumerate() {
                    agg.row_mut(i).iter_mut().zip(m.row(r)).for_each(|(g, v)| *g += v);
                }
                let u = h.hcat(&agg);
                let z3 = affine(&u, p3, w + o, o);
                let a3 = activate(&z3, s.activation, &mut pattern);
                h = affine(&a3, p4, o, o);
                caches.push(Cache::Message(Box::new(MessageCache { pairs, width: w, e, z1, a1, z2, u, z3, a3 })));
            }
            LayerKind::GinId => {
                let a = input.adjacency.as_ref().ok_or(BackboneError::MissingAdjacency { layer })?;
                check_width(layer, w, h.cols())?;
                let eps = p[w * o + o];
                let prop = a.add(&Matrix::identity(n).scale(1.0 + eps));
                let mixed = prop.matmul(&h);
                let z = affine(&mixed, p, w, o);
                let input = std::mem::replace(&mut h, activate(&z, s.activation, &mut pattern));
                caches.push(Cache::Gin { input, prop, mixed, z });
            }
            LayerKind::SumReadout => {
                check_width(layer, w, h.cols())?;
                let mut sum = Matrix::zeros(1, w);
                for i in 0..h.rows() {
                    sum.row_mut(0).iter_mut().zip(h.row(i)).for_each(|(s, v)| *s += v);
                }
                caches.push(Cache::Sum { rows: h.rows() });
                h = sum;
            }
        }
    }
    if bb.skip {
        if h0.cols() < h.cols() || h0.rows() != h.rows() {
            return Err(BackboneError::SkipWidth { needed: h.cols(), found: h0.cols() });
        }
        h.add_assign(&h0.columns(0, h.cols()));
    }
    Ok(Trace { caches, pattern, output: h })
}

pub(super) fn backward(
    bb: &Backbone,
    params: &[f64],
    trace: &Trace,
    upstream: &Matrix,
) -> Result<Vec<f64>, BackboneError> {
    if upstream.shape() != trace.output.shape() {
        return Err(BackboneError::UpstreamShape { expected: trace.output.shape(), found: upstream.shape() });
    }
    let mut grad = vec![0.0; params.len()];
    let mut offsets = vec![0];
    for s in &bb.specs {
        offsets.push(offsets.last().copied().unwrap_or(0) + s.param_count());
    }
    let mut d = upstream.clone();
    for (layer, (s, cache)) in bb.specs.iter().zip(&trace.caches).enumerate().rev() {
        let (lo, hi) = (offsets[layer], offsets[layer + 1]);
        let p = &params[lo..hi];
        let g = &mut grad[lo..hi];
        let (w, o) = (s.in_width, s.out_width);
        d = match cache {
            Cache::Dense { x, z, rows, cols } => {
                let dz = gate(&d, z, s.activation);
                affine_back(x, p, w, o, &dz, g).reshape(*rows, *cols)
            }
            Cache::Shared { x, z } => {
                let dz = gate(&d, z, s.activation);
                affine_back(x, p, w, o, &dz, g)
            }
            Cache::MaxPool { argmax, width } => {
                let mut dx = d.columns(0, *width);
                for (c, &best) in argmax.iter().enumerate() {
                    let total: f64 = (0..d.rows()).map(|i| d[(i, width + c)]).sum();
                    if dx.rows() > 0 {
                        dx[(best, c)] += total;
                    }
                }
                dx
            }
            Cache::Message(mc) => {
                let wd = mc.width;
                let (g1, rest) = g.split_at_mut((2 * wd + 1) * o + o);
                let (g2, rest) = rest.split_at_mut(o * o + o);
                let (g3, g4) = rest.split_at_mut((wd + o) * o + o);
                let (p1, rest) = p.split_at((2 * wd + 1) * o + o);
                let (p2, rest) = rest.split_at(o * o + o);
                let (p3, p4) = rest.split_at((wd + o) * o + o);
                let da3 = affine_back(&mc.a3, p4, o, o, &d, g4);
                let dz3 = gate(&da3, &mc.z3, s.activation);
                let du = affine_back(&mc.u, p3, wd + o, o, &dz3, g3);
                let mut dh = du.columns(0, wd);
                let dagg = du.columns(wd, o);
                let mut dm = Matrix::zeros(mc.pairs.len(), o);
                for (r, &(i, _)) in mc.pairs.iter().enumerate() {
                    dm.row_mut(r).copy_from_slice(dagg.row(i));
                }
                let dz2 = gate(&dm, &mc.z2, s.activation);
                let da1 = affine_back(&mc.a1, p2, o, o, &dz2, g2);
                let dz1 = gate(&da1, &mc.z1, s.activation);
                let de = affine_back(&mc.e, p1, 2 * wd + 1, o, &dz1, g1);
                for (r, &(i, j)) in mc.pairs.iter().enumerate() {
                    let row = de.row(r);
                    dh.row_mut(i).iter_mut().zip(&row[..wd]).for_each(|(a, b)| *a += b);
                    dh.row_mut(j).iter_mut().zip(&row[wd..2 * wd]).for_each(|(a, b)| *a += b);
                }
                dh
            }
            Cache::Gin { input, prop, mixed, z } => {
                let dz = gate(&d, z, s.activation);
                let dmixed = affine_back(mixed, p, w, o, &dz, g);
                g[w * o + o] += dmixed.as_slice().iter().zip(input.as_slice()).map(|(a, b)| a * b).sum::<f64>();
                prop.transpose().matmul(&dmixed)
            }
            Cache::Sum { rows } => {
                let mut dx = Matrix::zeros(*rows, d.cols());
                for i in 0..*rows {
                    dx.row_mut(i).copy_from_slice(d.row(0));
                }
                dx
            }
        };
    }
    Ok(grad)
}
