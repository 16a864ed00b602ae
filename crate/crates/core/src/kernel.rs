//! Evaluation of the risk and its gradient over a dataset.
//!
//! Two paths produce the same numbers up to rounding:
//!
//! * direct: `O(m n d)`, one activation evaluation per neuron and sample;
//!   odd analytic activations use a per-neuron truncated Taylor polynomial
//!   whenever every pre-activation of that neuron lies inside the series
//!   radius, otherwise the closed form;
//! * moment: `d = 1` only, `O(J (m + n))`. Expanding
//!   `sigma(w x) = sum_j c_j (w x)^(2j+1)` splits every sum over neurons and
//!   samples into per-degree moments, so neurons and samples never meet.
//!   Used while `max_k |w_k| max_s |x_s|` stays inside the series radius.

use crate::activation::Activation;
use crate::dataset::Dataset;

/// A truncated tail below this (relative to the leading term) is dropped.
const SERIES_TAIL: f64 = 1e-18;

pub(crate) struct Kernel<'a> {
    data: &'a Dataset,
    act: &'a Activation,
    series: Option<&'static [f64]>,
    radius: f64,
    /// d = 1 moment path: `v_s^(2j+1)` with `v = x / x_scale`, row j.
    powers: Vec<f64>,
    x_scale: f64,
    fx: Vec<f64>,
    res: Vec<f64>,
    /// Points stored column by column, `d > 1` only.
    columns: Vec<f64>,
    z: Vec<f64>,
    z2: Vec<f64>,
    acc: Vec<f64>,
    sig: Vec<f64>,
    dsig: Vec<f64>,
    moments: Vec<f64>,
    coef_a: Vec<f64>,
    coef_w: Vec<f64>,
}

/// Dot product with independent partial sums so the loop vectorizes.
fn dot(u: &[f64], v: &[f64]) -> f64 {
    const L: usize = 8;
    let mut acc = [0.0; L];
    let (uc, ur) = u.split_at(u.len() - u.len() % L);
    let (vc, vr) = v[..u.len()].split_at(uc.len());
    for (a, b) in uc.chunks_exact(L).zip(vc.chunks_exact(L)) {
        for i in 0..L {
            acc[i] += a[i] * b[i];
        }
    }
    let tail: f64 = ur.iter().zip(vr).map(|(a, b)| a * b).sum();
    acc.iter().sum::<f64>() + tail
}

fn max_abs(v: &[f64]) -> f64 {
    const L: usize = 8;
    let mut acc = [0.0f64; L];
    let chunks = v.chunks_exact(L);
    let rest = chunks.remainder().iter().fold(0.0f64, |m, x| m.max(x.abs()));
    for c in chunks {
        for i in 0..L {
            acc[i] = acc[i].max(c[i].abs());
        }
    }
    acc.iter().fold(rest, |m, x| m.max(*x))
}

fn truncation(coeffs: &[f64], zmax: f64) -> usize {
    let z2 = zmax * zmax;
    let mut power = 1.0;
    for (j, c) in coeffs.iter().enumerate() {
        if j > 0 && c.abs() * power <= SERIES_TAIL {
            return j;
        }
        power *= z2;
    }
    coeffs.len()
}

impl<'a> Kernel<'a> {
    pub(crate) fn new(data: &'a Dataset, act: &'a Activation) -> Self {
        let n = data.n();
        let series = act.odd_series();
        let x_norm_max = (0..n)
            .map(|s| data.point(s).iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        let mut kernel = Self {
            data,
            act,
            series,
            radius: act.series_radius(),
            powers: Vec::new(),
            x_scale: 0.0,
            fx: vec![0.0; n],
            res: vec![0.0; n],
            columns: Vec::new(),
            z: vec![0.0; n],
            z2: vec![0.0; n],
            acc: vec![0.0; n],
            sig: Vec::new(),
            dsig: Vec::new(),
            moments: Vec::new(),
            coef_a: Vec::new(),
            coef_w: Vec::new(),
        };
        let d = data.d();
        if d > 1 {
            let points = data.points();
            kernel.columns = (0..d).flat_map(|i| (0..n).map(move |s| points[s * d + i])).collect();
        }
        if let (Some(c), 1) = (series, data.d()) {
            if x_norm_max > 0.0 {
                kernel.x_scale = x_norm_max;
                let terms = c.len();
                let mut powers = vec![0.0; terms * n];
                for s in 0..n {
                    let v = data.points()[s] / x_norm_max;
                    let v2 = v * v;
                    let mut p = v;
                    for j in 0..terms {
                        powers[j * n + s] = p;
                        p *= v2;
                    }
                }
                kernel.powers = powers;
            }
        }
        kernel
    }

    fn moment_terms(&self, w: &[f64]) -> Option<usize> {
        if self.powers.is_empty() {
            return None;
        }
        let wmax = w.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let umax = wmax * self.x_scale;
        if umax > self.radius {
            return None;
        }
        Some(truncation(self.series?, umax))
    }

    /// Risk only.
    pub(crate) fn loss(&mut self, a: &[f64], w: &[f64]) -> f64 {
        match self.moment_terms(w) {
            Some(terms) => self.moment_forward(a, w, terms),
            None => self.direct_forward(a, w, false),
        }
        self.finish_residuals()
    }

    /// Risk, with the gradient written to `grad_a` (length m) and `grad_w`
    /// (row-major m x d).
    pub(crate) fn eval(&mut self, a: &[f64], w: &[f64], grad_a: &mut [f64], grad_w: &mut [f64]) -> f64 {
        match self.moment_terms(w) {
            Some(terms) => {
                self.moment_forward(a, w, terms);
                let loss = self.finish_residuals();
                self.moment_backward(a, w, terms, grad_a, grad_w);
                loss
            }
            None => {
                self.direct_forward(a, w, true);
                let loss = self.finish_residuals();
                self.direct_backward(a, grad_a, grad_w);
                loss
            }
        }
    }

    /// Turns `fx` into `res = rho (f_theta - f)` and returns the risk.
    fn finish_residuals(&mut self) -> f64 {
        let rho = self.data.weights();
        let y = self.data.targets();
        let mut loss = 0.0;
        for s in 0..self.fx.len() {
            let r = self.fx[s] - y[s];
            loss += rho[s] * r * r;
            self.res[s] = rho[s] * r;
        }
        0.5 * loss
    }

    fn moment_forward(&mut self, a: &[f64], w: &[f64], terms: usize) {
        let c = self.series.expect("moment path requires a series");
        let n = self.fx.len();
        self.moments.clear();
        self.moments.resize(terms, 0.0);
        for (ak, wk) in a.iter().zip(w) {
            let u = wk * self.x_scale;
            let u2 = u * u;
            let mut p = ak * u;
            for mom in self.moments.iter_mut() {
                *mom += p;
                p *= u2;
            }
        }
        self.fx.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..terms {
            let coef = c[j] * self.moments[j];
            let row = &self.powers[j * n..(j + 1) * n];
            for (f, p) in self.fx.iter_mut().zip(row) {
                *f += coef * p;
            }
        }
    }

    fn moment_backward(&mut self, a: &[f64], w: &[f64], terms: usize, grad_a: &mut [f64], grad_w: &mut [f64]) {
        let c = self.series.expect("moment path requires a series");
        let n = self.fx.len();
        self.coef_a.clear();
        self.coef_w.clear();
        for j in 0..terms {
            let row = &self.powers[j * n..(j + 1) * n];
            let s_j = dot(row, &self.res);
            self.coef_a.push(c[j] * s_j);
            self.coef_w.push((2 * j + 1) as f64 * c[j] * s_j * self.x_scale);
        }
        for k in 0..a.len() {
            let u = w[k] * self.x_scale;
            let u2 = u * u;
            let mut ga = 0.0;
            let mut gw = 0.0;
            for j in (0..terms).rev() {
                ga = ga * u2 + self.coef_a[j];
                gw = gw * u2 + self.coef_w[j];
            }
            grad_a[k] = u * ga;
            grad_w[k] = a[k] * gw;
        }
    }

    /// Pre-activations of neuron `k` into `self.z`; returns `max |z|`.
    fn preactivations(&mut self, wk: &[f64]) -> f64 {
        let d = wk.len();
        if d == 1 {
            let w0 = wk[0];
            for (z, x) in self.z.iter_mut().zip(self.data.points()) {
                *z = w0 * x;
            }
        } else {
            let n = self.z.len();
            let w0 = wk[0];
            for (z, x) in self.z.iter_mut().zip(&self.columns[..n]) {
                *z = w0 * x;
            }
            for (i, &wi) in wk.iter().enumerate().skip(1) {
                for (z, x) in self.z.iter_mut().zip(&self.columns[i * n..(i + 1) * n]) {
                    *z += wi * x;
                }
            }
        }
        max_abs(&self.z)
    }

    /// `sigma(z)` for the current `self.z`, written to `out`.
    fn activate(&mut self, zmax: f64, out_sig: &mut [f64], out_dsig: Option<&mut [f64]>) {
        match self.series {
            Some(c) if zmax <= self.radius => {
                let terms = truncation(c, zmax);
                for (z2, z) in self.z2.iter_mut().zip(&self.z) {
                    *z2 = z * z;
                }
                self.acc.iter_mut().for_each(|acc| *acc = c[terms - 1]);
                for j in (0..terms - 1).rev() {
                    let cj = c[j];
                    for (acc, z2) in self.acc.iter_mut().zip(&self.z2) {
                        *acc = *acc * z2 + cj;
                    }
                }
                for ((o, acc), z) in out_sig.iter_mut().zip(&self.acc).zip(&self.z) {
                    *o = acc * z;
                }
            }
            _ => {
                for (o, &z) in out_sig.iter_mut().zip(&self.z) {
                    *o = self.act.value(z);
                }
            }
        }
        if let Some(dsig) = out_dsig {
            for (o, &z) in dsig.iter_mut().zip(&self.z) {
                *o = self.act.first(z);
            }
        }
    }

    /// `sigma'` is recomputed from `sigma` for tanh and identity; other
    /// activations keep a separate buffer.
    fn needs_dsig(&self) -> bool {
        self.series.is_none()
    }

    fn direct_forward(&mut self, a: &[f64], w: &[f64], keep: bool) {
        let n = self.fx.len();
        let m = a.len();
        let d = self.data.d();
        self.fx.iter_mut().for_each(|v| *v = 0.0);
        let mut sig_row = vec![0.0; n];
        let mut dsig_row = vec![0.0; n];
        let keep_dsig = keep && self.needs_dsig();
        if keep {
            self.sig.resize(m * n, 0.0);
            if keep_dsig {
                self.dsig.resize(m * n, 0.0);
            }
        }
        for k in 0..m {
            let zmax = self.preactivations(&w[k * d..(k + 1) * d]);
            self.activate(zmax, &mut sig_row, if keep_dsig { Some(&mut dsig_row) } else { None });
            let ak = a[k];
            for (f, s) in self.fx.iter_mut().zip(&sig_row) {
                *f += ak * s;
            }
            if keep {
                self.sig[k * n..(k + 1) * n].copy_from_slice(&sig_row);
                if keep_dsig {
                    self.dsig[k * n..(k + 1) * n].copy_from_slice(&dsig_row);
                }
            }
        }
    }

    fn direct_backward(&mut self, a: &[f64], grad_a: &mut [f64], grad_w: &mut [f64]) {
        let n = self.fx.len();
        let d = self.data.d();
        let points = self.data.points();
        let columns = &self.columns;
        let identity = self.act.is_identity();
        let separate = self.needs_dsig();
        for k in 0..a.len() {
            let sig = &self.sig[k * n..(k + 1) * n];
            grad_a[k] = dot(sig, &self.res);
            let g = &mut self.acc;
            if separate {
                let dsig = &self.dsig[k * n..(k + 1) * n];
                for ((g, r), ds) in g.iter_mut().zip(&self.res).zip(dsig) {
                    *g = r * ds;
                }
            } else if identity {
                g.copy_from_slice(&self.res);
            } else {
                for ((g, r), s) in g.iter_mut().zip(&self.res).zip(sig) {
                    *g = r * (1.0 - s * s);
                }
            }
            let row = &mut grad_w[k * d..(k + 1) * d];
            if d == 1 {
                row[0] = a[k] * dot(g, points);
            } else {
                for (i, r) in row.iter_mut().enumerate() {
                    let x = &columns[i * n..(i + 1) * n];
                    *r = a[k] * dot(g, x);
                }
            }
        }
    }
}
