//! Small convolutional classifier.
//!
//! Images are rows of an input matrix laid out height × width × channels
//! (channels fastest). Each conv block is a 3×3 same-padded convolution,
//! leaky ReLU and a 2×2 max pool. The pooled map feeds two fully connected
//! layers and a softmax head.

use std::collections::BTreeMap;

use featlab_core::activation::{leaky_relu_grad, leaky_relu_scalar, softmax_inplace};
use featlab_core::matrix::{gemm_acc, gemm_tn_acc};
use featlab_core::{Error, Matrix, Result, Rng};
use serde::{Deserialize, Serialize};

use crate::init::fan_in_uniform;
use crate::network::{check_probes, Grads, Labels, Network};

pub const POOL_FINAL: &str = "pool-final";
pub const FC1: &str = "fc1";
pub const FC2: &str = "fc2";

/// How the last conv map becomes a vector.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PoolFinal {
    /// Keep every position (height × width × channels values).
    #[default]
    Flatten,
    /// Mean over positions (one value per channel).
    GlobalAverage,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CnnSpec {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub conv_channels: Vec<usize>,
    pub fc_widths: [usize; 2],
    pub n_classes: usize,
    #[serde(default)]
    pub pool_final: PoolFinal,
    pub leaky_slope: f64,
}

impl CnnSpec {
    /// Three blocks of 16/32/64 channels, fc 128/64.
    pub fn standard(height: usize, width: usize, n_classes: usize) -> CnnSpec {
        CnnSpec {
            height,
            width,
            channels: 3,
            conv_channels: vec![16, 32, 64],
            fc_widths: [128, 64],
            n_classes,
            pool_final: PoolFinal::Flatten,
            leaky_slope: featlab_core::DEFAULT_LEAKY_SLOPE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.height == 0 || self.width == 0 || self.channels == 0 {
            return Err(Error::config("image dimensions must be positive"));
        }
        if self.conv_channels.iter().any(|&c| c == 0) || self.fc_widths.iter().any(|&w| w == 0) {
            return Err(Error::config("zero-width layer"));
        }
        if self.n_classes < 2 {
            return Err(Error::config("classifier needs at least two classes"));
        }
        let k = self.conv_channels.len() as u32;
        let div = 1usize << k;
        if self.height % div != 0 || self.width % div != 0 {
            return Err(Error::config(format!(
                "{}x{} image cannot be halved {k} times",
                self.height, self.width
            )));
        }
        Ok(())
    }

    pub fn input_width(&self) -> usize {
        self.height * self.width * self.channels
    }

    /// `(height, width, in_channels)` seen by conv block `l`.
    fn block_input(&self, l: usize) -> (usize, usize, usize) {
        let cin = if l == 0 { self.channels } else { self.conv_channels[l - 1] };
        (self.height >> l, self.width >> l, cin)
    }

    fn final_map(&self) -> (usize, usize, usize) {
        let k = self.conv_channels.len();
        (self.height >> k, self.width >> k, *self.conv_channels.last().unwrap_or(&self.channels))
    }

    pub fn pooled_width(&self) -> usize {
        let (h, w, c) = self.final_map();
        match self.pool_final {
            PoolFinal::Flatten => h * w * c,
            PoolFinal::GlobalAverage => c,
        }
    }

    fn dense_widths(&self) -> [usize; 4] {
        [self.pooled_width(), self.fc_widths[0], self.fc_widths[1], self.n_classes]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cnn {
    spec: CnnSpec,
    /// Conv kernels, `(9·cin) × cout`, rows ordered (dy, dx, cin).
    conv_w: Vec<Matrix>,
    conv_b: Vec<Vec<f64>>,
    /// fc1, fc2, head.
    dense_w: Vec<Matrix>,
    dense_b: Vec<Vec<f64>>,
}

struct ConvCache {
    patches: Vec<f64>,
    pre: Vec<f64>,
    /// Flat index into `pre` of each pooled maximum.
    argmax: Vec<usize>,
}

struct Trace {
    conv: Vec<ConvCache>,
    /// Post-pool maps of every block, `B × (h·w·c)`.
    maps: Vec<Matrix>,
    pooled: Matrix,
    dense_pre: Vec<Matrix>,
    dense_acts: Vec<Matrix>,
    probs: Matrix,
}

/// Same-padded 3×3 patches: `(b·h·w) × (9·c)`.
fn im2col(x: &[f64], b: usize, h: usize, w: usize, c: usize) -> Vec<f64> {
    let k = 9 * c;
    let mut out = vec![0.0; b * h * w * k];
    for n in 0..b {
        let img = &x[n * h * w * c..(n + 1) * h * w * c];
        for y in 0..h {
            for xx in 0..w {
                let row = ((n * h + y) * w + xx) * k;
                for dy in 0..3 {
                    let sy = y as isize + dy as isize - 1;
                    if sy < 0 || sy >= h as isize {
                        continue;
                    }
                    for dx in 0..3 {
                        let sx = xx as isize + dx as isize - 1;
                        if sx < 0 || sx >= w as isize {
                            continue;
                        }
                        let src = (sy as usize * w + sx as usize) * c;
                        let dst = row + (dy * 3 + dx) * c;
                        out[dst..dst + c].copy_from_slice(&img[src..src + c]);
                    }
                }
            }
        }
    }
    out
}

/// Adjoint of [`im2col`].
fn col2im(cols: &[f64], b: usize, h: usize, w: usize, c: usize) -> Vec<f64> {
    let k = 9 * c;
    let mut out = vec![0.0; b * h * w * c];
    for n in 0..b {
        let img = &mut out[n * h * w * c..(n + 1) * h * w * c];
        for y in 0..h {
            for xx in 0..w {
                let row = ((n * h + y) * w + xx) * k;
                for dy in 0..3 {
                    let sy = y as isize + dy as isize - 1;
                    if sy < 0 || sy >= h as isize {
                        continue;
                    }
                    for dx in 0..3 {
                        let sx = xx as isize + dx as isize - 1;
                        if sx < 0 || sx >= w as isize {
                            continue;
                        }
                        let dst = (sy as usize * w + sx as usize) * c;
                        let src = row + (dy * 3 + dx) * c;
                        for i in 0..c {
                            img[dst + i] += cols[src + i];
                        }
                    }
                }
            }
        }
    }
    out
}

/// 2×2 max pool of activated `act`, returning pooled values and argmax
/// indices. Ties go to the first position in (dy, dx) order.
fn max_pool(act: &[f64], b: usize, h: usize, w: usize, c: usize) -> (Vec<f64>, Vec<usize>) {
    let (ho, wo) = (h / 2, w / 2);
    let mut vals = vec![0.0; b * ho * wo * c];
    let mut idx = vec![0usize; b * ho * wo * c];
    for n in 0..b {
        for y in 0..ho {
            for x in 0..wo {
                for ch in 0..c {
                    let mut best = f64::NEG_INFINITY;
                    let mut at = 0;
                    for (dy, dx) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                        let i = ((n * h + 2 * y + dy) * w + 2 * x + dx) * c + ch;
                        if act[i] > best {
                            best = act[i];
                            at = i;
                        }
                    }
                    let o = ((n * ho + y) * wo + x) * c + ch;
                    vals[o] = best;
                    idx[o] = at;
                }
            }
        }
    }
    (vals, idx)
}

impl Cnn {
    pub fn init(spec: CnnSpec, seed: u64) -> Result<Cnn> {
        spec.validate()?;
        let mut rng = Rng::seed_from(seed).child_named("cnn-init");
        let mut conv_w = Vec::new();
        let mut conv_b = Vec::new();
        for (l, &cout) in spec.conv_channels.iter().enumerate() {
            let (_, _, cin) = spec.block_input(l);
            let fan_in = 9 * cin;
            conv_w.push(Matrix::new(fan_in, cout, fan_in_uniform(&mut rng, fan_in, fan_in * cout))?);
            conv_b.push(vec![0.0; cout]);
        }
        let widths = spec.dense_widths();
        let mut dense_w = Vec::new();
        let mut dense_b = Vec::new();
        for l in 0..3 {
            let (i, o) = (widths[l], widths[l + 1]);
            dense_w.push(Matrix::new(i, o, fan_in_uniform(&mut rng, i, i * o))?);
            dense_b.push(vec![0.0; o]);
        }
        Ok(Cnn {
            spec,
            conv_w,
            conv_b,
            dense_w,
            dense_b,
        })
    }

    pub fn zeros(spec: CnnSpec) -> Result<Cnn> {
        let mut m = Cnn::init(spec, 0)?;
        for p in m.params_mut() {
            p.fill(0.0);
        }
        Ok(m)
    }

    pub fn spec(&self) -> &CnnSpec {
        &self.spec
    }

    fn run(&self, inputs: &Matrix) -> Result<Trace> {
        if inputs.cols() != self.spec.input_width() {
            return Err(Error::config(format!(
                "input width {} does not match {}x{}x{} image",
                inputs.cols(),
                self.spec.height,
                self.spec.width,
                self.spec.channels
            )));
        }
        let b = inputs.rows();
        let slope = self.spec.leaky_slope;
        let mut x = inputs.as_slice().to_vec();
        let mut conv = Vec::new();
        let mut maps = Vec::new();
        for (l, (w, bias)) in self.conv_w.iter().zip(&self.conv_b).enumerate() {
            let (h, wd, cin) = self.spec.block_input(l);
            let cout = w.cols();
            let patches = im2col(&x, b, h, wd, cin);
            let rows = b * h * wd;
            let mut pre = vec![0.0; rows * cout];
            for r in 0..rows {
                pre[r * cout..(r + 1) * cout].copy_from_slice(bias);
            }
            gemm_acc(rows, 9 * cin, cout, &patches, w.as_slice(), &mut pre);
            let act: Vec<f64> = pre.iter().map(|&v| leaky_relu_scalar(v, slope)).collect();
            let (pooled, argmax) = max_pool(&act, b, h, wd, cout);
            maps.push(Matrix::new(b, pooled.len() / b.max(1), pooled.clone())?);
            conv.push(ConvCache { patches, pre, argmax });
            x = pooled;
        }
        let (fh, fw, fc) = self.spec.final_map();
        let pooled = match self.spec.pool_final {
            PoolFinal::Flatten => Matrix::new(b, fh * fw * fc, x)?,
            PoolFinal::GlobalAverage => {
                let area = (fh * fw) as f64;
                Matrix::from_fn(b, fc, |n, ch| {
                    let mut s = 0.0;
                    for p in 0..fh * fw {
                        s += x[(n * fh * fw + p) * fc + ch];
                    }
                    s / area
                })
            }
        };
        let mut dense_pre = Vec::new();
        let mut dense_acts = Vec::new();
        let mut h = pooled.clone();
        for l in 0..3 {
            let mut z = featlab_core::matmul(&h, &self.dense_w[l])?;
            z.add_row_broadcast(&self.dense_b[l]);
            if l < 2 {
                h = z.map(|v| leaky_relu_scalar(v, slope));
                dense_pre.push(z);
                dense_acts.push(h.clone());
            } else {
                for r in 0..z.rows() {
                    softmax_inplace(z.row_mut(r));
                }
                return Ok(Trace {
                    conv,
                    maps,
                    pooled,
                    dense_pre,
                    dense_acts,
                    probs: z,
                });
            }
        }
        unreachable!()
    }
}

impl Network for Cnn {
    /// conv1 W, conv1 b, …, fc1 W, fc1 b, fc2 W, fc2 b, head W, head b.
    fn params(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for (w, b) in self.conv_w.iter().zip(&self.conv_b) {
            out.push(w.as_slice());
            out.push(b.as_slice());
        }
        for (w, b) in self.dense_w.iter().zip(&self.dense_b) {
            out.push(w.as_slice());
            out.push(b.as_slice());
        }
        out
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for (w, b) in self.conv_w.iter_mut().zip(self.conv_b.iter_mut()) {
            out.push(w.as_mut_slice());
            out.push(b.as_mut_slice());
        }
        for (w, b) in self.dense_w.iter_mut().zip(self.dense_b.iter_mut()) {
            out.push(w.as_mut_slice());
            out.push(b.as_mut_slice());
        }
        out
    }

    fn input_width(&self) -> usize {
        self.spec.input_width()
    }

    fn output_width(&self) -> usize {
        self.spec.n_classes
    }

    fn probe_names(&self) -> Vec<String> {
        let mut names: Vec<String> = (1..=self.conv_w.len()).map(|k| format!("conv{k}")).collect();
        names.extend([POOL_FINAL, FC1, FC2].map(String::from));
        names
    }

    fn forward_with_activations(&self, inputs: &Matrix, probes: &[&str]) -> Result<(Matrix, BTreeMap<String, Matrix>)> {
        check_probes(&self.probe_names(), probes)?;
        let mut trace = self.run(inputs)?;
        let mut captured = BTreeMap::new();
        for &p in probes {
            let m = match p {
                POOL_FINAL => trace.pooled.clone(),
                FC1 => trace.dense_acts[0].clone(),
                FC2 => trace.dense_acts[1].clone(),
                conv => {
                    let k: usize = conv[4..].parse().expect("checked above");
                    std::mem::replace(&mut trace.maps[k - 1], Matrix::zeros(0, 0))
                }
            };
            captured.insert(p.to_string(), m);
        }
        Ok((trace.probs, captured))
    }

    fn loss_and_grads(&self, inputs: &Matrix, labels: &Labels) -> Result<(f64, Grads)> {
        let trace = self.run(inputs)?;
        let loss = labels.loss(&trace.probs)?;
        let slope = self.spec.leaky_slope;
        let b = inputs.rows();
        let n_conv = self.conv_w.len();
        let mut grads = vec![Vec::new(); 2 * (n_conv + 3)];

        // dense layers, head first
        let mut delta = labels.output_delta(&trace.probs)?;
        for l in (0..3).rev() {
            let input = if l == 0 { &trace.pooled } else { &trace.dense_acts[l - 1] };
            grads[2 * (n_conv + l)] = featlab_core::matrix::matmul_tn(input, &delta)?.into_vec();
            grads[2 * (n_conv + l) + 1] = delta.column_sums();
            let mut up = featlab_core::matrix::matmul_nt(&delta, &self.dense_w[l])?;
            if l > 0 {
                for (d, &z) in up.as_mut_slice().iter_mut().zip(trace.dense_pre[l - 1].as_slice()) {
                    *d *= leaky_relu_grad(z, slope);
                }
            }
            delta = up;
        }

        // back through the final pooling
        let (fh, fw, fc) = self.spec.final_map();
        let mut d_map: Vec<f64> = match self.spec.pool_final {
            PoolFinal::Flatten => delta.into_vec(),
            PoolFinal::GlobalAverage => {
                let area = (fh * fw) as f64;
                let mut g = vec![0.0; b * fh * fw * fc];
                for n in 0..b {
                    for p in 0..fh * fw {
                        for ch in 0..fc {
                            g[(n * fh * fw + p) * fc + ch] = delta[(n, ch)] / area;
                        }
                    }
                }
                g
            }
        };

        for l in (0..n_conv).rev() {
            let cache = &trace.conv[l];
            let (h, wd, cin) = self.spec.block_input(l);
            let cout = self.conv_w[l].cols();
            let rows = b * h * wd;
            let mut d_pre = vec![0.0; rows * cout];
            for (g, &at) in d_map.iter().zip(&cache.argmax) {
                d_pre[at] += g;
            }
            for (d, &z) in d_pre.iter_mut().zip(&cache.pre) {
                *d *= leaky_relu_grad(z, slope);
            }
            let mut gw = vec![0.0; 9 * cin * cout];
            gemm_tn_acc(rows, 9 * cin, cout, &cache.patches, &d_pre, &mut gw);
            let mut gb = vec![0.0; cout];
            for r in 0..rows {
                for (acc, v) in gb.iter_mut().zip(&d_pre[r * cout..(r + 1) * cout]) {
                    *acc += v;
                }
            }
            grads[2 * l] = gw;
            grads[2 * l + 1] = gb;
            if l > 0 {
                let wt = self.conv_w[l].transpose();
                let mut d_cols = vec![0.0; rows * 9 * cin];
                gemm_acc(rows, cout, 9 * cin, &d_pre, wt.as_slice(), &mut d_cols);
                d_map = col2im(&d_cols, b, h, wd, cin);
            }
        }
        Ok((loss, Grads(grads)))
    }
}
