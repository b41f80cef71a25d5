//! Gated recurrent units with an analytic backward pass.
//!
//! Gate layout follows the common convention with separate input and hidden
//! biases, stacked in the order reset, update, candidate:
//!
//! ```text
//! r  = σ(W_ir x + b_ir + W_hr h + b_hr)
//! z  = σ(W_iz x + b_iz + W_hz h + b_hz)
//! n  = tanh(W_in x + b_in + r ⊙ (W_hn h + b_hn))
//! h' = (1 - z) ⊙ n + z ⊙ h
//! ```

use ndarray::{s, Array1, Array2, Array3, ArrayView2, ArrayView3};
use rand::Rng;

use super::linalg::{gemv_add, gemv_t_add, ger_add, sigmoid, slice, slice_mut};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GruCell {
    /// `3h × d_in`
    pub w_input: Array2<f64>,
    /// `3h × h`
    pub w_hidden: Array2<f64>,
    pub b_input: Array1<f64>,
    pub b_hidden: Array1<f64>,
}

/// Per-step activations of one direction, in processing order, each `T × h`.
#[derive(Debug, Clone)]
pub struct DirectionTrace {
    h: Vec<f64>,
    r: Vec<f64>,
    z: Vec<f64>,
    n: Vec<f64>,
    /// `W_hn h_prev + b_hn`, needed for the reset-gate gradient.
    hn: Vec<f64>,
    reverse: bool,
    width: usize,
}

impl GruCell {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        GruCell {
            w_input: Array2::zeros((3 * hidden, input_dim)),
            w_hidden: Array2::zeros((3 * hidden, hidden)),
            b_input: Array1::zeros(3 * hidden),
            b_hidden: Array1::zeros(3 * hidden),
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(input_dim: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let mut cell = GruCell::zeros(input_dim, hidden);
        super::params::glorot(&mut cell.w_input, rng);
        super::params::glorot(&mut cell.w_hidden, rng);
        cell
    }

    pub fn hidden(&self) -> usize {
        self.w_hidden.ncols()
    }

    pub fn input_dim(&self) -> usize {
        self.w_input.ncols()
    }

    /// Runs over the rows of `x`, last to first when `reverse`.
    pub fn run(&self, x: ArrayView2<'_, f64>, reverse: bool) -> DirectionTrace {
        let h = self.hidden();
        let t_len = x.nrows();
        let mut tr = DirectionTrace {
            h: vec![0.0; t_len * h],
            r: vec![0.0; t_len * h],
            z: vec![0.0; t_len * h],
            n: vec![0.0; t_len * h],
            hn: vec![0.0; t_len * h],
            reverse,
            width: h,
        };
        let w_i = slice(&self.w_input);
        let w_h = slice(&self.w_hidden);
        let b_i = self.b_input.as_slice().expect("contiguous");
        let b_h = self.b_hidden.as_slice().expect("contiguous");
        let mut gi = vec![0.0; 3 * h];
        let mut gh = vec![0.0; 3 * h];
        let zero = vec![0.0; h];
        for k in 0..t_len {
            let pos = if reverse { t_len - 1 - k } else { k };
            let row = x.row(pos);
            let owned;
            let xs: &[f64] = match row.as_slice() {
                Some(s) => s,
                None => {
                    owned = row.to_vec();
                    &owned
                }
            };
            gi.copy_from_slice(b_i);
            gemv_add(&mut gi, w_i, xs);
            let (done, rest) = tr.h.split_at_mut(k * h);
            let h_prev: &[f64] = if k == 0 { &zero } else { &done[(k - 1) * h..] };
            gh.copy_from_slice(b_h);
            gemv_add(&mut gh, w_h, h_prev);
            let base = k * h;
            for j in 0..h {
                let r = sigmoid(gi[j] + gh[j]);
                let z = sigmoid(gi[h + j] + gh[h + j]);
                let n = (gi[2 * h + j] + r * gh[2 * h + j]).tanh();
                tr.r[base + j] = r;
                tr.z[base + j] = z;
                tr.n[base + j] = n;
                tr.hn[base + j] = gh[2 * h + j];
                rest[j] = (1.0 - z) * n + z * h_prev[j];
            }
        }
        tr
    }

    /// Accumulates parameter gradients into `grad` given `d_out`, the
    /// gradient w.r.t. this direction's hidden state at each input position.
    pub fn backward(
        &self,
        x: ArrayView2<'_, f64>,
        trace: &DirectionTrace,
        d_out: ArrayView2<'_, f64>,
        grad: &mut GruCell,
    ) {
        let h = self.hidden();
        let t_len = x.nrows();
        let w_h = slice(&self.w_hidden);
        let mut dh_next = vec![0.0; h];
        let mut dgi = vec![0.0; 3 * h];
        let mut dgh = vec![0.0; 3 * h];
        let zero = vec![0.0; h];
        for k in (0..t_len).rev() {
            let pos = if trace.reverse { t_len - 1 - k } else { k };
            let base = k * h;
            let h_prev: &[f64] = if k == 0 { &zero } else { &trace.h[base - h..base] };
            let mut dh_prev = vec![0.0; h];
            for j in 0..h {
                let dh = d_out[[pos, j]] + dh_next[j];
                let (r, z, n) = (trace.r[base + j], trace.z[base + j], trace.n[base + j]);
                let dn = dh * (1.0 - z);
                let dz = dh * (h_prev[j] - n);
                dh_prev[j] = dh * z;
                let dpre_n = dn * (1.0 - n * n);
                let dr = dpre_n * trace.hn[base + j];
                let dpre_r = dr * r * (1.0 - r);
                let dpre_z = dz * z * (1.0 - z);
                dgi[j] = dpre_r;
                dgi[h + j] = dpre_z;
                dgi[2 * h + j] = dpre_n;
                dgh[j] = dpre_r;
                dgh[h + j] = dpre_z;
                dgh[2 * h + j] = dpre_n * r;
            }
            let row = x.row(pos);
            let owned;
            let xs: &[f64] = match row.as_slice() {
                Some(s) => s,
                None => {
                    owned = row.to_vec();
                    &owned
                }
            };
            ger_add(slice_mut(&mut grad.w_input), &dgi, xs);
            ger_add(slice_mut(&mut grad.w_hidden), &dgh, h_prev);
            for (b, d) in grad.b_input.iter_mut().zip(&dgi) {
                *b += d;
            }
            for (b, d) in grad.b_hidden.iter_mut().zip(&dgh) {
                *b += d;
            }
            gemv_t_add(&mut dh_prev, w_h, &dgh);
            dh_next = dh_prev;
        }
    }
}

impl DirectionTrace {
    /// Number of steps processed.
    pub fn len(&self) -> usize {
        if self.width == 0 {
            0
        } else {
            self.h.len() / self.width
        }
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }
}

/// Bidirectional GRU: forward and backward cells of equal hidden width.
#[derive(Debug, Clone, PartialEq)]
pub struct BiGru {
    pub forward: GruCell,
    pub backward: GruCell,
}

#[derive(Debug, Clone)]
pub struct BiGruTrace {
    fwd: DirectionTrace,
    bwd: DirectionTrace,
}

impl BiGru {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        BiGru {
            forward: GruCell::zeros(input_dim, hidden),
            backward: GruCell::zeros(input_dim, hidden),
        }
    }

    pub fn init(input_dim: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        BiGru {
            forward: GruCell::init(input_dim, hidden, rng),
            backward: GruCell::init(input_dim, hidden, rng),
        }
    }

    pub fn hidden(&self) -> usize {
        self.forward.hidden()
    }

    /// Returns `T × 2h` outputs (forward ⊕ backward per position) and the
    /// trace needed for [`BiGru::backward`].
    pub fn forward(&self, x: ArrayView2<'_, f64>) -> (Array2<f64>, BiGruTrace) {
        let h = self.hidden();
        let fwd = self.forward.run(x, false);
        let bwd = self.backward.run(x, true);
        let t_len = x.nrows();
        let mut out = Array2::zeros((t_len, 2 * h));
        for t in 0..t_len {
            let kb = t_len - 1 - t;
            for j in 0..h {
                out[[t, j]] = fwd.h[t * h + j];
                out[[t, h + j]] = bwd.h[kb * h + j];
            }
        }
        (out, BiGruTrace { fwd, bwd })
    }

    pub fn backward(&self, x: ArrayView2<'_, f64>, trace: &BiGruTrace, d_out: ArrayView2<'_, f64>, grad: &mut BiGru) {
        let h = self.hidden();
        self.forward
            .backward(x, &trace.fwd, d_out.slice(s![.., ..h]), &mut grad.forward);
        self.backward
            .backward(x, &trace.bwd, d_out.slice(s![.., h..]), &mut grad.backward);
    }
}

/// Batched bidirectional GRU over `B × L × d_in` with a prefix mask.
///
/// Each sequence is processed over its unmasked prefix only, so the backward
/// direction starts at the last real token. Masked positions output zeros.
pub fn bigru(seq: ArrayView3<'_, f64>, mask: ArrayView2<'_, bool>, weights: &BiGru) -> Result<Array3<f64>> {
    let (b, l, d_in) = seq.dim();
    if mask.dim() != (b, l) {
        return Err(Error::Shape(format!("mask {:?} does not match batch {:?}", mask.dim(), (b, l))));
    }
    if d_in != weights.forward.input_dim() {
        return Err(Error::Shape(format!(
            "input width {d_in} but GRU expects {}",
            weights.forward.input_dim()
        )));
    }
    if seq.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("bigru input".into()));
    }
    let h = weights.hidden();
    let mut out = Array3::zeros((b, l, 2 * h));
    for i in 0..b {
        let len = super::input::prefix_len(mask.row(i).iter().copied())?;
        let (hidden, _) = weights.forward(seq.slice(s![i, ..len, ..]));
        out.slice_mut(s![i, ..len, ..]).assign(&hidden);
    }
    Ok(out)
}
