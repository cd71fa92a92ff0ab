//! Linear IIR filters evaluated as difference equations.
//!
//! A filter is described by feedforward coefficients `b_0..b_P` and feedback
//! coefficients `a_0..a_Q`:
//!
//! ```text
//! y[i] = (b_0 x[i] + ... + b_P x[i-P] - a_1 y[i-1] - ... - a_Q y[i-Q]) / a_0
//! ```
//!
//! Every filter runs element-wise over a vector of independent signals (one per
//! binary weight), with all histories starting at zero.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IirError {
    #[error("{name} = {value} is outside (0, 1]")]
    Domain { name: &'static str, value: f64 },
    #[error("invalid coefficients: {0}")]
    InvalidCoeffs(&'static str),
    #[error("dimension mismatch: expected {expected} elements, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("filter state was built for coefficients of a different shape")]
    StateMismatch,
}

/// Feedforward (`b`) and feedback (`a`) coefficients of a linear filter.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterCoeffs {
    b: Vec<f64>,
    a: Vec<f64>,
}

impl FilterCoeffs {
    pub fn new(b: Vec<f64>, a: Vec<f64>) -> Result<Self, IirError> {
        if b.is_empty() || a.is_empty() {
            return Err(IirError::InvalidCoeffs("coefficient vectors must be non-empty"));
        }
        if a[0] == 0.0 {
            return Err(IirError::InvalidCoeffs("a_0 must be non-zero"));
        }
        if b.iter().chain(a.iter()).any(|c| !c.is_finite()) {
            return Err(IirError::InvalidCoeffs("coefficients must be finite"));
        }
        Ok(Self { b, a })
    }

    /// The pass-through filter `y[i] = x[i]`.
    pub fn identity() -> Self {
        Self {
            b: vec![1.0],
            a: vec![1.0],
        }
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    /// Number of past inputs the filter looks at (`P`).
    pub fn feedforward_order(&self) -> usize {
        self.b.len() - 1
    }

    /// Number of past outputs the filter looks at (`Q`).
    pub fn feedback_order(&self) -> usize {
        self.a.len() - 1
    }

    pub fn order(&self) -> usize {
        self.feedforward_order().max(self.feedback_order())
    }
}

fn check_discount(name: &'static str, value: f64) -> Result<(), IirError> {
    if value > 0.0 && value <= 1.0 {
        Ok(())
    } else {
        Err(IirError::Domain { name, value })
    }
}

/// Exponential moving average `y[i] = (1 - alpha) y[i-1] + alpha x[i]` as a
/// first-order filter: `b = [alpha, 0]`, `a = [1, alpha - 1]`.
pub fn make_ema(alpha: f64) -> Result<FilterCoeffs, IirError> {
    check_discount("alpha", alpha)?;
    Ok(FilterCoeffs {
        b: vec![alpha, 0.0],
        a: vec![1.0, alpha - 1.0],
    })
}

fn convolve(lhs: &[f64], rhs: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; lhs.len() + rhs.len() - 1];
    for (k, slot) in out.iter_mut().enumerate() {
        let lo = k.saturating_sub(rhs.len() - 1);
        let hi = k.min(lhs.len() - 1);
        let mut acc = 0.0;
        for j in lo..=hi {
            acc += lhs[j] * rhs[k - j];
        }
        *slot = acc;
    }
    out
}

/// Two filters applied in series, expressed as one filter whose coefficient
/// vectors are the convolutions of the inputs' coefficient vectors.
pub fn cascade(first: &FilterCoeffs, second: &FilterCoeffs) -> FilterCoeffs {
    FilterCoeffs {
        b: convolve(&first.b, &second.b),
        a: convolve(&first.a, &second.a),
    }
}

/// Direct-form coefficients of momentum (`gamma`) followed by the
/// weight-decay EMA (`alpha`):
///
/// `g[i] = alpha*gamma*grad[i] - (alpha + gamma - 2) g[i-1] - (alpha - 1)(gamma - 1) g[i-2]`
///
/// The closed form is evaluated with the same floating point operations the
/// convolution in [`cascade`] performs, so the two agree bit for bit, and the
/// result is symmetric in `alpha` and `gamma`.
pub fn make_second_order_bnn(alpha: f64, gamma: f64) -> Result<FilterCoeffs, IirError> {
    check_discount("alpha", alpha)?;
    check_discount("gamma", gamma)?;
    let (pa, pg) = (alpha - 1.0, gamma - 1.0);
    Ok(FilterCoeffs {
        b: vec![gamma * alpha, 0.0, 0.0],
        a: vec![1.0, pa + pg, pg * pa],
    })
}

/// Input and output histories for `element_count` independent signals.
///
/// Slot `head` of each ring holds lag 1; lag `j` lives at `(head + j - 1) % len`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    element_count: usize,
    x_len: usize,
    y_len: usize,
    x_hist: Vec<f64>,
    y_hist: Vec<f64>,
    x_head: usize,
    y_head: usize,
}

impl FilterState {
    pub fn new(coeffs: &FilterCoeffs, element_count: usize) -> Self {
        let x_len = coeffs.feedforward_order();
        let y_len = coeffs.feedback_order();
        Self {
            element_count,
            x_len,
            y_len,
            x_hist: vec![0.0; x_len * element_count],
            y_hist: vec![0.0; y_len * element_count],
            x_head: 0,
            y_head: 0,
        }
    }

    pub fn element_count(&self) -> usize {
        self.element_count
    }

    pub fn reset(&mut self) {
        self.x_hist.fill(0.0);
        self.y_hist.fill(0.0);
        self.x_head = 0;
        self.y_head = 0;
    }

    fn fits(&self, coeffs: &FilterCoeffs) -> bool {
        self.x_len == coeffs.feedforward_order() && self.y_len == coeffs.feedback_order()
    }

    /// Output `lag` steps back (`lag >= 1`) for one element, or `None` if the
    /// filter does not keep that much output history.
    pub fn past_output(&self, lag: usize, element: usize) -> Option<f64> {
        if lag == 0 || lag > self.y_len || element >= self.element_count {
            return None;
        }
        let slot = (self.y_head + lag - 1) % self.y_len;
        Some(self.y_hist[slot * self.element_count + element])
    }
}

/// Advances `state` by one time step, writing the filtered signal to `out`.
pub fn step_into(
    coeffs: &FilterCoeffs,
    state: &mut FilterState,
    x: &[f64],
    out: &mut [f64],
) -> Result<(), IirError> {
    let n = state.element_count;
    if !state.fits(coeffs) {
        return Err(IirError::StateMismatch);
    }
    if x.len() != n {
        return Err(IirError::DimensionMismatch {
            expected: n,
            got: x.len(),
        });
    }
    if out.len() != n {
        return Err(IirError::DimensionMismatch {
            expected: n,
            got: out.len(),
        });
    }
    let (p, q) = (state.x_len, state.y_len);
    let a0 = coeffs.a[0];

    for e in 0..n {
        let mut acc = coeffs.b[0] * x[e];
        for j in 1..=p {
            let slot = (state.x_head + j - 1) % p;
            acc += coeffs.b[j] * state.x_hist[slot * n + e];
        }
        for k in 1..=q {
            let slot = (state.y_head + k - 1) % q;
            acc -= coeffs.a[k] * state.y_hist[slot * n + e];
        }
        out[e] = acc / a0;
    }

    if p > 0 {
        state.x_head = (state.x_head + p - 1) % p;
        state.x_hist[state.x_head * n..(state.x_head + 1) * n].copy_from_slice(x);
    }
    if q > 0 {
        state.y_head = (state.y_head + q - 1) % q;
        state.y_hist[state.y_head * n..(state.y_head + 1) * n].copy_from_slice(out);
    }
    Ok(())
}

/// Advances `state` by one time step and returns the filtered signal.
pub fn step(coeffs: &FilterCoeffs, state: &mut FilterState, x: &[f64]) -> Result<Vec<f64>, IirError> {
    let mut out = vec![0.0; state.element_count];
    step_into(coeffs, state, x, &mut out)?;
    Ok(out)
}

/// Response to the unit impulse `(1, 0, 0, ...)` from zero state, `n` samples long.
pub fn impulse_response(coeffs: &FilterCoeffs, n: usize) -> Vec<f64> {
    let mut state = FilterState::new(coeffs, 1);
    let mut out = [0.0];
    (0..n)
        .map(|i| {
            let x = [if i == 0 { 1.0 } else { 0.0 }];
            step_into(coeffs, &mut state, &x, &mut out).expect("state built from coeffs");
            out[0]
        })
        .collect()
}

/// Coefficients paired with their running state.
#[derive(Debug, Clone)]
pub struct LinearFilter {
    coeffs: FilterCoeffs,
    state: FilterState,
}

impl LinearFilter {
    pub fn new(coeffs: FilterCoeffs, element_count: usize) -> Self {
        let state = FilterState::new(&coeffs, element_count);
        Self { coeffs, state }
    }

    pub fn coeffs(&self) -> &FilterCoeffs {
        &self.coeffs
    }

    pub fn state(&self) -> &FilterState {
        &self.state
    }

    /// Swaps in new coefficients of the same shape, keeping the histories.
    pub fn set_coeffs(&mut self, coeffs: FilterCoeffs) -> Result<(), IirError> {
        if !self.state.fits(&coeffs) {
            return Err(IirError::StateMismatch);
        }
        self.coeffs = coeffs;
        Ok(())
    }

    pub fn step(&mut self, x: &[f64]) -> Result<Vec<f64>, IirError> {
        step(&self.coeffs, &mut self.state, x)
    }

    pub fn step_into(&mut self, x: &[f64], out: &mut [f64]) -> Result<(), IirError> {
        step_into(&self.coeffs, &mut self.state, x, out)
    }

    /// Runs a scalar stream through a fresh single-element copy of this filter.
    pub fn filter_stream(coeffs: &FilterCoeffs, input: &[f64]) -> Vec<f64> {
        let mut f = LinearFilter::new(coeffs.clone(), 1);
        let mut out = [0.0];
        input
            .iter()
            .map(|&x| {
                f.step_into(&[x], &mut out).expect("single element");
                out[0]
            })
            .collect()
    }
}
