//! Sine-transform spectral machinery for the substituted field w = r*u.
//!
//! On the interior nodes the type-I discrete sine transform
//!
//!   S_m = sum_{j=1}^{n} w_j sin(pi m j / (n+1)),   m = 1..=n,
//!
//! is exactly the expansion of w in the Dirichlet eigenmodes sin(k_m r)
//! with k_m = m*pi/r_max, so the radial Laplacian Lap u = (r u)'' / r acts
//! as the diagonal multiplier -k_m^2. The DST-I is its own inverse up to
//! the factor 2/(n+1). Both directions are computed with one complex FFT
//! of length 2(n+1) over the odd extension; transforms of complex fields
//! apply the real kernel to real and imaginary parts at once.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::field::RadialField;
use crate::grid::RadialGrid;

pub struct SineTransform {
    n: usize,
    len: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl SineTransform {
    pub fn new(n: usize) -> Self {
        let len = 2 * (n + 1);
        let fft = FftPlanner::new().plan_fft_forward(len);
        SineTransform { n, len, fft }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::GridMismatch(format!(
                "transform sized for {} nodes, input has {len}",
                self.n
            )));
        }
        Ok(())
    }

    /// Forward DST-I: S_m = sum_j w_j sin(pi m j/(n+1)).
    pub fn forward(&self, w: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(w.len())?;
        let mut z = vec![Complex64::new(0.0, 0.0); self.len];
        for j in 1..=self.n {
            z[j] = w[j - 1];
            z[self.n + 1 + j] = -w[self.n - j];
        }
        self.fft.process(&mut z);
        // Z_m = -2i S_m, so S_m = (i/2) Z_m.
        let half_i = Complex64::new(0.0, 0.5);
        Ok((1..=self.n).map(|m| half_i * z[m]).collect())
    }

    /// Inverse DST-I: w_j = (2/(n+1)) sum_m S_m sin(pi m j/(n+1)).
    pub fn inverse(&self, s: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut w = self.forward(s)?;
        let scale = 2.0 / (self.n as f64 + 1.0);
        for v in &mut w {
            *v *= scale;
        }
        Ok(w)
    }

    /// Cosine evaluation C_j = sum_m a_m cos(pi m j/(n+1)); used to sample
    /// w'(r_j) from sine coefficients times k_m.
    pub fn cos_eval(&self, a: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(a.len())?;
        let mut z = vec![Complex64::new(0.0, 0.0); self.len];
        for m in 1..=self.n {
            z[m] = a[m - 1];
            z[self.n + 1 + m] = a[self.n - m];
        }
        self.fft.process(&mut z);
        // Y_j = 2 C_j.
        Ok((1..=self.n).map(|j| 0.5 * z[j]).collect())
    }
}

/// Apply a spectral multiplier to a field: u -> IDST[ m(k) * DST(r u) ] / r.
/// Multiplier 1 is the identity to round-off; -k^2 is the radial Laplacian;
/// exp(-i k^2 dt) is the free propagator, which preserves the L^2 norm
/// exactly because the DST-I is unitary up to scaling.
pub fn spectral_map<F>(st: &SineTransform, u: &RadialField, multiplier: F) -> Result<RadialField>
where
    F: Fn(f64) -> Complex64,
{
    let grid = *u.grid();
    st.check_len(grid.n())?;
    let mut w: Vec<Complex64> = u
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| v * grid.r(i))
        .collect();
    let mut s = st.forward(&w)?;
    for (m, sm) in s.iter_mut().enumerate() {
        *sm *= multiplier(grid.k(m));
    }
    w = st.inverse(&s)?;
    let values: Vec<Complex64> = w
        .iter()
        .enumerate()
        .map(|(i, &v)| v / grid.r(i))
        .collect();
    RadialField::from_values(grid, values)
}

/// Radial Laplacian via the sine diagonalization.
pub fn laplacian(st: &SineTransform, u: &RadialField) -> Result<RadialField> {
    spectral_map(st, u, |k| Complex64::new(-k * k, 0.0))
}

/// Sine coefficients of w = r*u.
pub fn sine_coefficients(st: &SineTransform, u: &RadialField) -> Result<Vec<Complex64>> {
    let grid = u.grid();
    let w: Vec<Complex64> = u
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| v * grid.r(i))
        .collect();
    st.forward(&w)
}

/// Weighted spectral sums 4*pi*(2 dr/(n+1)) * sum weight(k_m) |S_m|^2.
/// With weight 1 this equals the L^2 mass (discrete Parseval), with k^2
/// the squared homogeneous H^1 norm, with |k| the squared H^{1/2} norm.
pub fn weighted_mode_sum<F>(grid: &RadialGrid, coeffs: &[Complex64], weight: F) -> f64
where
    F: Fn(f64) -> f64,
{
    let mut acc = 0.0;
    for (m, c) in coeffs.iter().enumerate() {
        acc += weight(grid.k(m)) * c.norm_sqr();
    }
    4.0 * std::f64::consts::PI * (2.0 * grid.dr() / (grid.n() as f64 + 1.0)) * acc
}

/// Sample u'(r_j) from the sine expansion: w' via the cosine sum, then
/// u' = w'/r - w/r^2.
pub fn radial_derivative(st: &SineTransform, u: &RadialField) -> Result<Vec<Complex64>> {
    let grid = u.grid();
    let w: Vec<Complex64> = u
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| v * grid.r(i))
        .collect();
    let s = st.forward(&w)?;
    let sk: Vec<Complex64> = s
        .iter()
        .enumerate()
        .map(|(m, &c)| c * grid.k(m))
        .collect();
    let scale = 2.0 / (grid.n() as f64 + 1.0);
    let wprime = st.cos_eval(&sk)?;
    Ok((0..grid.n())
        .map(|i| {
            let r = grid.r(i);
            scale * wprime[i] / r - w[i] / (r * r)
        })
        .collect())
}
