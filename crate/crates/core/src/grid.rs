//! Uniform radial grid with Dirichlet truncation.
//!
//! Interior nodes r_j = j*dr for j = 1..=n with dr = r_max/(n+1). The
//! endpoints r = 0 and r = r_max carry implicit zero values of w = r*u,
//! which makes the plain node sum below exactly the composite trapezoid
//! rule for integrands vanishing at both ends. Sine modes k_m = m*pi/r_max
//! diagonalize the radial Laplacian on this grid (see `spectral`).

use crate::error::{Error, Result};

pub const MIN_INTERIOR_NODES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialGrid {
    n: usize,
    r_max: f64,
    dr: f64,
}

impl RadialGrid {
    pub fn new(n: usize, r_max: f64) -> Result<Self> {
        if n < MIN_INTERIOR_NODES {
            return Err(Error::InvalidConfig(format!(
                "grid needs at least {MIN_INTERIOR_NODES} interior nodes, got {n}"
            )));
        }
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "grid r_max must be positive and finite, got {r_max}"
            )));
        }
        let dr = r_max / (n as f64 + 1.0);
        Ok(RadialGrid { n, r_max, dr })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn dr(&self) -> f64 {
        self.dr
    }

    /// Radius of interior node i (0-based storage, so r = (i+1)*dr).
    pub fn r(&self, i: usize) -> f64 {
        (i as f64 + 1.0) * self.dr
    }

    /// Wavenumber of sine mode m (0-based storage, so k = (m+1)*pi/r_max).
    pub fn k(&self, m: usize) -> f64 {
        (m as f64 + 1.0) * std::f64::consts::PI / self.r_max
    }

    pub fn radii(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.r(i)).collect()
    }

    /// Integrate a real radial function sampled on the interior nodes:
    /// 4*pi * sum f_j r_j^2 dr. With f finite at 0 and f(r_max) = 0 this
    /// is the composite trapezoid rule for the volume integral of f.
    pub fn integrate(&self, samples: &[f64]) -> Result<f64> {
        if samples.len() != self.n {
            return Err(Error::GridMismatch(format!(
                "integrand has {} samples, grid has {} nodes",
                samples.len(),
                self.n
            )));
        }
        let mut acc = 0.0;
        for (i, &f) in samples.iter().enumerate() {
            if !f.is_finite() {
                return Err(Error::NonFiniteSample(format!(
                    "integrand sample {i} is {f}"
                )));
            }
            let r = self.r(i);
            acc += f * r * r;
        }
        Ok(4.0 * std::f64::consts::PI * acc * self.dr)
    }

    /// Same quadrature restricted to nodes with r_lo <= r <= r_hi.
    pub fn integrate_shell(&self, samples: &[f64], r_lo: f64, r_hi: f64) -> Result<f64> {
        if samples.len() != self.n {
            return Err(Error::GridMismatch(format!(
                "integrand has {} samples, grid has {} nodes",
                samples.len(),
                self.n
            )));
        }
        let mut acc = 0.0;
        for (i, &f) in samples.iter().enumerate() {
            let r = self.r(i);
            if r < r_lo || r > r_hi {
                continue;
            }
            if !f.is_finite() {
                return Err(Error::NonFiniteSample(format!(
                    "integrand sample {i} is {f}"
                )));
            }
            acc += f * r * r;
        }
        Ok(4.0 * std::f64::consts::PI * acc * self.dr)
    }

    /// Grids are interchangeable only when bitwise identical in shape.
    pub fn same_as(&self, other: &RadialGrid) -> bool {
        self.n == other.n && self.r_max == other.r_max
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_tiny_grids_and_bad_domains() {
        assert!(RadialGrid::new(8, 10.0).is_err());
        assert!(RadialGrid::new(64, 0.0).is_err());
        assert!(RadialGrid::new(64, f64::NAN).is_err());
        assert!(RadialGrid::new(64, -3.0).is_err());
    }

    #[test]
    fn node_and_mode_layout() {
        let g = RadialGrid::new(31, 8.0).unwrap();
        assert_eq!(g.dr(), 0.25);
        assert_eq!(g.r(0), 0.25);
        assert_eq!(g.r(30), 7.75);
        let k1 = g.k(0);
        assert!((k1 - std::f64::consts::PI / 8.0).abs() < 1e-15);
    }

    #[test]
    fn integrate_gaussian_closed_form() {
        // int e^{-2 r^2} dx over R^3 = (pi/2)^{3/2}
        let g = RadialGrid::new(2047, 12.0).unwrap();
        let f: Vec<f64> = g.radii().iter().map(|&r| (-2.0 * r * r).exp()).collect();
        let got = g.integrate(&f).unwrap();
        let want = (std::f64::consts::PI / 2.0).powf(1.5);
        assert!(
            (got - want).abs() / want < 1e-12,
            "got {got}, want {want}"
        );

        // int e^{-3 r^2} dx = (pi/3)^{3/2}
        let f3: Vec<f64> = g.radii().iter().map(|&r| (-3.0 * r * r).exp()).collect();
        let got3 = g.integrate(&f3).unwrap();
        let want3 = (std::f64::consts::PI / 3.0).powf(1.5);
        assert!((got3 - want3).abs() / want3 < 1e-12);
    }

    #[test]
    fn integrate_rejects_non_finite() {
        let g = RadialGrid::new(16, 1.0).unwrap();
        let mut f = vec![0.0; 16];
        f[7] = f64::NAN;
        assert!(matches!(
            g.integrate(&f),
            Err(Error::NonFiniteSample(_))
        ));
    }

    #[test]
    fn shell_integral_splits_the_full_one() {
        let g = RadialGrid::new(255, 6.0).unwrap();
        let f: Vec<f64> = g.radii().iter().map(|&r| (-r * r).exp()).collect();
        let whole = g.integrate(&f).unwrap();
        let mid = 2.0 + 0.5 * g.dr(); // between nodes, so no double count
        let inner = g.integrate_shell(&f, 0.0, mid).unwrap();
        let outer = g.integrate_shell(&f, mid, g.r_max()).unwrap();
        assert!((inner + outer - whole).abs() < 1e-14 * whole.abs().max(1.0));
    }
}
