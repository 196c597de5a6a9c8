//! Complex radial fields sampled on the interior nodes of a `RadialGrid`.
//! Every public constructor and operation keeps all values finite; the
//! solver checks explicitly for contamination before using diagnostics.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::RadialGrid;

#[derive(Debug, Clone, PartialEq)]
pub struct RadialField {
    grid: RadialGrid,
    values: Vec<Complex64>,
}

impl RadialField {
    pub fn zero(grid: RadialGrid) -> Self {
        RadialField {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.n()],
        }
    }

    pub fn from_values(grid: RadialGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid with {} nodes",
                values.len(),
                grid.n()
            )));
        }
        for (i, v) in values.iter().enumerate() {
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::NonFiniteSample(format!("field value {i} is {v}")));
            }
        }
        Ok(RadialField { grid, values })
    }

    pub fn from_fn<F>(grid: RadialGrid, f: F) -> Result<Self>
    where
        F: Fn(f64) -> Complex64,
    {
        let values: Vec<Complex64> = (0..grid.n()).map(|i| f(grid.r(i))).collect();
        RadialField::from_values(grid, values)
    }

    /// Gaussian bump amplitude * e^{-(r/width)^2}.
    pub fn gaussian(grid: RadialGrid, amplitude: f64, width: f64) -> Result<Self> {
        if !(width.is_finite() && width > 0.0) || !amplitude.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "gaussian data needs finite amplitude and positive width, got {amplitude}, {width}"
            )));
        }
        RadialField::from_fn(grid, |r| {
            Complex64::new(amplitude * (-(r / width) * (r / width)).exp(), 0.0)
        })
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    /// L^2 mass int |u|^2 dx.
    pub fn mass(&self) -> Result<f64> {
        self.grid.integrate(&self.density())
    }

    /// Fraction of the mass sitting at r >= frac * r_max; the Dirichlet
    /// truncation is trustworthy only while this stays negligible.
    pub fn boundary_mass_fraction(&self, frac: f64) -> Result<f64> {
        let rho = self.density();
        let total = self.grid.integrate(&rho)?;
        if total == 0.0 {
            return Ok(0.0);
        }
        let outer = self
            .grid
            .integrate_shell(&rho, frac * self.grid.r_max(), self.grid.r_max())?;
        Ok(outer / total)
    }

    /// Pointwise scale: amplitude * u, exact per value.
    pub fn scaled(&self, factor: Complex64) -> Result<Self> {
        let values = self.values.iter().map(|&v| factor * v).collect();
        RadialField::from_values(self.grid, values)
    }

    /// The rescaling u_lambda(x) = lambda * u(lambda x), optionally
    /// conjugated, carried on the grid with outer radius r_max/lambda and
    /// the same node count. The new nodes satisfy lambda * r_j' = r_j, so
    /// no interpolation happens and the scaling identities
    /// |u_lambda|_{H^1}^2 = lambda |u|_{H^1}^2 and |u_lambda|_{L^3} = |u|_{L^3}
    /// (homogeneous seminorms) hold to round-off.
    pub fn rescaled(&self, lambda: f64, conjugate: bool) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "rescale factor must be positive and finite, got {lambda}"
            )));
        }
        let new_grid = RadialGrid::new(self.grid.n(), self.grid.r_max() / lambda)?;
        let values = self
            .values
            .iter()
            .map(|&v| {
                let v = if conjugate { v.conj() } else { v };
                lambda * v
            })
            .collect();
        RadialField::from_values(new_grid, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_field_has_zero_mass_and_boundary() {
        let grid = RadialGrid::new(32, 4.0).unwrap();
        let u = RadialField::zero(grid);
        assert_eq!(u.mass().unwrap(), 0.0);
        assert_eq!(u.boundary_mass_fraction(0.9).unwrap(), 0.0);
    }

    #[test]
    fn from_values_rejects_nan() {
        let grid = RadialGrid::new(16, 4.0).unwrap();
        let mut vals = vec![Complex64::new(0.0, 0.0); 16];
        vals[3] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(
            RadialField::from_values(grid, vals),
            Err(Error::NonFiniteSample(_))
        ));
    }

    #[test]
    fn gaussian_mass_closed_form() {
        let grid = RadialGrid::new(2047, 12.0).unwrap();
        let u = RadialField::gaussian(grid, 1.0, 1.0).unwrap();
        let want = (std::f64::consts::PI / 2.0).powf(1.5);
        let got = u.mass().unwrap();
        assert!((got - want).abs() / want < 1e-12);
    }

    #[test]
    fn rescale_keeps_nodes_aligned() {
        let grid = RadialGrid::new(64, 8.0).unwrap();
        let u = RadialField::gaussian(grid, 1.0, 1.0).unwrap();
        let v = u.rescaled(2.0, false).unwrap();
        assert_eq!(v.grid().r_max(), 4.0);
        // v_j = 2 u(2 * r_j') with 2 r_j' = r_j exactly.
        for (a, b) in v.values().iter().zip(u.values()) {
            assert_eq!(a.re, 2.0 * b.re);
        }
    }

    #[test]
    fn boundary_fraction_sees_outer_bump() {
        let grid = RadialGrid::new(255, 10.0).unwrap();
        let u = RadialField::from_fn(grid, |r| {
            Complex64::new((-(r - 9.5) * (r - 9.5) / 0.01).exp(), 0.0)
        })
        .unwrap();
        assert!(u.boundary_mass_fraction(0.9).unwrap() > 0.99);
    }
}
