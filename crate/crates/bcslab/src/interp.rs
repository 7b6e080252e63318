//! Interpolation helpers: natural cubic splines (1-D and tensor-product
//! bicubic) and monotone piecewise-cubic Hermite interpolation.

use crate::error::{Error, Result};

/// Natural cubic spline through strictly increasing abscissae.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    y2: Vec<f64>,
}

impl CubicSpline {
    pub fn natural(xs: &[f64], ys: &[f64]) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::domain(
                "CubicSpline::natural",
                "need at least two matching (x, y) pairs",
            ));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain(
                "CubicSpline::natural",
                "abscissae must be strictly increasing",
            ));
        }
        if xs.iter().chain(ys.iter()).any(|v| !v.is_finite()) {
            return Err(Error::domain(
                "CubicSpline::natural",
                "non-finite knot data",
            ));
        }
        let n = xs.len();
        let mut y2 = vec![0.0; n];
        if n > 2 {
            // Tridiagonal sweep for the second derivatives, natural ends.
            let mut u = vec![0.0; n];
            for i in 1..n - 1 {
                let sig = (xs[i] - xs[i - 1]) / (xs[i + 1] - xs[i - 1]);
                let p = sig * y2[i - 1] + 2.0;
                y2[i] = (sig - 1.0) / p;
                let d = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])
                    - (ys[i] - ys[i - 1]) / (xs[i] - xs[i - 1]);
                u[i] = (6.0 * d / (xs[i + 1] - xs[i - 1]) - sig * u[i - 1]) / p;
            }
            for i in (1..n - 1).rev() {
                y2[i] = y2[i] * y2[i + 1] + u[i];
            }
        }
        Ok(CubicSpline {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            y2,
        })
    }

    /// Index of the segment containing `x` (clamped to the end segments).
    fn segment(&self, x: f64) -> usize {
        match self.xs.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(i) => i.min(self.xs.len() - 2),
            Err(i) => i.clamp(1, self.xs.len() - 1) - 1,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        a * self.ys[i]
            + b * self.ys[i + 1]
            + ((a * a * a - a) * self.y2[i] + (b * b * b - b) * self.y2[i + 1]) * (h * h) / 6.0
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }
}

/// Tensor-product natural cubic spline on a rectilinear grid.
///
/// Rows are indexed by `x`, columns by `xi`; values are row-major.
/// Evaluation splines each row at `xi`, then splines the resulting column
/// at `x`, so the surface is C² away from knot lines in both directions.
#[derive(Debug, Clone)]
pub struct BicubicSpline {
    xs: Vec<f64>,
    row_splines: Vec<CubicSpline>,
}

impl BicubicSpline {
    pub fn new(xs: &[f64], xis: &[f64], values: &[f64]) -> Result<Self> {
        if xs.len() < 4 || xis.len() < 4 {
            return Err(Error::domain(
                "BicubicSpline::new",
                "need at least 4 knots per dimension",
            ));
        }
        if values.len() != xs.len() * xis.len() {
            return Err(Error::domain(
                "BicubicSpline::new",
                format!(
                    "value count {} does not match {}x{} grid",
                    values.len(),
                    xs.len(),
                    xis.len()
                ),
            ));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) || xis.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain(
                "BicubicSpline::new",
                "grid coordinates must be strictly increasing",
            ));
        }
        let row_splines = values
            .chunks(xis.len())
            .map(|row| CubicSpline::natural(xis, row))
            .collect::<Result<Vec<_>>>()?;
        Ok(BicubicSpline {
            xs: xs.to_vec(),
            row_splines,
        })
    }

    pub fn eval(&self, x: f64, xi: f64) -> f64 {
        let col: Vec<f64> = self.row_splines.iter().map(|s| s.eval(xi)).collect();
        // xs validated strictly increasing, col finite: spline build cannot fail
        CubicSpline::natural(&self.xs, &col)
            .expect("column spline over validated grid")
            .eval(x)
    }

    pub fn x_domain(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }

    pub fn xi_domain(&self) -> (f64, f64) {
        self.row_splines[0].domain()
    }
}

/// Monotone piecewise-cubic Hermite interpolant (Fritsch–Carlson limiter).
///
/// Preserves monotonicity of the data, which makes it safe for memoized
/// gap curves Δ(T) that must stay strictly decreasing.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    d: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(xs: &[f64], ys: &[f64]) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::domain(
                "MonotoneCubic::new",
                "need at least two matching (x, y) pairs",
            ));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain(
                "MonotoneCubic::new",
                "abscissae must be strictly increasing",
            ));
        }
        let n = xs.len();
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let slope: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
        let mut d = vec![0.0; n];
        d[0] = slope[0];
        d[n - 1] = slope[n - 2];
        for i in 1..n - 1 {
            if slope[i - 1] * slope[i] <= 0.0 {
                d[i] = 0.0;
            } else {
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                d[i] = (w1 + w2) / (w1 / slope[i - 1] + w2 / slope[i]);
            }
        }
        // Fritsch-Carlson clip keeps each segment monotone.
        for i in 0..n - 1 {
            if slope[i] == 0.0 {
                d[i] = 0.0;
                d[i + 1] = 0.0;
            } else {
                let a = d[i] / slope[i];
                let b = d[i + 1] / slope[i];
                let s = (a * a + b * b).sqrt();
                if s > 3.0 {
                    let t = 3.0 / s;
                    d[i] = t * a * slope[i];
                    d[i + 1] = t * b * slope[i];
                }
            }
        }
        Ok(MonotoneCubic {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            d,
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let i = match self.xs.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(i) => return self.ys[i],
            Err(i) => i.clamp(1, self.xs.len() - 1) - 1,
        };
        let h = self.xs[i + 1] - self.xs[i];
        let t = ((x - self.xs[i]) / h).clamp(0.0, 1.0);
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[i] + h10 * h * self.d[i] + h01 * self.ys[i + 1] + h11 * h * self.d[i + 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn spline_reproduces_line_exactly() {
        let xs: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x - 1.0).collect();
        let s = CubicSpline::natural(&xs, &ys).unwrap();
        for x in [0.0, 0.5, 3.3, 6.9, 7.0] {
            assert_abs_diff_eq!(s.eval(x), 3.0 * x - 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn spline_close_on_smooth_function() {
        let xs: Vec<f64> = (0..41).map(|i| i as f64 / 40.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (2.0 * x).sin()).collect();
        let s = CubicSpline::natural(&xs, &ys).unwrap();
        // natural end conditions limit accuracy near the boundary
        for i in 0..200 {
            let x = 0.05 + 0.9 * (i as f64 / 199.0);
            assert_abs_diff_eq!(s.eval(x), (2.0 * x).sin(), epsilon = 1e-5);
        }
        for i in 0..100 {
            let x = 0.25 + 0.5 * (i as f64 / 99.0);
            assert_abs_diff_eq!(s.eval(x), (2.0 * x).sin(), epsilon = 1e-7);
        }
    }

    #[test]
    fn bicubic_reproduces_bilinear_products() {
        let xs: Vec<f64> = (0..9).map(|i| 0.1 + i as f64 * 0.1).collect();
        let f = |x: f64, xi: f64| 0.4 + 0.1 * x * xi;
        let vals: Vec<f64> = xs
            .iter()
            .flat_map(|&x| xs.iter().map(move |&xi| f(x, xi)))
            .collect();
        let b = BicubicSpline::new(&xs, &xs, &vals).unwrap();
        for &x in &[0.12, 0.5, 0.83] {
            for &xi in &[0.15, 0.44, 0.9] {
                assert_abs_diff_eq!(b.eval(x, xi), f(x, xi), epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn monotone_cubic_preserves_monotonicity() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let ys = [1.0, 0.9, 0.5, 0.499, 0.0];
        let m = MonotoneCubic::new(&xs, &ys).unwrap();
        let mut prev = f64::INFINITY;
        for i in 0..=400 {
            let x = 4.0 * i as f64 / 400.0;
            let y = m.eval(x);
            assert!(y <= prev + 1e-12, "not monotone at x={x}");
            prev = y;
        }
        assert_abs_diff_eq!(m.eval(0.0), 1.0);
        assert_abs_diff_eq!(m.eval(4.0), 0.0);
    }

    #[test]
    fn rejects_bad_knots() {
        assert!(CubicSpline::natural(&[0.0, 0.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(MonotoneCubic::new(&[0.0], &[1.0]).is_err());
        assert!(BicubicSpline::new(&[0.0, 1.0], &[0.0, 1.0], &[0.0; 4]).is_err());
    }
}
