//! Seabed profiles `b(x)` and their first two derivatives.

use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};

/// Minimum number of samples for a [`SampledProfile`]; the one-sided
/// second-derivative stencil at each end needs four nodes plus a neighbour.
pub const MIN_SAMPLES: usize = 5;

/// Seabed elevation `y = b(x)`.
///
/// Analytic profiles are defined on the whole real line and use closed-form
/// derivatives. Sampled profiles are defined on `[x_0, x_N]`.
#[derive(Debug, Clone, PartialEq)]
pub enum Bathymetry {
    /// `b(x) = level`.
    Flat { level: f64 },
    /// `b(x) = b0 + b1 x`.
    Linear { b0: f64, b1: f64 },
    /// `b(x) = -h + k (tanh x - 1)` with `h, k > 0`: monotone rising seabed
    /// from depth `h + 2k` offshore to depth `h` on the shelf.
    TanhSafe { h: f64, k: f64 },
    Sampled(SampledProfile),
}

impl Bathymetry {
    pub fn flat(level: f64) -> Self {
        Bathymetry::Flat { level }
    }

    pub fn linear(b0: f64, b1: f64) -> Self {
        Bathymetry::Linear { b0, b1 }
    }

    pub fn tanh_safe(h: f64, k: f64) -> Result<Self> {
        if !(h > 0.0 && k > 0.0 && h.is_finite() && k.is_finite()) {
            return Err(Error::InvalidBathymetry(format!(
                "tanh profile needs finite h > 0 and k > 0, got h = {h}, k = {k}"
            )));
        }
        Ok(Bathymetry::TanhSafe { h, k })
    }

    pub fn sampled(xs: Vec<f64>, bs: Vec<f64>) -> Result<Self> {
        SampledProfile::new(xs, bs).map(Bathymetry::Sampled)
    }

    /// Closed interval on which the profile is defined.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            Bathymetry::Sampled(s) => (s.xs[0], s.xs[s.xs.len() - 1]),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        let (lo, hi) = self.domain();
        x >= lo && x <= hi
    }

    fn check(&self, x: f64) -> Result<()> {
        let (lo, hi) = self.domain();
        if x >= lo && x <= hi {
            Ok(())
        } else {
            Err(Error::Domain { x, lo, hi })
        }
    }

    /// Seabed elevation `b(x)`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        Ok(match self {
            Bathymetry::Flat { level } => *level,
            Bathymetry::Linear { b0, b1 } => b0 + b1 * x,
            Bathymetry::TanhSafe { h, k } => -h + k * (x.tanh() - 1.0),
            Bathymetry::Sampled(s) => s.eval(x),
        })
    }

    /// Seabed slope `b_x(x)`.
    pub fn slope(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        Ok(match self {
            Bathymetry::Flat { .. } => 0.0,
            Bathymetry::Linear { b1, .. } => *b1,
            Bathymetry::TanhSafe { k, .. } => {
                let c = x.cosh();
                k / (c * c)
            }
            Bathymetry::Sampled(s) => s.slope(x),
        })
    }

    /// Seabed curvature `b_xx(x)`.
    pub fn curvature(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        Ok(match self {
            Bathymetry::Flat { .. } | Bathymetry::Linear { .. } => 0.0,
            Bathymetry::TanhSafe { k, .. } => {
                let c = x.cosh();
                -2.0 * k * x.tanh() / (c * c)
            }
            Bathymetry::Sampled(s) => s.curvature(x),
        })
    }

    /// Evaluates `b` at every coordinate.
    pub fn sample(&self, xs: &[f64]) -> Result<Vec<f64>> {
        xs.iter().map(|&x| self.eval(x)).collect()
    }

    pub fn sample_slope(&self, xs: &[f64]) -> Result<Vec<f64>> {
        xs.iter().map(|&x| self.slope(x)).collect()
    }

    pub fn sample_curvature(&self, xs: &[f64]) -> Result<Vec<f64>> {
        xs.iter().map(|&x| self.curvature(x)).collect()
    }
}

/// Seabed elevation known at discrete, strictly increasing abscissae.
///
/// Values between nodes use monotone piecewise-cubic Hermite interpolation,
/// which never overshoots the data. Slope and curvature are finite
/// differences at the nodes (three-point central inside, one-sided at the
/// ends) and linear in between.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledProfile {
    xs: Vec<f64>,
    bs: Vec<f64>,
    hermite_slopes: Vec<f64>,
    node_slopes: Vec<f64>,
    node_curvatures: Vec<f64>,
}

impl SampledProfile {
    pub fn new(xs: Vec<f64>, bs: Vec<f64>) -> Result<Self> {
        if xs.len() != bs.len() {
            return Err(Error::InvalidBathymetry(format!(
                "{} abscissae but {} values",
                xs.len(),
                bs.len()
            )));
        }
        if xs.len() < MIN_SAMPLES {
            return Err(Error::InvalidBathymetry(format!(
                "need at least {MIN_SAMPLES} samples, got {}",
                xs.len()
            )));
        }
        if let Some(bad) = xs.iter().chain(&bs).find(|v| !v.is_finite()) {
            return Err(Error::InvalidBathymetry(format!("non-finite sample {bad}")));
        }
        if let Some(i) = xs.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidBathymetry(format!(
                "abscissae must be strictly increasing (x[{}] = {} >= x[{}] = {})",
                i,
                xs[i],
                i + 1,
                xs[i + 1]
            )));
        }
        let hermite_slopes = pchip_slopes(&xs, &bs);
        let node_slopes = node_derivatives(&xs, &bs, 1);
        let node_curvatures = node_derivatives(&xs, &bs, 2);
        Ok(Self {
            xs,
            bs,
            hermite_slopes,
            node_slopes,
            node_curvatures,
        })
    }

    /// Reads a `x,b` CSV file.
    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(file)
    }

    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "x" || &headers[1] != "b" {
            return Err(Error::Parse(format!(
                "bathymetry header must be `x,b`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut xs = Vec::new();
        let mut bs = Vec::new();
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            let parse = |i: usize| -> Result<f64> {
                record[i].parse::<f64>().map_err(|e| {
                    Error::Parse(format!("row {}: `{}`: {e}", line + 2, &record[i]))
                })
            };
            xs.push(parse(0)?);
            bs.push(parse(1)?);
        }
        Self::new(xs, bs)
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.bs
    }

    /// Index `k` of the interval `[x_k, x_{k+1}]` containing `x`.
    fn interval(&self, x: f64) -> usize {
        let k = self.xs.partition_point(|&xi| xi <= x);
        k.saturating_sub(1).min(self.xs.len() - 2)
    }

    fn eval(&self, x: f64) -> f64 {
        let k = self.interval(x);
        let (x0, x1) = (self.xs[k], self.xs[k + 1]);
        if x == x0 {
            return self.bs[k];
        }
        if x == x1 {
            return self.bs[k + 1];
        }
        let h = x1 - x0;
        let s = (x - x0) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.bs[k]
            + h10 * h * self.hermite_slopes[k]
            + h01 * self.bs[k + 1]
            + h11 * h * self.hermite_slopes[k + 1]
    }

    fn lerp_nodes(&self, values: &[f64], x: f64) -> f64 {
        let k = self.interval(x);
        let s = (x - self.xs[k]) / (self.xs[k + 1] - self.xs[k]);
        values[k] + s * (values[k + 1] - values[k])
    }

    fn slope(&self, x: f64) -> f64 {
        self.lerp_nodes(&self.node_slopes, x)
    }

    fn curvature(&self, x: f64) -> f64 {
        self.lerp_nodes(&self.node_curvatures, x)
    }
}

/// Fritsch–Carlson derivative estimates for a monotone cubic Hermite
/// interpolant.
fn pchip_slopes(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (ys[k + 1] - ys[k]) / h[k]).collect();
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        let (a, b) = (delta[k - 1], delta[k]);
        if a == 0.0 || b == 0.0 || a.signum() != b.signum() {
            d[k] = 0.0;
        } else {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / a + w2 / b);
        }
    }
    d[0] = pchip_end_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = pchip_end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

fn pchip_end_slope(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d.signum() != del0.signum() || del0 == 0.0 {
        0.0
    } else if del0.signum() != del1.signum() && d.abs() > 3.0 * del0.abs() {
        3.0 * del0
    } else {
        d
    }
}

/// Finite-difference derivative of the given `order` (1 or 2) at every node.
fn node_derivatives(xs: &[f64], ys: &[f64], order: usize) -> Vec<f64> {
    let n = xs.len();
    // One-sided stencils need order + 2 nodes for second-order accuracy.
    let end = order + 2;
    (0..n)
        .map(|i| {
            let range = if i == 0 {
                0..end
            } else if i == n - 1 {
                n - end..n
            } else {
                i - 1..i + 2
            };
            let w = fd_weights(xs[i], &xs[range.clone()], order);
            w.iter().zip(&ys[range]).map(|(w, y)| w * y).sum()
        })
        .collect()
}

/// Fornberg's recursion for finite-difference weights of derivative `order`
/// at `z` over arbitrary distinct nodes.
pub(crate) fn fd_weights(z: f64, nodes: &[f64], order: usize) -> Vec<f64> {
    let n = nodes.len();
    let m = order;
    // c[j][k]: weight of node j for derivative k
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - z;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn central(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn tanh_profile_reference_values() {
        let b = Bathymetry::tanh_safe(1.0, 0.5).unwrap();
        assert_abs_diff_eq!(b.eval(0.0).unwrap(), -1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(b.eval(50.0).unwrap(), -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b.eval(-50.0).unwrap(), -2.0, epsilon = 1e-12);
        assert_eq!(b.curvature(0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(b.slope(0.0).unwrap(), 0.5, epsilon = 1e-15);
        let fd = central(|x| b.eval(x).unwrap(), 0.0, 1e-6);
        assert_abs_diff_eq!(fd, 0.5, epsilon = 1e-8);
    }

    #[test]
    fn tanh_profile_shape() {
        let b = Bathymetry::tanh_safe(1.0, 0.5).unwrap();
        for i in -500..=500 {
            let x = i as f64 * 0.1;
            assert!(b.slope(x).unwrap() > 0.0, "slope at {x}");
            let c = b.curvature(x).unwrap();
            if x == 0.0 {
                assert_eq!(c, 0.0);
            } else {
                assert_eq!(c.signum(), -x.signum(), "curvature sign at {x}");
            }
        }
    }

    #[test]
    fn linear_and_flat() {
        let b = Bathymetry::linear(-2.0, 0.0);
        assert_eq!(b.eval(123.0).unwrap(), -2.0);
        let b = Bathymetry::linear(0.3, -0.7);
        assert_eq!(b.slope(4.0).unwrap(), -0.7);
        assert_eq!(b.curvature(4.0).unwrap(), 0.0);
        assert_eq!(Bathymetry::flat(-3.0).eval(1e9).unwrap(), -3.0);
    }

    #[test]
    fn analytic_slopes_match_finite_differences() {
        let profiles = [
            Bathymetry::linear(-1.0, 0.2),
            Bathymetry::flat(-4.0),
            Bathymetry::tanh_safe(1.0, 0.5).unwrap(),
            Bathymetry::tanh_safe(0.01, 2.0).unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for b in &profiles {
            for _ in 0..100 {
                let x: f64 = rng.gen_range(-3.0..3.0);
                let exact = b.slope(x).unwrap();
                let fd = central(|x| b.eval(x).unwrap(), x, 1e-6);
                assert!(
                    (fd - exact).abs() <= 1e-6 * exact.abs().max(1e-12) || (fd - exact).abs() < 1e-10,
                    "{b:?} at {x}: fd {fd} vs {exact}"
                );
                let exact2 = b.curvature(x).unwrap();
                let fd2 = central(|x| b.slope(x).unwrap(), x, 1e-6);
                assert!((fd2 - exact2).abs() <= 1e-6 * exact2.abs().max(1e-3));
            }
        }
    }

    #[test]
    fn invalid_tanh_parameters() {
        assert!(Bathymetry::tanh_safe(0.0, 1.0).is_err());
        assert!(Bathymetry::tanh_safe(1.0, -1.0).is_err());
    }

    fn quadratic_sampled(n: usize) -> (Vec<f64>, Vec<f64>, Bathymetry) {
        let xs: Vec<f64> = (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect();
        let bs: Vec<f64> = xs.iter().map(|x| -1.0 + 0.25 * x * x + 0.1 * x).collect();
        let b = Bathymetry::sampled(xs.clone(), bs.clone()).unwrap();
        (xs, bs, b)
    }

    #[test]
    fn sampled_reproduces_nodes() {
        let (xs, bs, b) = quadratic_sampled(11);
        for (x, v) in xs.iter().zip(&bs) {
            assert_eq!(b.eval(*x).unwrap(), *v);
        }
    }

    #[test]
    fn sampled_derivatives_exact_for_quadratic_at_nodes() {
        let (xs, _, b) = quadratic_sampled(9);
        for x in xs {
            assert_abs_diff_eq!(b.slope(x).unwrap(), 0.5 * x + 0.1, epsilon = 1e-12);
            assert_abs_diff_eq!(b.curvature(x).unwrap(), 0.5, epsilon = 1e-10);
        }
    }

    #[test]
    fn sampled_nonuniform_slope() {
        let xs = vec![0.0, 0.1, 0.35, 0.5, 0.9, 1.0, 1.6];
        let bs: Vec<f64> = xs.iter().map(|x| 2.0 * x - 0.5 * x * x).collect();
        let b = Bathymetry::sampled(xs.clone(), bs).unwrap();
        for &x in &xs {
            assert_abs_diff_eq!(b.slope(x).unwrap(), 2.0 - x, epsilon = 1e-12);
            assert_abs_diff_eq!(b.curvature(x).unwrap(), -1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn sampled_monotone_no_overshoot() {
        // step-like data: a cubic spline would ring here
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let bs = vec![-2.0, -2.0, -2.0, -2.0, -1.0, -1.0, -1.0, -1.0, -1.0, -1.0];
        let b = Bathymetry::sampled(xs, bs).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=900 {
            let v = b.eval(i as f64 * 0.01).unwrap();
            assert!((-2.0..=-1.0).contains(&v));
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn sampled_domain_errors() {
        let (_, _, b) = quadratic_sampled(7);
        assert!(matches!(b.eval(1.5), Err(Error::Domain { .. })));
        assert!(b.slope(-1.0000001).is_err());
        assert!(b.eval(1.0).is_ok());
    }

    #[test]
    fn sampled_validation() {
        assert!(Bathymetry::sampled(vec![0.0, 1.0, 2.0, 3.0], vec![0.0; 4]).is_err());
        assert!(Bathymetry::sampled(vec![0.0, 1.0, 1.0, 3.0, 4.0], vec![0.0; 5]).is_err());
        assert!(Bathymetry::sampled(vec![0.0, 1.0, 2.0, 3.0, 4.0], vec![0.0; 4]).is_err());
    }

    #[test]
    fn sampled_from_csv() {
        let text = "x,b\n0,-1\n1,-0.9\n2,-0.8\n3,-0.7\n4,-0.6\n";
        let s = SampledProfile::from_csv_reader(text.as_bytes()).unwrap();
        assert_eq!(s.xs().len(), 5);
        let b = Bathymetry::Sampled(s);
        assert_abs_diff_eq!(b.eval(2.5).unwrap(), -0.75, epsilon = 1e-14);
        assert_abs_diff_eq!(b.slope(2.5).unwrap(), 0.1, epsilon = 1e-12);

        assert!(SampledProfile::from_csv_reader("x,y\n0,1\n".as_bytes()).is_err());
        assert!(SampledProfile::from_csv_reader("x,b\n0,a\n".as_bytes()).is_err());
    }

    #[test]
    fn fornberg_weights_standard_stencils() {
        let w = fd_weights(0.0, &[-1.0, 0.0, 1.0], 1);
        assert_abs_diff_eq!(w[0], -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(w[1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w[2], 0.5, epsilon = 1e-15);
        let w = fd_weights(0.0, &[0.0, 1.0, 2.0], 1);
        assert_abs_diff_eq!(w[0], -1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(w[1], 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w[2], -0.5, epsilon = 1e-15);
        let w = fd_weights(0.0, &[0.0, 1.0, 2.0, 3.0], 2);
        for (a, b) in w.iter().zip([2.0, -5.0, 4.0, -1.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-14);
        }
    }
}
