//! Monotone piecewise-cubic (Fritsch–Carlson) interpolation on node arrays
//! that start at the symmetry point `x = 0`.

pub struct Pchip<'a> {
    x: &'a [f64],
    y: &'a [f64],
    slopes: Vec<f64>,
}

impl<'a> Pchip<'a> {
    /// Interpolant of data sampled at increasing `x` with `x[0] = 0`, extended
    /// evenly to `x < 0` (zero slope at the origin) and by zero past the last
    /// node.
    pub fn even(x: &'a [f64], y: &'a [f64]) -> Self {
        let n = x.len();
        assert!(n >= 2 && y.len() == n);
        let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / (x[k + 1] - x[k])).collect();
        let mut slopes = vec![0.0; n];
        for k in 1..n - 1 {
            let (a, b) = (delta[k - 1], delta[k]);
            if a * b > 0.0 {
                let h0 = x[k] - x[k - 1];
                let h1 = x[k + 1] - x[k];
                let w1 = 2.0 * h1 + h0;
                let w2 = h1 + 2.0 * h0;
                slopes[k] = (w1 + w2) / (w1 / a + w2 / b);
            }
        }
        // one-sided shape-preserving end slope
        if n >= 3 {
            let h0 = x[n - 1] - x[n - 2];
            let h1 = x[n - 2] - x[n - 3];
            let (d0, d1) = (delta[n - 2], delta[n - 3]);
            let mut d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
            if d * d0 <= 0.0 {
                d = 0.0;
            } else if d0 * d1 <= 0.0 && d.abs() > 3.0 * d0.abs() {
                d = 3.0 * d0;
            }
            slopes[n - 1] = d;
        } else {
            slopes[n - 1] = delta[0];
        }
        Self { x, y, slopes }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let t = t.abs();
        let n = self.x.len();
        if t > self.x[n - 1] {
            return 0.0;
        }
        let k = match self.x.partition_point(|&xk| xk <= t) {
            0 => 0,
            m if m >= n => n - 2,
            m => m - 1,
        };
        let h = self.x[k + 1] - self.x[k];
        let s = (t - self.x[k]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y[k] + h10 * h * self.slopes[k] + h01 * self.y[k + 1] + h11 * h * self.slopes[k + 1]
    }
}

pub fn pchip_resample(x: &[f64], y: &[f64], targets: &[f64]) -> Vec<f64> {
    let p = Pchip::even(x, y);
    targets.iter().map(|&t| p.eval(t)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_nodes_and_is_even() {
        let x: Vec<f64> = (0..20).map(|k| k as f64 * 0.25).collect();
        let y: Vec<f64> = x.iter().map(|t| (-t * t).exp()).collect();
        let p = Pchip::even(&x, &y);
        for (xi, yi) in x.iter().zip(&y) {
            assert!((p.eval(*xi) - yi).abs() < 1e-15);
            assert_eq!(p.eval(-*xi), p.eval(*xi));
        }
        assert_eq!(p.eval(100.0), 0.0);
    }

    #[test]
    fn monotone_data_stays_monotone() {
        let x: Vec<f64> = (0..10).map(|k| k as f64).collect();
        let y = vec![5.0, 5.0, 4.9, 3.0, 2.9, 0.5, 0.4, 0.1, 0.0, 0.0];
        let p = Pchip::even(&x, &y);
        let mut prev = f64::INFINITY;
        for k in 0..=900 {
            let v = p.eval(k as f64 * 0.01);
            assert!(v <= prev + 1e-14);
            prev = v;
        }
    }
}
