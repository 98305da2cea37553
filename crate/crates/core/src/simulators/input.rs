use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{KoopError, Result};
use crate::rng::substream;

/// Smoothed piecewise-constant random input.
///
/// One value per `hold`-long segment is drawn uniformly from `lo..hi`; the
/// values are placed at the segment midpoints and joined by a natural cubic
/// spline. Setting `constant` skips the draw and yields that value everywhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSignalSpec {
    pub lo: f64,
    pub hi: f64,
    pub hold: f64,
    #[serde(default)]
    pub seed: u64,
    pub duration: f64,
    #[serde(default)]
    pub constant: Option<f64>,
}

impl InputSignalSpec {
    pub fn uniform(lo: f64, hi: f64, hold: f64, duration: f64, seed: u64) -> Self {
        Self {
            lo,
            hi,
            hold,
            seed,
            duration,
            constant: None,
        }
    }

    pub fn constant(value: f64, hold: f64, duration: f64) -> Self {
        Self {
            lo: value,
            hi: value,
            hold,
            seed: 0,
            duration,
            constant: Some(value),
        }
    }

    fn validate(&self) -> Result<()> {
        let finite = [self.lo, self.hi, self.hold, self.duration]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(KoopError::invalid("input spec has non-finite fields"));
        }
        if self.constant.is_none() && self.lo >= self.hi {
            return Err(KoopError::invalid("input range needs lo < hi"));
        }
        if self.hold <= 0.0 {
            return Err(KoopError::invalid("input hold must be positive"));
        }
        if self.duration < 2.0 * self.hold {
            return Err(KoopError::invalid(
                "input duration must span at least two holds",
            ));
        }
        Ok(())
    }

    /// Knot times and values.
    pub fn knots(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        self.validate()?;
        let n = (self.duration / self.hold).ceil() as usize + 1;
        let times: Vec<f64> = (0..n).map(|k| (k as f64 + 0.5) * self.hold).collect();
        let values = match self.constant {
            Some(c) => vec![c; n],
            None => {
                let mut rng = substream(self.seed, "input-knots");
                (0..n).map(|_| rng.gen_range(self.lo..self.hi)).collect()
            }
        };
        Ok((times, values))
    }
}

/// Natural cubic spline, extended linearly outside the knot range.
#[derive(Debug, Clone)]
pub struct NaturalSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl NaturalSpline {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(KoopError::invalid(
                "spline needs at least two knots with one value each",
            ));
        }
        if x.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(KoopError::invalid("spline knots must increase strictly"));
        }
        // Thomas algorithm for the interior second derivatives.
        let mut m = vec![0.0; n];
        if n > 2 {
            let k = n - 2;
            let mut diag = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            let mut upper = vec![0.0; k];
            for i in 1..n - 1 {
                let h0 = x[i] - x[i - 1];
                let h1 = x[i + 1] - x[i];
                diag[i - 1] = 2.0 * (h0 + h1);
                upper[i - 1] = h1;
                rhs[i - 1] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
            }
            for i in 1..k {
                let lower = x[i + 1] - x[i];
                let w = lower / diag[i - 1];
                diag[i] -= w * upper[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for i in (0..k - 1).rev() {
                m[i + 1] = (rhs[i] - upper[i] * m[i + 2]) / diag[i];
            }
        }
        Ok(Self { x, y, m })
    }

    fn slope(&self, i: usize, at_right: bool) -> f64 {
        let h = self.x[i + 1] - self.x[i];
        let base = (self.y[i + 1] - self.y[i]) / h;
        if at_right {
            base + h * (self.m[i] + 2.0 * self.m[i + 1]) / 6.0
        } else {
            base - h * (2.0 * self.m[i] + self.m[i + 1]) / 6.0
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t <= self.x[0] {
            return self.y[0] + (t - self.x[0]) * self.slope(0, false);
        }
        if t >= self.x[n - 1] {
            return self.y[n - 1] + (t - self.x[n - 1]) * self.slope(n - 2, true);
        }
        let i = self.x.partition_point(|&v| v <= t) - 1;
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }
}

/// Samples the smoothed input at `t = 0, dt, 2dt, …, duration`.
pub fn gen_input(spec: &InputSignalSpec, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(KoopError::invalid("sample interval must be positive"));
    }
    let (times, values) = spec.knots()?;
    let spline = NaturalSpline::new(times, values)?;
    let n = (spec.duration / dt).round() as usize + 1;
    Ok((0..n).map(|k| spline.eval(k as f64 * dt)).collect())
}
