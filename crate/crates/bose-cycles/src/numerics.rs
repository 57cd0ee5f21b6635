//! Numeric substrate: log-domain weights, Gaussian theta sums, polylogarithms.

use std::f64::consts::PI;
use std::ops::{Div, Mul};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

const TERM_TOL: f64 = 1e-17;

/// Nonnegative scalar stored as its natural logarithm; `-inf` is zero.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LogWeight(f64);

impl LogWeight {
    pub const ZERO: LogWeight = LogWeight(f64::NEG_INFINITY);
    pub const ONE: LogWeight = LogWeight(0.0);

    pub fn from_ln(ln: f64) -> Self {
        debug_assert!(!ln.is_nan() && ln != f64::INFINITY);
        LogWeight(ln)
    }

    pub fn from_value(x: f64) -> Result<Self> {
        if !(x >= 0.0) || !x.is_finite() {
            return Err(domain(format!("LogWeight needs a finite value >= 0, got {x}")));
        }
        Ok(LogWeight(x.ln()))
    }

    pub fn ln(self) -> f64 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0.exp()
    }

    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    pub fn powi(self, k: i32) -> Self {
        if k == 0 {
            return LogWeight::ONE;
        }
        LogWeight(self.0 * k as f64)
    }

    /// Multiply by `e^x`.
    pub fn scale_exp(self, x: f64) -> Self {
        if self.is_zero() {
            self
        } else {
            LogWeight(self.0 + x)
        }
    }

    /// Ratio `self / other` as a plain number.
    pub fn ratio(self, other: LogWeight) -> f64 {
        (self.0 - other.0).exp()
    }

    /// Sum of many weights: max shift, then compensated (Neumaier) accumulation.
    /// The maximum is taken at the lowest index among ties.
    pub fn sum<I: IntoIterator<Item = LogWeight>>(terms: I) -> LogWeight {
        let terms: Vec<f64> = terms.into_iter().map(|w| w.0).collect();
        let mut max = f64::NEG_INFINITY;
        for &t in &terms {
            if t > max {
                max = t;
            }
        }
        if max == f64::NEG_INFINITY {
            return LogWeight::ZERO;
        }
        let mut s = 0.0;
        let mut comp = 0.0;
        for &t in &terms {
            let x = (t - max).exp();
            let u = s + x;
            if s.abs() >= x.abs() {
                comp += (s - u) + x;
            } else {
                comp += (x - u) + s;
            }
            s = u;
        }
        LogWeight(max + (s + comp).ln())
    }
}

impl Mul for LogWeight {
    type Output = LogWeight;
    fn mul(self, rhs: LogWeight) -> LogWeight {
        if self.is_zero() || rhs.is_zero() {
            LogWeight::ZERO
        } else {
            LogWeight(self.0 + rhs.0)
        }
    }
}

impl Div for LogWeight {
    type Output = LogWeight;
    fn div(self, rhs: LogWeight) -> LogWeight {
        assert!(!rhs.is_zero(), "division by a zero LogWeight");
        if self.is_zero() {
            LogWeight::ZERO
        } else {
            LogWeight(self.0 - rhs.0)
        }
    }
}

/// Physical parameters of a gas in the periodic box `[0, L)^d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub d: u32,
    /// Box side `L`.
    pub side: f64,
    pub beta: f64,
    /// Thermal wavelength `λ_β`.
    pub lambda: f64,
    /// Particle number `N`.
    pub n: usize,
}

impl SystemParams {
    pub fn new(d: u32, side: f64, beta: f64, lambda: f64, n: usize) -> Result<Self> {
        if d == 0 {
            return Err(domain("dimension d must be >= 1"));
        }
        for (name, v) in [("L", side), ("beta", beta), ("lambda", lambda)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(domain(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(SystemParams { d, side, beta, lambda, n })
    }

    /// Box side chosen so that `ρλ^d` equals `rho_lambda_d` for `n` particles.
    pub fn with_density(d: u32, rho_lambda_d: f64, lambda: f64, beta: f64, n: usize) -> Result<Self> {
        if !(rho_lambda_d > 0.0) {
            return Err(domain("rho*lambda^d must be positive"));
        }
        if n == 0 {
            return Err(domain("a density target needs N >= 1"));
        }
        let rho = rho_lambda_d / lambda.powi(d as i32);
        let side = (n as f64 / rho).powf(1.0 / d as f64);
        SystemParams::new(d, side, beta, lambda, n)
    }

    /// `λ_β = sqrt(2π ħ²β/m₀)` from `ħ²/m₀` and `β`.
    pub fn from_hbar2_over_m(d: u32, side: f64, beta: f64, hbar2_over_m: f64, n: usize) -> Result<Self> {
        if !(hbar2_over_m > 0.0) {
            return Err(domain("hbar^2/m must be positive"));
        }
        SystemParams::new(d, side, beta, (2.0 * PI * hbar2_over_m * beta).sqrt(), n)
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.d as i32)
    }

    pub fn rho(&self) -> f64 {
        self.n as f64 / self.volume()
    }

    pub fn rho_lambda_d(&self) -> f64 {
        self.rho() * self.lambda.powi(self.d as i32)
    }

    /// `nλ²/L²`, the theta-sum argument of an `n`-cycle.
    pub fn cycle_c(&self, n: usize) -> f64 {
        n as f64 * (self.lambda / self.side).powi(2)
    }

    /// One-particle partition function at inverse temperature `nβ`.
    pub fn q(&self, n: usize) -> LogWeight {
        assert!(n >= 1, "q_n needs n >= 1");
        LogWeight::from_ln(self.d as f64 * theta1(self.cycle_c(n)).ln())
    }

    pub fn q_value(&self, n: usize) -> f64 {
        theta1(self.cycle_c(n)).powi(self.d as i32)
    }
}

fn theta1_direct(c: f64) -> f64 {
    let mut s = 1.0;
    let mut z = 1.0f64;
    loop {
        let t = 2.0 * (-PI * c * z * z).exp();
        s += t;
        if t < TERM_TOL * s {
            return s;
        }
        z += 1.0;
    }
}

/// One-dimensional `Σ_z exp(-π c z²)`, direct for `c >= 1`, Poisson dual otherwise.
pub(crate) fn theta1(c: f64) -> f64 {
    if c >= 1.0 {
        theta1_direct(c)
    } else {
        theta1_direct(1.0 / c) / c.sqrt()
    }
}

/// `Σ_{z∈Z^d} exp(-π c |z|²)`.
pub fn theta_sum(c: f64, d: u32) -> Result<f64> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(domain(format!("theta_sum needs c > 0, got {c}")));
    }
    if d == 0 {
        return Err(domain("theta_sum needs d >= 1"));
    }
    Ok(theta1(c).powi(d as i32))
}

/// `q_n` for the given parameters.
pub fn q_n(params: &SystemParams, n: usize) -> Result<LogWeight> {
    if n == 0 {
        return Err(domain("q_n needs n >= 1"));
    }
    Ok(params.q(n))
}

const BERNOULLI_2K: [f64; 8] =
    [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0, -691.0 / 2730.0, 7.0 / 6.0, -3617.0 / 510.0];

const EM_START: u64 = 64;

/// `j`-th derivative of `e^{-a x} x^{-s}` at `x`.
fn em_derivative(s: f64, a: f64, x: f64, j: usize) -> f64 {
    let mut total = 0.0;
    let mut binom = 1.0;
    let mut falling = 1.0;
    for i in 0..=j {
        if i > 0 {
            binom = binom * (j - i + 1) as f64 / i as f64;
            falling *= -s - (i - 1) as f64;
        }
        total += binom * (-a).powi((j - i) as i32) * falling * x.powf(-s - i as f64);
    }
    total * (-a * x).exp()
}

/// `∫_1^∞ e^{-b u} u^{-s} du` by exp-sinh quadrature.
fn exp_integral_tail(s: f64, b: f64) -> f64 {
    let g = |t: f64| {
        let x = (0.5 * PI * t.sinh()).exp();
        let u = 1.0 + x;
        let w = 0.5 * PI * t.cosh() * x;
        (-b * u).exp() * u.powf(-s) * w
    };
    let mut h = 0.5;
    let mut prev = f64::NAN;
    for _ in 0..8 {
        let mut sum = g(0.0);
        for sign in [1.0, -1.0] {
            let mut k = 1;
            loop {
                let v = g(sign * k as f64 * h);
                sum += v;
                if !(v.abs() > 1e-20 * sum.abs()) || k > 20_000 {
                    break;
                }
                k += 1;
            }
        }
        let est = sum * h;
        if (est - prev).abs() <= 1e-15 * est.abs() {
            return est;
        }
        prev = est;
        h *= 0.5;
    }
    prev
}

/// `Σ_{n≥k0} z^n / n^s` for `k0 >= 1`.
pub fn polylog_tail(s: f64, z: f64, k0: u64) -> Result<f64> {
    if !(0.0..=1.0).contains(&z) || s.is_nan() {
        return Err(domain(format!("polylog needs 0 <= z <= 1, got z = {z}")));
    }
    if z == 1.0 && s <= 1.0 {
        return Err(domain(format!("polylog at z = 1 needs s > 1, got s = {s}")));
    }
    let k0 = k0.max(1);
    if z == 0.0 {
        return Ok(0.0);
    }
    let a = -z.ln();
    let m = k0.max(EM_START);
    let mut sum = 0.0;
    for n in k0..m {
        let t = (-a * n as f64).exp() * (n as f64).powf(-s);
        sum += t;
        if a > 0.0 && t * z / (1.0 - z) < TERM_TOL * sum.abs().max(1e-300) {
            return Ok(sum);
        }
    }
    let mf = m as f64;
    let f_m = (-a * mf).exp() * mf.powf(-s);
    if a > 0.0 && f_m / (1.0 - z) < TERM_TOL * sum.abs().max(1e-300) {
        return Ok(sum);
    }
    let integral =
        if a == 0.0 { mf.powf(1.0 - s) / (s - 1.0) } else { mf.powf(1.0 - s) * exp_integral_tail(s, a * mf) };
    let mut tail = integral + 0.5 * f_m;
    let mut fact = 2.0;
    for (k, b) in BERNOULLI_2K.iter().enumerate() {
        let j = 2 * k + 1;
        if k > 0 {
            fact *= ((2 * k + 1) * (2 * k + 2)) as f64;
        }
        tail -= b / fact * em_derivative(s, a, mf, j);
    }
    Ok(sum + tail)
}

/// `Li_s(z) = Σ_{n≥1} z^n / n^s` for real `z ∈ [0, 1]`.
pub fn polylog(s: f64, z: f64) -> Result<f64> {
    polylog_tail(s, z, 1)
}

/// `ζ(s)` for `s > 1`.
pub fn riemann_zeta(s: f64) -> Result<f64> {
    if !(s > 1.0) {
        return Err(domain(format!("riemann_zeta needs s > 1, got {s}")));
    }
    polylog(s, 1.0)
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = 0.5 * (1.0 - x);
        weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}
