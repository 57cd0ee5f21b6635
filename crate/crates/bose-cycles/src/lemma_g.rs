//! Fourier representation of the path weights `G[{n_l}](x)` for very small particle
//! numbers, the momentum-shift kinematics it is built from, the `f_n` function, and a
//! discrete-time transfer-matrix oracle.
//!
//! Particles are numbered `1..=N` and grouped into consecutive cycles
//! `C_l = {N_{l-1}+1, ..., N_l}`, `l = 0..p`. Cycle 0 is the open one when `x ≠ 0`.

use std::f64::consts::PI;

use ndarray::Array2;
use num::{BigRational, Complex, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::numerics::{gauss_legendre_unit, SystemParams};
use crate::potentials_bounds::{periodize_u, PairPotential};

const MAX_FOURIER_PARTICLES: usize = 3;
const MAX_INTEGRAND_EVALS: f64 = 5e7;
const SUM_CUT: f64 = 46.0;

/// One Fourier mode `z^k_{j,r}` of the coupling between particles `j < k`, switched on
/// at time `t^k_{j,r}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub j: usize,
    pub k: usize,
    pub z: Vec<i64>,
    pub t: f64,
}

/// The data `α^k_j`, `z^k_{j,r}`, `t^k_{j,r}` of one term of the expansion. `α^k_j` is the
/// number of couplings on the pair `(j, k)`; `r` runs in list order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionConfig {
    pub dim: usize,
    pub cycle_sizes: Vec<usize>,
    pub couplings: Vec<Coupling>,
}

impl InteractionConfig {
    pub fn new(dim: usize, cycle_sizes: Vec<usize>, couplings: Vec<Coupling>) -> Result<Self> {
        let cfg = InteractionConfig { dim, cycle_sizes, couplings };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(domain("dimension must be >= 1"));
        }
        if self.cycle_sizes.is_empty() || self.cycle_sizes.contains(&0) {
            return Err(domain("cycle sizes must be a nonempty list of positive integers"));
        }
        let n = self.particle_count();
        for c in &self.couplings {
            if !(1 <= c.j && c.j < c.k && c.k <= n) {
                return Err(domain(format!("coupling pair ({}, {}) needs 1 <= j < k <= {n}", c.j, c.k)));
            }
            if c.z.len() != self.dim {
                return Err(domain(format!("coupling vector has length {}, expected {}", c.z.len(), self.dim)));
            }
            if c.z.iter().all(|&v| v == 0) {
                return Err(domain("coupling vectors must be nonzero"));
            }
            if !(0.0..=1.0).contains(&c.t) {
                return Err(domain(format!("coupling time {} outside [0, 1]", c.t)));
            }
        }
        Ok(())
    }

    pub fn particle_count(&self) -> usize {
        self.cycle_sizes.iter().sum()
    }

    /// `(N_{l-1}+1, N_l)`, 1-based and inclusive.
    pub fn cycle_range(&self, l: usize) -> (usize, usize) {
        let start: usize = self.cycle_sizes[..l].iter().sum();
        (start + 1, start + self.cycle_sizes[l])
    }

    pub fn cycle_of(&self, q: usize) -> usize {
        let mut end = 0;
        for (l, &n) in self.cycle_sizes.iter().enumerate() {
            end += n;
            if q <= end {
                return l;
            }
        }
        self.cycle_sizes.len() - 1
    }

    /// `α^k_j`.
    pub fn alpha(&self, j: usize, k: usize) -> usize {
        self.couplings.iter().filter(|c| c.j == j && c.k == k).count()
    }

    fn touches(&self, l: usize, c: &Coupling) -> bool {
        let (s, e) = self.cycle_range(l);
        (s..=e).contains(&c.j) || (s..=e).contains(&c.k)
    }
}

/// Random valid configuration with at most `max_particles` particles and
/// `max_couplings` couplings; modes in `[-2, 2]^dim ∖ {0}`, times in `(0, 1)`.
pub fn random_config<R: Rng>(rng: &mut R, dim: usize, max_particles: usize, max_couplings: usize) -> InteractionConfig {
    let n = rng.gen_range(2..=max_particles.max(2));
    let mut sizes = Vec::new();
    let mut left = n;
    while left > 0 {
        let s = rng.gen_range(1..=left);
        sizes.push(s);
        left -= s;
    }
    let count = rng.gen_range(0..=max_couplings);
    let couplings = (0..count)
        .map(|_| {
            let j = rng.gen_range(1..n);
            let k = rng.gen_range(j + 1..=n);
            let mut z = vec![0i64; dim];
            while z.iter().all(|&v| v == 0) {
                z.iter_mut().for_each(|v| *v = rng.gen_range(-2..=2));
            }
            let t = rng.gen_range(1..1_000_000) as f64 / 1_000_000.0;
            Coupling { j, k, z, t }
        })
        .collect();
    InteractionConfig { dim, cycle_sizes: sizes, couplings }
}

/// `Z_q` with the comparison `t^k_{j,r} ≥ t` supplied by `ge`.
fn z_q_by(cfg: &InteractionConfig, q: usize, ge: impl Fn(f64) -> bool) -> Vec<i64> {
    let (_, nl) = cfg.cycle_range(cfg.cycle_of(q));
    let mut out = vec![0i64; cfg.dim];
    for c in &cfg.couplings {
        let (j, k) = (c.j, c.k);
        let sign = if ge(c.t) {
            if j < q && q <= k && k <= nl {
                -1
            } else if q <= j && j <= nl && k > nl {
                1
            } else {
                0
            }
        } else if j <= q && q < k && k <= nl {
            -1
        } else if q < j && j <= nl && k > nl {
            1
        } else {
            0
        };
        if sign != 0 {
            for (o, &v) in out.iter_mut().zip(&c.z) {
                *o += sign * v;
            }
        }
    }
    out
}

/// `Z_q(t)`, the interaction-induced momentum shift of particle `q` at time `t`, in units
/// of `2π/L`.
pub fn eval_z_q(cfg: &InteractionConfig, q: usize, t: f64) -> Result<Vec<i64>> {
    let n = cfg.particle_count();
    if q == 0 || q > n {
        return Err(Error::OutOfRange { index: q, max: n });
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(domain(format!("time {t} outside [0, 1]")));
    }
    Ok(z_q_by(cfg, q, |ts| ts >= t))
}

/// `Z^l_1 = Z_{N_{l-1}+1}(0)`.
pub fn z_l_1(cfg: &InteractionConfig, l: usize) -> Vec<i64> {
    z_q_by(cfg, cfg.cycle_range(l).0, |_| true)
}

fn breakpoints(cfg: &InteractionConfig) -> Vec<f64> {
    let mut pts: Vec<f64> = cfg.couplings.iter().map(|c| c.t).collect();
    pts.push(0.0);
    pts.push(1.0);
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    pts
}

/// Per cycle: `(Σ_q ∫Z_q, Σ_q ∫|Z_q|²)`.
fn path_integrals_f64(cfg: &InteractionConfig) -> Vec<(Vec<f64>, f64)> {
    let mut acc = vec![(vec![0.0; cfg.dim], 0.0); cfg.cycle_sizes.len()];
    let pts = breakpoints(cfg);
    let n = cfg.particle_count();
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = b - a;
        for q in 1..=n {
            let z = z_q_by(cfg, q, |ts| ts >= b);
            let entry = &mut acc[cfg.cycle_of(q)];
            let mut sq = 0i64;
            for (s, &v) in entry.0.iter_mut().zip(&z) {
                *s += len * v as f64;
                sq += v * v;
            }
            entry.1 += len * sq as f64;
        }
    }
    acc
}

struct ExactMoments {
    sum: Vec<Vec<BigRational>>,
    sum_sq: Vec<BigRational>,
}

fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite time")
}

fn rational_int(v: i64) -> BigRational {
    BigRational::from_integer(v.into())
}

fn path_integrals_exact(cfg: &InteractionConfig) -> ExactMoments {
    let p = cfg.cycle_sizes.len();
    let mut sum = vec![vec![BigRational::zero(); cfg.dim]; p];
    let mut sum_sq = vec![BigRational::zero(); p];
    let pts = breakpoints(cfg);
    for w in pts.windows(2) {
        let len = rational(w[1]) - rational(w[0]);
        for q in 1..=cfg.particle_count() {
            let z = z_q_by(cfg, q, |ts| ts >= w[1]);
            let l = cfg.cycle_of(q);
            for (s, &v) in sum[l].iter_mut().zip(&z) {
                *s += &len * rational_int(v);
            }
            let sq: i64 = z.iter().map(|v| v * v).sum();
            sum_sq[l] += &len * rational_int(sq);
        }
    }
    ExactMoments { sum, sum_sq }
}

/// The two closed forms for `n_l Z̄^l`, by pair sums instead of time integration.
fn mean_closed_forms(cfg: &InteractionConfig, l: usize) -> (Vec<BigRational>, Vec<BigRational>) {
    let (s, e) = cfg.cycle_range(l);
    let base = s as i64 - 1;
    let mut first = vec![BigRational::zero(); cfg.dim];
    let mut second = vec![BigRational::zero(); cfg.dim];
    let in_c = |q: usize| (s..=e).contains(&q);
    for c in &cfg.couplings {
        let t = rational(c.t);
        let k_shift = rational_int(c.k as i64 - base - 1) + &t;
        let j_shift = rational_int(c.j as i64 - base - 1) + &t;
        let gap = rational_int(c.k as i64 - c.j as i64);
        for (i, &v) in c.z.iter().enumerate() {
            let v = rational_int(v);
            if c.j < s && in_c(c.k) {
                first[i] -= &k_shift * &v;
            }
            if in_c(c.j) && in_c(c.k) {
                first[i] -= &gap * &v;
            }
            if in_c(c.j) && c.k > e {
                first[i] += &j_shift * &v;
            }
            if in_c(c.k) {
                second[i] -= &k_shift * &v;
            }
            if in_c(c.j) {
                second[i] += &j_shift * &v;
            }
        }
    }
    (first, second)
}

/// Per-cycle kinematic summary. `mean` is `Z̄^l`, `second_moment` is the time and
/// cycle average of `|Z_q|²`, and `variance = second_moment − |mean|²`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KinematicSummary {
    pub z_l_1: Vec<Vec<i64>>,
    pub mean: Vec<Vec<f64>>,
    pub second_moment: Vec<f64>,
    pub variance: Vec<f64>,
    /// Time integration and both pair-sum forms of `n_l Z̄^l` agree exactly.
    pub mean_forms_agree: bool,
}

fn exact_variances(cfg: &InteractionConfig, m: &ExactMoments) -> Vec<BigRational> {
    (0..cfg.cycle_sizes.len())
        .map(|l| {
            let n = rational_int(cfg.cycle_sizes[l] as i64);
            let mean_sq: BigRational =
                m.sum[l].iter().map(|s| (s / &n) * (s / &n)).fold(BigRational::zero(), |a, b| a + b);
            &m.sum_sq[l] / &n - mean_sq
        })
        .collect()
}

pub fn summarize(cfg: &InteractionConfig) -> KinematicSummary {
    let exact = path_integrals_exact(cfg);
    let p = cfg.cycle_sizes.len();
    let mut agree = true;
    for l in 0..p {
        let (a, b) = mean_closed_forms(cfg, l);
        agree &= a == exact.sum[l] && b == exact.sum[l];
    }
    let variance = exact_variances(cfg, &exact);
    let to_f = |r: &BigRational| r.to_f64().unwrap_or(f64::NAN);
    KinematicSummary {
        z_l_1: (0..p).map(|l| z_l_1(cfg, l)).collect(),
        mean: (0..p).map(|l| exact.sum[l].iter().map(|s| to_f(s) / cfg.cycle_sizes[l] as f64).collect()).collect(),
        second_moment: (0..p).map(|l| to_f(&exact.sum_sq[l]) / cfg.cycle_sizes[l] as f64).collect(),
        variance: variance.iter().map(to_f).collect(),
        mean_forms_agree: agree,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct VarianceCheck {
    /// The exact variance of cycle `l` vanishes.
    pub variance_zero: bool,
    /// No coupling touches cycle `l`.
    pub alpha_condition: bool,
    /// A touching coupling sits at `t ∈ {0, 1}` or shares its time with another one;
    /// such measure-zero configurations are outside the equivalence.
    pub exceptional: bool,
}

impl VarianceCheck {
    pub fn consistent(&self) -> bool {
        self.exceptional || self.variance_zero == self.alpha_condition
    }
}

pub fn check_variance_zero(cfg: &InteractionConfig, l: usize) -> Result<VarianceCheck> {
    if l >= cfg.cycle_sizes.len() {
        return Err(Error::OutOfRange { index: l, max: cfg.cycle_sizes.len() - 1 });
    }
    let exact = path_integrals_exact(cfg);
    let variance_zero = exact_variances(cfg, &exact)[l].is_zero();
    let touching: Vec<f64> = cfg.couplings.iter().filter(|c| cfg.touches(l, c)).map(|c| c.t).collect();
    let mut sorted = touching.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let exceptional = touching.iter().any(|&t| t == 0.0 || t == 1.0) || sorted.windows(2).any(|w| w[0] == w[1]);
    Ok(VarianceCheck { variance_zero, alpha_condition: touching.is_empty(), exceptional })
}

fn theta_direct_1d(c: f64, w: f64, x_over_l: f64) -> Complex<f64> {
    let half = (SUM_CUT / c).sqrt().ceil() as i64 + 1;
    let centre = -w.round() as i64;
    (centre - half..=centre + half)
        .map(|z| {
            let y = z as f64 + w;
            Complex::from_polar((-c * y * y).exp(), 2.0 * PI * z as f64 * x_over_l)
        })
        .sum()
}

fn theta_dual_1d(cc: f64, w: f64, x_over_l: f64) -> Complex<f64> {
    let half = (SUM_CUT * cc / PI).sqrt().ceil() as i64 + 1;
    let centre = -x_over_l.round() as i64;
    let s: Complex<f64> = (centre - half..=centre + half)
        .map(|z| {
            let y = x_over_l + z as f64;
            Complex::from_polar((-PI * y * y / cc).exp(), -2.0 * PI * w * y)
        })
        .sum();
    s / cc.sqrt()
}

fn check_fn_args(x: &[f64], w: &[f64], params: &SystemParams, n: usize) -> Result<()> {
    if n == 0 {
        return Err(domain("f_n needs n >= 1"));
    }
    if x.len() != params.d as usize || w.len() != params.d as usize {
        return Err(domain(format!("x and w must have length d = {}", params.d)));
    }
    if x.iter().chain(w).any(|v| !v.is_finite()) {
        return Err(domain("x and w must be finite"));
    }
    Ok(())
}

/// Both forms of `f_n(x; w) = Σ_z exp(−π n λ² |z + w|²/L²) cos(2π z·x/L)`: the direct
/// lattice sum and its Poisson dual over images `x + Lz`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FnForms {
    pub direct: f64,
    pub dual: f64,
    /// `Σ_z exp(−π n λ² |z + w|²/L²)`, an upper bound on `|f_n|`.
    pub scale: f64,
}

impl FnForms {
    pub fn relative_gap(&self) -> f64 {
        (self.direct - self.dual).abs() / self.scale
    }
}

pub fn f_n_forms(x: &[f64], w: &[f64], params: &SystemParams, n: usize) -> Result<FnForms> {
    check_fn_args(x, w, params, n)?;
    let cc = params.cycle_c(n);
    let c = PI * cc;
    let mut direct = Complex::new(1.0, 0.0);
    let mut dual = Complex::new(1.0, 0.0);
    let mut scale = 1.0;
    for (&xi, &wi) in x.iter().zip(w) {
        let xl = xi / params.side;
        direct *= theta_direct_1d(c, wi, xl);
        dual *= theta_dual_1d(cc, wi, xl);
        scale *= if cc >= 1.0 { theta_direct_1d(c, wi, 0.0).re } else { theta_dual_1d(cc, wi, 0.0).re };
    }
    Ok(FnForms { direct: direct.re, dual: dual.re, scale })
}

/// `f_n(x; w)` from whichever form converges faster.
pub fn eval_f_n(x: &[f64], w: &[f64], params: &SystemParams, n: usize) -> Result<f64> {
    check_fn_args(x, w, params, n)?;
    let cc = params.cycle_c(n);
    let mut acc = Complex::new(1.0, 0.0);
    for (&xi, &wi) in x.iter().zip(w) {
        let xl = xi / params.side;
        acc *= if cc >= 1.0 { theta_direct_1d(PI * cc, wi, xl) } else { theta_dual_1d(cc, wi, xl) };
    }
    Ok(acc.re)
}

/// `∫_Λ f_n(x; w) dx = L^d exp(−π n λ² |w|²/L²)`.
pub fn f_n_integral_closed_form(w: &[f64], params: &SystemParams, n: usize) -> f64 {
    let w2: f64 = w.iter().map(|v| v * v).sum();
    params.volume() * (-PI * params.cycle_c(n) * w2).exp()
}

/// `∫_0^L f_n(x; w) dx` in `d = 1` by the periodic trapezoid rule on `points` nodes.
pub fn integrate_f_n_1d(w: f64, params: &SystemParams, n: usize, points: usize) -> Result<f64> {
    if params.d != 1 {
        return Err(domain("integrate_f_n_1d needs d = 1"));
    }
    if points == 0 {
        return Err(domain("quadrature needs at least one node"));
    }
    let h = params.side / points as f64;
    let mut s = 0.0;
    for i in 0..points {
        s += eval_f_n(&[i as f64 * h], &[w], params, n)?;
    }
    Ok(s * h)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FnRegime {
    /// `nλ²/L² → 0`.
    Vanishing,
    /// `nλ²/L² → ∞`.
    Diverging,
    /// `nλ²/L²` fixed.
    Fixed,
}

/// Leading asymptotic form of `f_n` in one regime, with an explicit bound on the
/// neglected part at the given finite parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FnAsymptotic {
    pub regime: FnRegime,
    pub exact: f64,
    pub leading: f64,
    pub bound: f64,
}

impl FnAsymptotic {
    pub fn within_bound(&self) -> bool {
        (self.exact - self.leading).abs() <= self.bound + 1e-13 * self.exact.abs().max(self.leading.abs())
    }
}

fn shifted_sums(c: f64, f: f64, half: i64) -> (f64, f64) {
    let mut s = 0.0;
    let mut t = 0.0;
    for z in -half..=half {
        let y = z as f64 + f;
        let e = (-c * y * y).exp();
        s += e;
        t += e * y.abs();
    }
    (s, t)
}

pub fn f_n_asymptotic(x: &[f64], w: &[f64], params: &SystemParams, n: usize, regime: FnRegime) -> Result<FnAsymptotic> {
    let forms = f_n_forms(x, w, params, n)?;
    let exact = if params.cycle_c(n) >= 1.0 { forms.direct } else { forms.dual };
    let cc = params.cycle_c(n);
    let c = PI * cc;
    let l = params.side;
    let phase = (2.0 * PI * x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / l).cos();
    let xnorm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let (leading, bound) = match regime {
        FnRegime::Vanishing => {
            let pref = cc.powf(-(params.d as f64) / 2.0);
            let x2: f64 = x.iter().map(|v| v * v).sum();
            let mut all = 1.0;
            let mut centre = 1.0;
            for &xi in x {
                let e0 = (-PI * xi * xi / (n as f64 * params.lambda.powi(2))).exp();
                all *= theta_dual_1d(cc, 0.0, xi / l).re * cc.sqrt();
                centre *= e0;
            }
            (pref * (-PI * x2 / (n as f64 * params.lambda.powi(2))).exp() * phase, pref * (all - centre).max(0.0))
        }
        FnRegime::Diverging | FnRegime::Fixed => {
            let frac: Vec<f64> = w.iter().map(|v| v - v.round()).collect();
            let full_half = (SUM_CUT / c).sqrt().ceil() as i64 + 2;
            let (full, full_abs): (Vec<f64>, Vec<f64>) = frac.iter().map(|&f| shifted_sums(c, f, full_half)).unzip();
            let half = if regime == FnRegime::Diverging { 1 } else { full_half };
            let (kept, kept_abs): (Vec<f64>, Vec<f64>) = frac.iter().map(|&f| shifted_sums(c, f, half)).unzip();
            let kept_prod: f64 = kept.iter().product();
            let full_prod: f64 = full.iter().product();
            let mut phase_err = 0.0;
            for i in 0..kept.len() {
                let others: f64 = kept.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, v)| v).product();
                phase_err += kept_abs[i] * others;
            }
            let _ = full_abs;
            let bound = phase_err * 2.0 * PI * xnorm / l + (full_prod - kept_prod).max(0.0);
            (kept_prod * phase, bound)
        }
    };
    Ok(FnAsymptotic { regime, exact, leading, bound })
}

/// The factor of cycle `l` in the Fourier representation, without the `δ_{Z^l_1,0}`
/// constraint: `exp(−π n_l λ² var_l/L²) f_{n_l}(x; Z̄^l)`, where `x` enters only for
/// cycle 0.
pub fn cycle_factor(cfg: &InteractionConfig, l: usize, x: Option<&[f64]>, params: &SystemParams) -> Result<f64> {
    if cfg.dim != params.d as usize {
        return Err(domain("configuration dimension differs from d"));
    }
    if l >= cfg.cycle_sizes.len() {
        return Err(Error::OutOfRange { index: l, max: cfg.cycle_sizes.len() - 1 });
    }
    let ints = path_integrals_f64(cfg);
    cycle_factor_from(&ints[l], cfg.cycle_sizes[l], if l == 0 { x } else { None }, params)
}

fn cycle_factor_from(ints: &(Vec<f64>, f64), n: usize, x: Option<&[f64]>, params: &SystemParams) -> Result<f64> {
    let nf = n as f64;
    let mean: Vec<f64> = ints.0.iter().map(|s| s / nf).collect();
    let var = (ints.1 / nf - mean.iter().map(|v| v * v).sum::<f64>()).max(0.0);
    let zero = vec![0.0; mean.len()];
    let f = eval_f_n(x.unwrap_or(&zero), &mean, params, n)?;
    Ok((-PI * params.cycle_c(n) * var).exp() * f)
}

/// `Π_l δ_{Z^l_1,0} × cycle factor`, the bracket of the Fourier representation.
pub fn path_weight(cfg: &InteractionConfig, x: &[f64], params: &SystemParams) -> Result<f64> {
    if (0..cfg.cycle_sizes.len()).any(|l| z_l_1(cfg, l).iter().any(|&v| v != 0)) {
        return Ok(0.0);
    }
    let ints = path_integrals_f64(cfg);
    let mut w = 1.0;
    for (l, int) in ints.iter().enumerate() {
        w *= cycle_factor_from(int, cfg.cycle_sizes[l], if l == 0 { Some(x) } else { None }, params)?;
    }
    Ok(w)
}

/// Cycle-`l` theta sum evaluated before completing the square:
/// `Σ_z exp(−(πλ²/L²) Σ_{q∈C_l} ∫|z + Z_q(t)|² dt) cos(2π z·x/L)`.
pub fn path_theta_direct(cfg: &InteractionConfig, l: usize, x: Option<&[f64]>, params: &SystemParams) -> Result<f64> {
    if cfg.dim != params.d as usize || l >= cfg.cycle_sizes.len() {
        return Err(domain("cycle index or dimension mismatch"));
    }
    let ints = path_integrals_f64(cfg);
    let (s1, s2) = &ints[l];
    let n = cfg.cycle_sizes[l] as f64;
    let k = PI * (params.lambda / params.side).powi(2);
    let half = (SUM_CUT / (k * n)).sqrt().ceil() as i64
        + s1.iter().map(|v| (v / n).abs().ceil() as i64).max().unwrap_or(0)
        + 1;
    let d = cfg.dim;
    let mut z = vec![-half; d];
    let mut total = 0.0;
    loop {
        let mut quad = *s2;
        let mut dot = 0.0;
        for i in 0..d {
            let zi = z[i] as f64;
            quad += n * zi * zi + 2.0 * zi * s1[i];
            if let Some(x) = x {
                dot += zi * x[i];
            }
        }
        total += (-k * quad).exp() * (2.0 * PI * dot / params.side).cos();
        let mut i = 0;
        while i < d {
            z[i] += 1;
            if z[i] <= half {
                break;
            }
            z[i] = -half;
            i += 1;
        }
        if i == d {
            return Ok(total);
        }
    }
}

/// Truncation of the Fourier series: total coupling count `Σα ≤ alpha_max`, each mode
/// in `[-z_max, z_max]^d ∖ {0}`; results with error above `tol` (relative) are flagged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub alpha_max: usize,
    pub z_max: i64,
    pub tol: f64,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation { alpha_max: 2, z_max: 8, tol: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FourierG {
    pub value: f64,
    /// Contribution of each shell `Σα = 0, 1, ...`.
    pub shells: Vec<f64>,
    pub last_shell: f64,
    /// Rigorous bound on everything the truncation drops.
    pub tail_bound: f64,
    /// Time-quadrature error estimate (difference of two Gauss–Legendre orders).
    pub quadrature_error: f64,
    pub error_estimate: f64,
    pub flagged: bool,
}

fn nonzero_box(d: usize, z_max: i64) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let mut z = vec![-z_max; d];
    loop {
        if z.iter().any(|&v| v != 0) {
            out.push(z.clone());
        }
        let mut i = 0;
        while i < d {
            z[i] += 1;
            if z[i] <= z_max {
                break;
            }
            z[i] = -z_max;
            i += 1;
        }
        if i == d {
            return out;
        }
    }
}

fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 0 {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

struct SimplexRule {
    points: Vec<(Vec<f64>, f64)>,
}

impl SimplexRule {
    /// Tensor Gauss–Legendre on `[0,1]^a` mapped onto `0 ≤ s_1 ≤ ... ≤ s_a ≤ 1`.
    fn new(a: usize, order: usize) -> Self {
        let (nodes, weights) = gauss_legendre_unit(order);
        let mut points = Vec::new();
        let total = order.pow(a as u32);
        for mut idx in 0..total {
            let mut u = vec![0.0; a];
            let mut w = 1.0;
            for ui in u.iter_mut() {
                *ui = nodes[idx % order];
                w *= weights[idx % order];
                idx /= order;
            }
            let mut s = vec![0.0; a];
            if a > 0 {
                s[a - 1] = u[a - 1];
                for k in (0..a - 1).rev() {
                    s[k] = s[k + 1] * u[k];
                }
                for sk in &s[1..] {
                    w *= sk;
                }
            }
            points.push((s, w));
        }
        SimplexRule { points }
    }
}

fn time_integral(
    cfg: &mut InteractionConfig,
    x: &[f64],
    params: &SystemParams,
    rule: &SimplexRule,
    perms: &[Vec<usize>],
) -> Result<f64> {
    let mut total = 0.0;
    for perm in perms {
        for (s, w) in &rule.points {
            for (r, &slot) in perm.iter().enumerate() {
                cfg.couplings[slot].t = s[r];
            }
            let ints = path_integrals_f64(cfg);
            let mut v = 1.0;
            for (l, int) in ints.iter().enumerate() {
                v *= cycle_factor_from(int, cfg.cycle_sizes[l], if l == 0 { Some(x) } else { None }, params)?;
            }
            total += w * v;
        }
    }
    Ok(total)
}

fn check_g_args(x: &[f64], cycle_sizes: &[usize], params: &SystemParams) -> Result<usize> {
    if cycle_sizes.is_empty() || cycle_sizes.contains(&0) {
        return Err(domain("cycle sizes must be positive"));
    }
    if x.len() != params.d as usize {
        return Err(domain(format!("x must have length d = {}", params.d)));
    }
    Ok(cycle_sizes.iter().sum())
}

/// Truncated Fourier series for `G[{n_l}](x)`, including the mean-field factor
/// `exp(−β û(0) N(N−1)/(2L^d))` and the constraints `δ_{Z^l_1,0}`.
pub fn eval_g_fourier(
    x: &[f64],
    cycle_sizes: &[usize],
    params: &SystemParams,
    pot: &PairPotential,
    trunc: Truncation,
) -> Result<FourierG> {
    let n = check_g_args(x, cycle_sizes, params)?;
    if n > MAX_FOURIER_PARTICLES {
        return Err(Error::Refused(format!("Fourier evaluation supports N <= {MAX_FOURIER_PARTICLES}, got {n}")));
    }
    if trunc.z_max < 1 {
        return Err(domain("z_max must be >= 1"));
    }
    let d = params.d as usize;
    let vol = params.volume();
    let pairs: Vec<(usize, usize)> = (1..=n).flat_map(|j| (j + 1..=n).map(move |k| (j, k))).collect();
    let modes: Vec<(Vec<i64>, f64)> = if pot.is_zero() {
        Vec::new()
    } else {
        nonzero_box(d, trunc.z_max)
            .into_iter()
            .map(|z| {
                let k: Vec<f64> = z.iter().map(|&v| v as f64 / params.side).collect();
                let u = pot.u_hat(&k);
                (z, u)
            })
            .collect()
    };
    let alpha_top = if pot.is_zero() { 0 } else { trunc.alpha_max };
    let work: f64 = (0..=alpha_top)
        .map(|a| {
            compositions(a, pairs.len()).len() as f64
                * (modes.len() as f64).powi(a as i32)
                * factorial(a)
                * 8f64.powi(a as i32)
        })
        .sum();
    if work > MAX_INTEGRAND_EVALS {
        return Err(Error::ResourceLimit(format!("about {work:.2e} integrand evaluations requested")));
    }

    let mean_field = (-params.beta * pot.u_hat_0(params.d) * (n * (n - 1)) as f64 / (2.0 * vol)).exp();
    let cycle_of: Vec<usize> = cycle_sizes.iter().enumerate().flat_map(|(l, &s)| std::iter::repeat_n(l, s)).collect();
    let mut shells = Vec::new();
    let mut quad_err = 0.0;
    for a in 0..=alpha_top {
        let perms = permutations(a);
        let fine = SimplexRule::new(a, 8);
        let coarse = SimplexRule::new(a, 6);
        let mut shell = 0.0;
        for alpha in compositions(a, pairs.len()) {
            let slots: Vec<(usize, usize)> =
                pairs.iter().zip(&alpha).flat_map(|(&p, &m)| std::iter::repeat_n(p, m)).collect();
            let pref = alpha.iter().map(|&m| 1.0 / factorial(m)).product::<f64>() * (-params.beta / vol).powi(a as i32);
            let mut idx = vec![0usize; a];
            loop {
                let mut balance = vec![vec![0i64; d]; cycle_sizes.len()];
                for (r, &(j, k)) in slots.iter().enumerate() {
                    let (lj, lk) = (cycle_of[j - 1], cycle_of[k - 1]);
                    if lj != lk {
                        for i in 0..d {
                            balance[lj][i] += modes[idx[r]].0[i];
                            balance[lk][i] -= modes[idx[r]].0[i];
                        }
                    }
                }
                if balance.iter().all(|b| b.iter().all(|&v| v == 0)) {
                    let weight: f64 = pref * idx.iter().map(|&i| modes[i].1).product::<f64>();
                    let mut cfg = InteractionConfig {
                        dim: d,
                        cycle_sizes: cycle_sizes.to_vec(),
                        couplings: slots
                            .iter()
                            .zip(&idx)
                            .map(|(&(j, k), &i)| Coupling { j, k, z: modes[i].0.clone(), t: 0.5 })
                            .collect(),
                    };
                    let hi = time_integral(&mut cfg, x, params, &fine, &perms)?;
                    let lo = time_integral(&mut cfg, x, params, &coarse, &perms)?;
                    shell += weight * hi;
                    quad_err += (weight * (hi - lo)).abs();
                }
                let mut r = 0;
                while r < a {
                    idx[r] += 1;
                    if idx[r] < modes.len() {
                        break;
                    }
                    idx[r] = 0;
                    r += 1;
                }
                if r == a {
                    break;
                }
            }
        }
        shells.push(mean_field * shell);
    }
    quad_err *= mean_field;
    let value: f64 = shells.iter().sum();

    let q_prod: f64 = cycle_sizes.iter().map(|&s| params.q_value(s)).product();
    let tail_bound = if pot.is_zero() {
        0.0
    } else {
        let s_full = pot.fourier_sum_nonzero(params.side, params.d);
        let s_in: f64 = modes.iter().map(|m| m.1.abs()).sum();
        let scale = pairs.len() as f64 * params.beta / vol;
        let (x_full, x_in) = (scale * s_full, scale * s_in.min(s_full));
        let mut dropped = 0.0;
        let mut term = 1.0;
        let mut term_in = 1.0;
        for k in 1..=trunc.alpha_max {
            term *= x_full / k as f64;
            term_in *= x_in / k as f64;
            dropped += term - term_in;
        }
        let mut k = trunc.alpha_max + 1;
        loop {
            term *= x_full / k as f64;
            dropped += term;
            if term <= 1e-17 * dropped || term == 0.0 {
                break;
            }
            k += 1;
        }
        mean_field * q_prod * dropped.max(0.0)
    };
    let error_estimate = tail_bound + quad_err;
    Ok(FourierG {
        value,
        last_shell: shells.last().map_or(0.0, |s| s.abs()),
        shells,
        tail_bound,
        quadrature_error: quad_err,
        error_estimate,
        flagged: error_estimate > trunc.tol * value.abs(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleG {
    /// Richardson extrapolation in `1/m²` of the two finest time discretizations.
    pub value: f64,
    /// Raw discrete-time value at `m` slices.
    pub raw: f64,
    pub error_estimate: f64,
    pub m: usize,
    pub grid: usize,
}

const ORACLE_MAX_M: usize = 4;
const ORACLE_MAX_GRID: usize = 256;

fn transfer_g(cycle_sizes: &[usize], params: &SystemParams, pot: &PairPotential, m: usize, grid: usize) -> f64 {
    let l = params.side;
    let h = l / grid as f64;
    let lam2 = params.lambda * params.lambda / m as f64;
    let kernel = |dx: f64| -> f64 {
        let half = (SUM_CUT * lam2 / (PI * l * l)).sqrt().ceil() as i64 + 2;
        let s: f64 = (-half..=half)
            .map(|z| {
                let y = dx + l * z as f64;
                (-PI * y * y / lam2).exp()
            })
            .sum();
        s / lam2.sqrt()
    };
    let kvals: Vec<f64> = (0..grid).map(|i| kernel(i as f64 * h)).collect();
    let evals: Vec<f64> =
        (0..grid).map(|i| (-(params.beta / m as f64) * periodize_u(pot, &[i as f64 * h], l, 1e-18)).exp()).collect();
    let at = |v: &[f64], a: usize, b: usize| v[(a + grid - b) % grid];
    let k_mat = Array2::from_shape_fn((grid, grid), |(a, b)| h * at(&kvals, a, b));
    let e_mat = Array2::from_shape_fn((grid, grid), |(a, b)| at(&evals, a, b));
    let closed_pair = cycle_sizes.len() == 2;
    let mut total = 0.0;
    for s in 0..grid {
        let mut psi = Array2::from_shape_fn((grid, grid), |(a, b)| at(&kvals, a, 0) * at(&kvals, b, s) * e_mat[[a, b]]);
        for _ in 1..m {
            psi = k_mat.t().dot(&psi).dot(&k_mat) * &e_mat;
        }
        total += if closed_pair { psi[[0, s]] } else { psi[[s, 0]] };
    }
    l * h * total
}

/// Discrete-time path-integral value of `G[{n_l}]` at `x = 0` for two particles in
/// `d = 1`, by transfer matrices on a uniform periodic grid. The estimate is Richardson
/// extrapolated from `m − 1` and `m` slices; its error combines the extrapolation step
/// and a grid-halving comparison.
pub fn eval_g_oracle(
    cycle_sizes: &[usize],
    params: &SystemParams,
    pot: &PairPotential,
    m: usize,
    grid: usize,
) -> Result<OracleG> {
    if params.d != 1 {
        return Err(Error::Refused("oracle supports d = 1 only".into()));
    }
    if cycle_sizes != [2] && cycle_sizes != [1, 1] {
        return Err(Error::Refused("oracle supports the two-particle partitions [2] and [1,1]".into()));
    }
    if m > ORACLE_MAX_M || grid > ORACLE_MAX_GRID {
        return Err(Error::ResourceLimit(format!("oracle needs m <= {ORACLE_MAX_M} and grid <= {ORACLE_MAX_GRID}")));
    }
    if m < 2 || grid < 16 || !grid.is_multiple_of(2) {
        return Err(domain("oracle needs m >= 2 and an even grid >= 16"));
    }
    let extrapolate = |g: usize| -> (f64, f64) {
        let hi = transfer_g(cycle_sizes, params, pot, m, g);
        let lo = transfer_g(cycle_sizes, params, pot, m - 1, g);
        let (a, b) = ((m * m) as f64, ((m - 1) * (m - 1)) as f64);
        ((a * hi - b * lo) / (a - b), hi)
    };
    let (value, raw) = extrapolate(grid);
    let (coarse, _) = extrapolate(grid / 2);
    Ok(OracleG { value, raw, error_estimate: (value - raw).abs() + (value - coarse).abs(), m, grid })
}

/// The two-particle closed forms `(f_[2], f_[1,1])` for couplings on the pair `(1, 2)`.
pub fn n2_closed_forms(cfg: &InteractionConfig, params: &SystemParams) -> Result<(f64, f64)> {
    if cfg.particle_count() != 2 || cfg.dim != params.d as usize {
        return Err(domain("closed forms need a two-particle configuration of matching dimension"));
    }
    let k = PI * (params.lambda / params.side).powi(2);
    let d = cfg.dim;
    let cs = &cfg.couplings;
    let dot = |a: &[i64], b: &[i64]| a.iter().zip(b).map(|(x, y)| (x * y) as f64).sum::<f64>();
    let mut q2 = 0.0;
    let mut q11 = 0.0;
    for a in cs {
        for b in cs {
            let zz = dot(&a.z, &b.z);
            q2 += (0.5 - (a.t - b.t).abs()) * zz;
            q11 += (a.t.min(b.t) - a.t * b.t) * zz;
        }
    }
    let zero = vec![0.0; d];
    let half_sum: Vec<f64> = (0..d).map(|i| -0.5 * cs.iter().map(|c| c.z[i] as f64).sum::<f64>()).collect();
    let weighted: Vec<f64> = (0..d).map(|i| cs.iter().map(|c| c.t * c.z[i] as f64).sum::<f64>()).collect();
    let f2 = (-k * q2).exp() * eval_f_n(&zero, &half_sum, params, 2)?;
    let f11 = (-2.0 * k * q11).exp() * eval_f_n(&zero, &weighted, params, 1)?.powi(2);
    Ok((f2, f11))
}
