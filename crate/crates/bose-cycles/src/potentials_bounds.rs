//! Pair potentials, free-energy bounds, cycle-decoupled criticality and coupling rates.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bec_observables::{free_energy_density_ideal, CycleDistribution};
use crate::cycle_recursion::{dcp_table, ideal_table};
use crate::error::{domain, Error, Result};
use crate::numerics::{polylog_tail, riemann_zeta, SystemParams};

/// Positive, positive-type pair potential. The Fourier convention is
/// `û(k) = ∫ e^{-2πi k·x} u(x) dx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PairPotential {
    Zero,
    Gaussian { amplitude: f64, width: f64 },
}

impl PairPotential {
    pub fn gaussian(amplitude: f64, width: f64) -> Result<Self> {
        if !(amplitude >= 0.0) || !amplitude.is_finite() {
            return Err(domain(format!("Gaussian amplitude must be >= 0, got {amplitude}")));
        }
        if !(width > 0.0) || !width.is_finite() {
            return Err(domain(format!("Gaussian width must be > 0, got {width}")));
        }
        Ok(PairPotential::Gaussian { amplitude, width })
    }

    /// Parse `family=gaussian, A=1, sigma=0.5` or `family=zero`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut family = None;
        let mut a = None;
        let mut sigma = None;
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| domain(format!("potential entry '{part}' is not key=value")))?;
            let v = v.trim();
            let num = || v.parse::<f64>().map_err(|_| domain(format!("bad number '{v}' for {}", k.trim())));
            match k.trim() {
                "family" => family = Some(v.to_ascii_lowercase()),
                "A" | "amplitude" => a = Some(num()?),
                "sigma" | "width" => sigma = Some(num()?),
                other => return Err(domain(format!("unknown potential key '{other}'"))),
            }
        }
        match family.as_deref() {
            Some("zero") => Ok(PairPotential::Zero),
            Some("gaussian") => PairPotential::gaussian(
                a.ok_or_else(|| domain("gaussian potential needs A"))?,
                sigma.ok_or_else(|| domain("gaussian potential needs sigma"))?,
            ),
            Some(f) => Err(domain(format!("unknown potential family '{f}'"))),
            None => Err(domain("potential needs family=...")),
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            PairPotential::Zero => true,
            PairPotential::Gaussian { amplitude, .. } => amplitude == 0.0,
        }
    }

    pub fn u_sq(&self, r2: f64) -> f64 {
        match *self {
            PairPotential::Zero => 0.0,
            PairPotential::Gaussian { amplitude, width } => amplitude * (-r2 / (2.0 * width * width)).exp(),
        }
    }

    pub fn u(&self, x: &[f64]) -> f64 {
        self.u_sq(x.iter().map(|v| v * v).sum())
    }

    /// `û` at squared frequency `|k|²` in dimension `d`.
    pub fn u_hat_sq(&self, k2: f64, d: u32) -> f64 {
        match *self {
            PairPotential::Zero => 0.0,
            PairPotential::Gaussian { amplitude, width } => {
                amplitude
                    * (2.0 * PI * width * width).powf(d as f64 / 2.0)
                    * (-2.0 * PI * PI * width * width * k2).exp()
            }
        }
    }

    pub fn u_hat(&self, k: &[f64]) -> f64 {
        self.u_hat_sq(k.iter().map(|v| v * v).sum(), k.len() as u32)
    }

    pub fn u0(&self) -> f64 {
        self.u_sq(0.0)
    }

    pub fn u_hat_0(&self, d: u32) -> f64 {
        self.u_hat_sq(0.0, d)
    }

    /// `1/λ_u² = ∫ û(x) x² dx / ‖û‖₁`; `None` for the zero potential.
    pub fn inv_lambda_u_sq(&self, d: u32) -> Option<f64> {
        match *self {
            PairPotential::Gaussian { amplitude, width } if amplitude > 0.0 => {
                Some(d as f64 / (4.0 * PI * PI * width * width))
            }
            _ => None,
        }
    }

    pub fn lambda_u(&self, d: u32) -> Option<f64> {
        self.inv_lambda_u_sq(d).map(|v| 1.0 / v.sqrt())
    }

    /// Smallest `z_max` such that the dropped part of `Σ_{z≠0} û(z/L)` over the box
    /// `[-z_max, z_max]^d` is below `rel` times the kept part.
    pub fn fourier_cutoff(&self, side: f64, d: u32, rel: f64) -> i64 {
        let PairPotential::Gaussian { width, .. } = *self else { return 0 };
        let a = 2.0 * PI * PI * width * width / (side * side);
        let one_d = |zmax: i64| -> (f64, f64) {
            let kept: f64 = (-zmax..=zmax).map(|z| (-a * (z * z) as f64).exp()).sum();
            let mut tail = 0.0;
            let mut z = zmax + 1;
            loop {
                let t = 2.0 * (-a * (z * z) as f64).exp();
                tail += t;
                if t < 1e-30 * tail.max(1e-300) || t == 0.0 {
                    break;
                }
                z += 1;
            }
            (kept, tail)
        };
        let mut zmax = 1;
        loop {
            let (kept, tail) = one_d(zmax);
            let full = kept + tail;
            let dropped = full.powi(d as i32) - kept.powi(d as i32);
            let kept_nonzero = kept.powi(d as i32) - 1.0;
            if dropped <= rel * kept_nonzero || zmax > 100_000 {
                return zmax;
            }
            zmax += 1;
        }
    }

    /// `Σ_{z∈Z^d∖{0}} û(z/L)` over the full lattice.
    pub fn fourier_sum_nonzero(&self, side: f64, d: u32) -> f64 {
        match *self {
            PairPotential::Zero => 0.0,
            PairPotential::Gaussian { amplitude, width } => {
                let a = 2.0 * PI * PI * width * width / (side * side);
                let prefactor = amplitude * (2.0 * PI * width * width).powf(d as f64 / 2.0);
                let t = crate::numerics::theta1(a / PI);
                prefactor * (t.powi(d as i32) - 1.0)
            }
        }
    }
}

fn reduce_coord(x: f64, side: f64) -> f64 {
    x - side * (x / side).round()
}

/// `u_L(x) = Σ_{z∈Z^d} u(x + Lz)`, summed in symmetric max-norm shells until a shell
/// contributes less than `tol`.
pub fn periodize_u(pot: &PairPotential, x: &[f64], side: f64, tol: f64) -> f64 {
    if pot.is_zero() {
        return 0.0;
    }
    let d = x.len();
    let xr: Vec<f64> = x.iter().map(|&v| reduce_coord(v, side)).collect();
    let dist2 = |z: &[i64], sign: f64| -> f64 {
        xr.iter()
            .zip(z)
            .map(|(&xi, &zi)| {
                let y = xi + sign * side * zi as f64;
                y * y
            })
            .sum()
    };
    let mut total = pot.u_sq(dist2(&vec![0; d], 1.0));
    let mut r: i64 = 1;
    loop {
        let mut shell = 0.0;
        let mut z = vec![-r; d];
        loop {
            let max = z.iter().map(|v| v.abs()).max().unwrap_or(0);
            let first_nonzero = z.iter().copied().find(|&v| v != 0).unwrap_or(0);
            if max == r && first_nonzero > 0 {
                shell += pot.u_sq(dist2(&z, 1.0)) + pot.u_sq(dist2(&z, -1.0));
            }
            let mut i = 0;
            while i < d {
                z[i] += 1;
                if z[i] <= r {
                    break;
                }
                z[i] = -r;
                i += 1;
            }
            if i == d {
                break;
            }
        }
        total += shell;
        if shell < tol && (r as f64 - 0.5) * side > 0.0 {
            return total;
        }
        r += 1;
    }
}

fn validate_positive_type(pot: &PairPotential) -> Result<()> {
    match *pot {
        PairPotential::Zero => Ok(()),
        PairPotential::Gaussian { amplitude, width } => {
            if amplitude >= 0.0 && width > 0.0 {
                Ok(())
            } else {
                Err(Error::Refused("potential must be positive and positive-type".into()))
            }
        }
    }
}

/// `2^{d/2-1} ζ(d/2) û(0)/λ^d`, the per-density coefficient of the upper bound.
fn upper_linear_coefficient(params: &SystemParams, pot: &PairPotential) -> Result<f64> {
    let u_hat_0 = pot.u_hat_0(params.d);
    if u_hat_0 == 0.0 {
        return Ok(0.0);
    }
    if params.d < 3 {
        return Err(domain("upper bound needs d >= 3 (zeta(d/2) diverges)"));
    }
    let d = params.d as f64;
    Ok(2f64.powf(d / 2.0 - 1.0) * riemann_zeta(d / 2.0)? * u_hat_0 / params.lambda.powi(params.d as i32))
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundsReport {
    pub lower: f64,
    pub value: Option<f64>,
    pub upper: f64,
    /// Ideal-gas free energy density at the same `(N, L)`.
    pub f0: f64,
    pub params: SystemParams,
    pub potential: PairPotential,
}

impl BoundsReport {
    pub fn with_value(mut self, v: f64) -> Self {
        self.value = Some(v);
        self
    }

    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }

    /// `lower <= value <= upper` up to rounding (`1e-12` of the largest magnitude);
    /// `true` when no value is attached.
    pub fn contains_value(&self) -> bool {
        self.value.is_none_or(|v| {
            let tol = 1e-12 * v.abs().max(self.lower.abs()).max(self.upper.abs());
            self.lower - tol <= v && v <= self.upper + tol
        })
    }
}

/// Lower and upper free-energy density bounds for a positive, positive-type potential.
pub fn free_energy_bounds(params: &SystemParams, pot: &PairPotential) -> Result<BoundsReport> {
    validate_positive_type(pot)?;
    let f0 = free_energy_density_ideal(&ideal_table(params)?)?;
    let rho = params.rho();
    let quad = pot.u_hat_0(params.d) / 2.0 * rho * rho;
    let lower = quad - pot.u0() / 2.0 * rho + f0;
    let upper = quad + upper_linear_coefficient(params, pot)? * rho + f0;
    Ok(BoundsReport { lower, value: None, upper, f0, params: *params, potential: *pot })
}

/// Closed-form bound gap `(u(0)/2)ρ + 2^{d/2-1}ζ(d/2)û(0)ρ/λ^d`.
pub fn bounds_gap_closed_form(params: &SystemParams, pot: &PairPotential) -> Result<f64> {
    let rho = params.rho();
    Ok(pot.u0() / 2.0 * rho + upper_linear_coefficient(params, pot)? * rho)
}

/// Free energy density of the cycle-decoupled model with exponential weights:
/// `-ln Q̃_N/(βL^d) + û(0)ρ²/2`.
pub fn dcp_free_energy(params: &SystemParams, gamma: f64, pot: &PairPotential) -> Result<f64> {
    let t = dcp_table(params, gamma)?;
    let rho = params.rho();
    Ok(-t.ln_q(params.n) / (params.beta * params.volume()) + pot.u_hat_0(params.d) * rho * rho / 2.0)
}

/// Single-cycle factors `φ⁰_n`: an explicit head, then `e^{γn}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiSequence {
    pub head: Vec<f64>,
    pub gamma: f64,
}

impl PhiSequence {
    pub fn exponential(gamma: f64) -> Self {
        PhiSequence { head: Vec::new(), gamma }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DcpCritical {
    pub zeta_dcp: f64,
    pub mu_bar: f64,
}

fn check_phi(phi: &PhiSequence, beta: f64, d: u32) -> Result<()> {
    if !(beta > 0.0) {
        return Err(domain("beta must be positive"));
    }
    if !phi.gamma.is_finite() {
        return Err(domain("gamma must be finite"));
    }
    if let Some(i) = phi.head.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(domain(format!("phi_{} must be positive and finite", i + 1)));
    }
    if d <= 2 {
        return Err(Error::Divergence(format!("sum of n^(-d/2) diverges at d = {d}")));
    }
    Ok(())
}

/// `Σ φ⁰_n e^{βnμ}/n^{d/2}` for `μ <= μ̄`.
pub fn dcp_series(phi: &PhiSequence, beta: f64, d: u32, mu: f64) -> Result<f64> {
    check_phi(phi, beta, d)?;
    let s = d as f64 / 2.0;
    let head: f64 = phi
        .head
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let n = (i + 1) as f64;
            p * (beta * n * mu).exp() / n.powf(s)
        })
        .sum();
    let x = phi.gamma + beta * mu;
    if x > 1e-15 {
        return Err(Error::Divergence(format!("mu = {mu} exceeds mu_bar = {}", -phi.gamma / beta)));
    }
    let z = x.min(0.0).exp();
    Ok(head + polylog_tail(s, z, phi.head.len() as u64 + 1)?)
}

/// `μ̄ = -γ/β` and `ζ^{dcp} = Σ φ⁰_n e^{βnμ̄}/n^{d/2}`.
pub fn dcp_critical(phi: &PhiSequence, beta: f64, d: u32) -> Result<DcpCritical> {
    check_phi(phi, beta, d)?;
    let mu_bar = -phi.gamma / beta;
    Ok(DcpCritical { zeta_dcp: dcp_series(phi, beta, d, mu_bar)?, mu_bar })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DcpChemicalPotential {
    pub mu: f64,
    pub residual: f64,
    pub at_or_above_critical: bool,
}

/// Solve `Σ φ⁰_n e^{βnμ}/n^{d/2} = ρλ^d` for `μ` by bisection; `μ = μ̄` at or above criticality.
pub fn solve_dcp_mu(phi: &PhiSequence, beta: f64, d: u32, rho_lambda_d: f64) -> Result<DcpChemicalPotential> {
    if !(rho_lambda_d > 0.0) {
        return Err(domain("rho*lambda^d must be positive"));
    }
    let crit = dcp_critical(phi, beta, d)?;
    if rho_lambda_d >= crit.zeta_dcp {
        return Ok(DcpChemicalPotential {
            mu: crit.mu_bar,
            residual: crit.zeta_dcp - rho_lambda_d.min(crit.zeta_dcp),
            at_or_above_critical: true,
        });
    }
    let f = |mu: f64| dcp_series(phi, beta, d, mu).map(|v| v - rho_lambda_d);
    let hi0 = crit.mu_bar;
    let mut step = 1.0 / beta;
    let mut lo = hi0 - step;
    while f(lo)? > 0.0 {
        step *= 2.0;
        lo = hi0 - step;
        if step > 1e6 / beta {
            return Err(domain("could not bracket the chemical potential"));
        }
    }
    let mut hi = hi0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 * hi0.abs().max(1.0 / beta) {
            break;
        }
    }
    let mu = 0.5 * (lo + hi);
    Ok(DcpChemicalPotential { mu, residual: f(mu)?.abs(), at_or_above_critical: false })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateMode {
    Pairs,
    SingleCircle,
}

/// Inputs of the coupling-rate formulas. `eps` enters the pair mode, `eps0` the
/// single-circle mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateInputs {
    pub c: f64,
    pub a: f64,
    pub eps: f64,
    pub eps0: f64,
    pub v: f64,
    pub c1: f64,
    pub rho: f64,
    pub lambda: f64,
    pub d: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingRate {
    /// `(1/N) ln` of the displayed expression.
    pub rate: f64,
    /// Closed-form maximizing `c - a` (pair mode, `c^c/a^a` neglected).
    pub maximizing_gap: f64,
    /// Exponent `C` of `Q̃ = e^{CN} Q̃^{dcp}` at the maximizing gap.
    pub c_const: f64,
}

fn xlnx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

fn kinetic_exponent(p: &RateInputs) -> f64 {
    p.c1 * p.lambda * p.lambda * p.rho.powf(2.0 / p.d as f64)
}

/// Pair-mode log-rate per particle as a function of `a`.
pub fn pair_rate(p: &RateInputs, a: f64) -> f64 {
    let gap = p.c - a;
    let k = kinetic_exponent(p);
    let loss_gain = if gap == 0.0 { 0.0 } else { gap / 2.0 * (p.eps * p.rho * p.v / (std::f64::consts::E * gap)).ln() };
    loss_gain + xlnx(p.c) - xlnx(a) - gap * k
}

pub fn coupling_rate(p: &RateInputs, mode: RateMode) -> Result<CouplingRate> {
    if p.d == 0 {
        return Err(domain("d must be >= 1"));
    }
    for (name, v) in [("eps", p.eps), ("eps0", p.eps0), ("v", p.v), ("rho", p.rho), ("c1", p.c1), ("lambda", p.lambda)]
    {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(domain(format!("{name} must be finite and >= 0, got {v}")));
        }
    }
    let k = kinetic_exponent(p);
    let maximizing_gap = p.eps * p.rho * p.v * (-2.0 * (k + 1.0)).exp();
    let rate = match mode {
        RateMode::Pairs => {
            if !(p.c > 0.0 && p.c < 1.0) {
                return Err(domain(format!("pair mode needs 0 < c < 1, got c = {}", p.c)));
            }
            if !(p.a >= 0.0 && p.a <= p.c) {
                return Err(domain(format!("pair mode needs 0 <= a <= c, got a = {}", p.a)));
            }
            if p.a < p.c && !(p.eps * p.rho * p.v > 0.0) {
                return Err(domain("pair mode with a < c needs eps*rho*v > 0"));
            }
            pair_rate(p, p.a)
        }
        RateMode::SingleCircle => {
            if !(p.c > 0.0 && p.c < 1.0) {
                return Err(domain(format!("single-circle mode needs 0 < c < 1, got c = {}", p.c)));
            }
            let base = p.c * p.eps0 * p.rho * p.v;
            if !(base > 0.0) {
                return Err(domain("single-circle mode needs c*eps0*rho*v > 0"));
            }
            p.c * (base.ln() - k - 1.0)
        }
    };
    Ok(CouplingRate { rate, maximizing_gap, c_const: maximizing_gap / 2.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CycleCount {
    /// `⟨p⟩ = (N/ρ) Σ ρ_k/k`.
    pub expected: f64,
    /// `⟨p⟩/N`, the finite-volume estimate of `B(ρ, β)`.
    pub per_particle: f64,
}

pub fn expected_cycle_count(dist: &CycleDistribution) -> CycleCount {
    let rho = dist.params.rho();
    let n = dist.params.n as f64;
    let s: f64 = dist.rho_n.iter().enumerate().map(|(i, r)| r / (i + 1) as f64).sum();
    let expected = n / rho * s;
    CycleCount { expected, per_particle: expected / n }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_potential_text() {
        let p = PairPotential::parse("family=gaussian, A=1, sigma=0.5").unwrap();
        assert_eq!(p, PairPotential::Gaussian { amplitude: 1.0, width: 0.5 });
        assert_eq!(PairPotential::parse("family=zero").unwrap(), PairPotential::Zero);
        assert!(PairPotential::parse("family=gaussian, A=1").is_err());
        assert!(PairPotential::parse("family=yukawa").is_err());
        assert!(PairPotential::parse("family=gaussian, A=1, sigma=-1").is_err());
    }

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn gaussian_self_consistency() {
        let p = PairPotential::gaussian(1.3, 0.7).unwrap();
        let int_u = simpson(|x| p.u(&[x]), -12.0, 12.0, 4000);
        assert!((int_u - p.u_hat_0(1)).abs() < 1e-10);
        let int_uh = simpson(|k| p.u_hat(&[k]), -5.0, 5.0, 4000);
        assert!((int_uh - p.u0()).abs() < 1e-10);
        let m2 = simpson(|k| p.u_hat(&[k]) * k * k, -5.0, 5.0, 4000) / int_uh;
        assert!((m2 - p.inv_lambda_u_sq(1).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn periodization() {
        let p = PairPotential::gaussian(1.0, 0.5).unwrap();
        let direct: f64 = (-20..=20).map(|z| p.u(&[0.3 + 2.0 * z as f64])).sum();
        assert!((periodize_u(&p, &[0.3], 2.0, 1e-18) - direct).abs() < 1e-12);
        let x = [0.375, -1.25];
        let a = periodize_u(&p, &x, 4.0, 1e-18);
        assert_eq!(a, periodize_u(&p, &[-0.375, 1.25], 4.0, 1e-18));
        assert_eq!(a, periodize_u(&p, &[4.375, -1.25], 4.0, 1e-18));
        assert!((periodize_u(&p, &[0.2], 40.0, 1e-18) - p.u(&[0.2])).abs() < 1e-15);
    }

    #[test]
    fn fourier_cutoff_tail() {
        let p = PairPotential::gaussian(1.0, 0.5).unwrap();
        let zmax = p.fourier_cutoff(4.0, 1, 1e-12);
        let kept: f64 = (1..=zmax).map(|z| 2.0 * p.u_hat(&[z as f64 / 4.0])).sum();
        assert!((p.fourier_sum_nonzero(4.0, 1) - kept) <= 1e-12 * kept);
        let short: f64 = (1..zmax).map(|z| 2.0 * p.u_hat(&[z as f64 / 4.0])).sum();
        assert!((p.fourier_sum_nonzero(4.0, 1) - short) > 1e-12 * short);
    }

    #[test]
    fn bounds_zero_and_gap() {
        let params = SystemParams::with_density(3, 1.0, 1.0, 1.0, 128).unwrap();
        let r = free_energy_bounds(&params, &PairPotential::Zero).unwrap();
        assert_eq!(r.lower, r.f0);
        assert_eq!(r.upper, r.f0);
        let g = PairPotential::gaussian(0.8, 0.6).unwrap();
        let r = free_energy_bounds(&params, &g).unwrap();
        let gap = bounds_gap_closed_form(&params, &g).unwrap();
        assert!((r.gap() - gap).abs() <= 1e-12 * gap.max(1.0));
        assert!(r.lower <= r.upper);
    }

    #[test]
    fn dcp_critical_exponential_family() {
        for &gamma in &[-0.5, 0.0, 0.3] {
            let c = dcp_critical(&PhiSequence::exponential(gamma), 2.0, 3).unwrap();
            assert!((c.zeta_dcp - riemann_zeta(1.5).unwrap()).abs() < 1e-10);
            assert!((c.mu_bar + gamma / 2.0).abs() < 1e-15);
        }
        assert!(matches!(dcp_critical(&PhiSequence::exponential(0.0), 1.0, 2), Err(Error::Divergence(_))));
    }

    #[test]
    fn dcp_mu_matches_fugacity() {
        let phi = PhiSequence::exponential(-0.2);
        let beta = 1.5;
        let target = riemann_zeta(1.5).unwrap() / 2.0;
        let sol = solve_dcp_mu(&phi, beta, 3, target).unwrap();
        assert!(sol.residual < 1e-10);
        assert!(sol.mu < -phi.gamma / beta);
        let fug = crate::bec_observables::solve_fugacity(target, 3).unwrap();
        assert!((sol.mu - (fug.z.ln() - phi.gamma) / beta).abs() < 1e-9);
    }

    fn inputs(a: f64) -> RateInputs {
        RateInputs { c: 0.42, a, eps: 0.5, eps0: 0.7, v: 1.0, c1: 0.1, rho: 1.0, lambda: 1.0, d: 3 }
    }

    #[test]
    fn rates() {
        let r = coupling_rate(&inputs(0.42), RateMode::Pairs).unwrap();
        assert_eq!(r.rate, 0.0);
        assert!((r.c_const - r.maximizing_gap / 2.0).abs() < 1e-18);
        let p = inputs(1e-12);
        let near0 = coupling_rate(&p, RateMode::Pairs).unwrap().rate;
        let limit = p.c / 2.0 * (p.c * p.eps * p.rho * p.v / std::f64::consts::E).ln() - p.c * kinetic_exponent(&p);
        assert!((near0 - limit).abs() < 1e-9);
        let s = coupling_rate(&inputs(0.1), RateMode::SingleCircle).unwrap();
        assert!((s.rate - 0.42 * ((0.42f64 * 0.7).ln() - 0.1 - 1.0)).abs() < 1e-15);
        assert!(coupling_rate(&inputs(0.5), RateMode::Pairs).is_err());
    }

    #[test]
    fn cycle_counts() {
        let params = SystemParams::new(3, 2.0, 1.0, 1.0, 8).unwrap();
        let rho = params.rho();
        let mut ones = vec![0.0; 8];
        ones[0] = rho;
        let c = expected_cycle_count(&CycleDistribution { rho_n: ones, params });
        assert!((c.expected - 8.0).abs() < 1e-12);
        let mut one = vec![0.0; 8];
        one[7] = rho;
        let c = expected_cycle_count(&CycleDistribution { rho_n: one, params });
        assert!((c.expected - 1.0).abs() < 1e-12);
    }
}
