//! Cycle densities, condensate density, fugacity, limit shapes and infinite-cycle counts.

use serde::Serialize;

use crate::cycle_recursion::{PartitionTable, TableKind};
use crate::error::{domain, Error, Result};
use crate::numerics::{polylog, polylog_tail, riemann_zeta, theta_sum, SystemParams};

/// Number density of particles in `n`-cycles, `n = 1..=N`.
#[derive(Debug, Clone, Serialize)]
pub struct CycleDistribution {
    pub rho_n: Vec<f64>,
    pub params: SystemParams,
}

impl CycleDistribution {
    pub fn total(&self) -> f64 {
        self.rho_n.iter().sum()
    }

    pub fn get(&self, n: usize) -> f64 {
        self.rho_n[n - 1]
    }
}

fn table_params(table: &PartitionTable) -> Result<SystemParams> {
    table.params().copied().ok_or_else(|| domain("table carries no system parameters"))
}

/// `ρ_n = a_n Q_{N-n}/(L^d Q_N)`.
pub fn cycle_density(table: &PartitionTable, n: usize) -> Result<f64> {
    let params = table_params(table)?;
    let big_n = table.n_max();
    if n == 0 || n > big_n {
        return Err(Error::OutOfRange { index: n, max: big_n });
    }
    let num = table.weights().get(n) * table.recursion_value(big_n - n);
    Ok(num.ratio(table.recursion_value(big_n)) / params.volume())
}

pub fn cycle_distribution(table: &PartitionTable) -> Result<CycleDistribution> {
    let params = table_params(table)?;
    let rho_n = (1..=table.n_max()).map(|n| cycle_density(table, n)).collect::<Result<Vec<_>>>()?;
    Ok(CycleDistribution { rho_n, params })
}

/// `ρ₀ = Σ ρ_n/q_n`, valid for ideal and mean-field tables.
pub fn condensate_density_ideal(table: &PartitionTable) -> Result<f64> {
    match table.kind() {
        TableKind::Ideal | TableKind::MeanField => {}
        k => {
            return Err(Error::Refused(format!(
                "condensate density via 1/q_n needs an ideal or mean-field table, got {k:?}"
            )))
        }
    }
    let params = table_params(table)?;
    let dist = cycle_distribution(table)?;
    Ok(dist.rho_n.iter().enumerate().map(|(i, r)| r / params.q_value(i + 1)).sum())
}

/// `Σ_{n > ⌊cN^{2/d}⌋} ρ_n`.
pub fn tail_density(dist: &CycleDistribution, c: f64) -> Result<f64> {
    if !(c > 0.0) {
        return Err(domain(format!("tail density needs c > 0, got {c}")));
    }
    let cut = tail_cut(dist.params.n, c, dist.params.d);
    Ok(dist.rho_n.iter().skip(cut).sum())
}

pub fn tail_cut(n: usize, c: f64, d: u32) -> usize {
    let x = c * (n as f64).powf(2.0 / d as f64);
    if x >= n as f64 {
        n
    } else {
        x.floor() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CondensateSandwich {
    pub lower: f64,
    pub rho0: f64,
    pub upper: f64,
}

impl CondensateSandwich {
    pub fn holds(&self) -> bool {
        self.lower <= self.rho0 && self.rho0 <= self.upper
    }
}

/// Two-sided bound on the ideal condensate density in terms of the tail beyond `⌊cN^{2/d}⌋`:
/// `tail/θ(c(ρ^{1/d}λ)², d) <= ρ₀ <= ρ/θ(c(ρ^{1/d}λ)², d) + tail`.
pub fn condensate_sandwich(table: &PartitionTable, c: f64) -> Result<CondensateSandwich> {
    let params = table_params(table)?;
    let dist = cycle_distribution(table)?;
    let tail = tail_density(&dist, c)?;
    let rho = params.rho();
    let arg = c * (rho.powf(1.0 / params.d as f64) * params.lambda).powi(2);
    let theta = theta_sum(arg, params.d)?;
    Ok(CondensateSandwich { lower: tail / theta, rho0: condensate_density_ideal(table)?, upper: rho / theta + tail })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    BelowCritical,
    AtOrAboveCritical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FugacityResult {
    pub z: f64,
    pub beta_mu: f64,
    pub regime: Regime,
}

/// Solve `Li_{d/2}(z) = ρλ^d` on `[0, 1]`; `z = 1` at or above `ζ(d/2)`.
pub fn solve_fugacity(rho_lambda_d: f64, d: u32) -> Result<FugacityResult> {
    if !(rho_lambda_d >= 0.0) || !rho_lambda_d.is_finite() {
        return Err(domain(format!("rho*lambda^d must be finite and >= 0, got {rho_lambda_d}")));
    }
    if d < 3 {
        return Err(domain("fugacity solve needs d >= 3 for a finite critical density"));
    }
    let s = d as f64 / 2.0;
    let crit = riemann_zeta(s)?;
    if rho_lambda_d >= crit {
        return Ok(FugacityResult { z: 1.0, beta_mu: 0.0, regime: Regime::AtOrAboveCritical });
    }
    if rho_lambda_d == 0.0 {
        return Ok(FugacityResult { z: 0.0, beta_mu: f64::NEG_INFINITY, regime: Regime::BelowCritical });
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if polylog(s, mid)? > rho_lambda_d {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-16 * hi {
            break;
        }
    }
    let z = 0.5 * (lo + hi);
    Ok(FugacityResult { z, beta_mu: z.ln(), regime: Regime::BelowCritical })
}

/// `ζ(d/2)/λ^d`.
pub fn critical_density(d: u32, lambda: f64) -> Result<f64> {
    if d < 3 {
        return Err(domain(format!("no finite critical density for d = {d} < 3")));
    }
    if !(lambda > 0.0) {
        return Err(domain("lambda must be positive"));
    }
    Ok(riemann_zeta(d as f64 / 2.0)? / lambda.powi(d as i32))
}

/// `-ln Q_N/(βL^d)`.
pub fn free_energy_density_ideal(table: &PartitionTable) -> Result<f64> {
    let params = table_params(table)?;
    Ok(-table.ln_q(table.n_max()) / (params.beta * params.volume()))
}

/// `-ζ(1+d/2)/(βλ^d)`, the ideal free energy density at or above criticality.
pub fn free_energy_density_limit(d: u32, beta: f64, lambda: f64) -> Result<f64> {
    Ok(-riemann_zeta(1.0 + d as f64 / 2.0)? / (beta * lambda.powi(d as i32)))
}

/// `lim_{N→∞} ln Q⁰_N = -Σ_{z≠0} ln(1 - e^{-π(λ/L)²z²})` at fixed `L`.
pub fn fixed_box_limit_ln(d: u32, side: f64, lambda: f64) -> f64 {
    let c = (lambda / side).powi(2);
    let mut total = 0.0;
    let mut r: i64 = 1;
    loop {
        let mut shell = 0.0;
        let mut z = vec![-r; d as usize];
        loop {
            if z.iter().map(|v| v.abs()).max() == Some(r) {
                let z2: i64 = z.iter().map(|v| v * v).sum();
                shell -= (-(-std::f64::consts::PI * c * z2 as f64).exp()).ln_1p();
            }
            let mut i = 0;
            while i < z.len() {
                z[i] += 1;
                if z[i] <= r {
                    break;
                }
                z[i] = -r;
                i += 1;
            }
            if i == z.len() {
                break;
            }
        }
        total += shell;
        if shell < 1e-18 * total {
            return total;
        }
        r += 1;
    }
}

/// `(1/ρλ^d) Σ_{k≥t} z^k/k^{d/2+1}`; above criticality `z = 1` and the normalizer is `ζ(d/2)`.
pub fn limit_shape_finite(t: f64, fugacity: &FugacityResult, rho_lambda_d: f64, d: u32) -> Result<f64> {
    if !(t > 0.0) {
        return Err(domain(format!("limit shape needs t > 0, got {t}")));
    }
    let s = d as f64 / 2.0;
    let norm = match fugacity.regime {
        Regime::AtOrAboveCritical => riemann_zeta(s)?,
        Regime::BelowCritical => rho_lambda_d,
    };
    if t > 1e15 {
        return Ok(0.0);
    }
    let k0 = t.ceil().max(1.0) as u64;
    Ok(polylog_tail(s + 1.0, fugacity.z, k0)? / norm)
}

/// `max(ln(1/t), 0)`.
pub fn limit_shape_macroscopic(t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(domain(format!("limit shape needs t > 0, got {t}")));
    }
    Ok((-t.ln()).max(0.0))
}

/// Expected number of infinite cycles holding at least a fraction `x` of the particles.
pub fn infinite_cycle_count(x: f64, rho0_over_rho: f64) -> Result<f64> {
    if !(rho0_over_rho > 0.0 && rho0_over_rho <= 1.0) {
        return Err(domain(format!("rho0/rho must lie in (0, 1], got {rho0_over_rho}")));
    }
    if !(x > 0.0) || x > rho0_over_rho {
        return Err(domain(format!("need 0 < x <= rho0/rho, got x = {x}")));
    }
    Ok((rho0_over_rho / x).ln())
}

/// Count difference across `[e^{-(m+1)}, e^{-m})` in units of `ρ`.
pub fn cycles_in_efold(m: u32, rho0_over_rho: f64) -> Result<f64> {
    let hi = (-(m as f64)).exp();
    let lo = (-(m as f64 + 1.0)).exp();
    if hi > rho0_over_rho {
        return Err(domain("interval reaches beyond rho0/rho"));
    }
    Ok(infinite_cycle_count(lo, rho0_over_rho)? - infinite_cycle_count(hi, rho0_over_rho)?)
}
