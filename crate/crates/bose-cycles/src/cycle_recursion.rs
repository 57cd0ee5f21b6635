//! Cycle-weight recursion `Q_N = (1/N) Σ_{n=1}^N a_n Q_{N-n}` and its instantiations.

use num::{BigRational, One, Zero};
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::numerics::{riemann_zeta, LogWeight, SystemParams};
use crate::potentials_bounds::{periodize_u, PairPotential};

/// Per-cycle weights `a_1..a_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSequence {
    a: Vec<LogWeight>,
}

impl WeightSequence {
    pub fn new(a: Vec<LogWeight>) -> Result<Self> {
        if a.is_empty() {
            return Err(domain("weight sequence must have length >= 1"));
        }
        if let Some(i) = a.iter().position(|w| w.is_zero() || !w.ln().is_finite()) {
            return Err(domain(format!("weight a_{} must be positive and finite", i + 1)));
        }
        Ok(WeightSequence { a })
    }

    pub fn from_values(values: &[f64]) -> Result<Self> {
        let a = values.iter().map(|&v| LogWeight::from_value(v)).collect::<Result<Vec<_>>>()?;
        WeightSequence::new(a)
    }

    pub fn constant(value: f64, len: usize) -> Result<Self> {
        WeightSequence::from_values(&vec![value; len])
    }

    /// `a_n = q_n` for `n = 1..=params.n`.
    pub fn ideal(params: &SystemParams) -> Result<Self> {
        if params.n == 0 {
            return Err(domain("ideal weights need N >= 1"));
        }
        WeightSequence::new((1..=params.n).map(|n| params.q(n)).collect())
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// `a_n`, 1-based.
    pub fn get(&self, n: usize) -> LogWeight {
        self.a[n - 1]
    }

    pub fn as_slice(&self) -> &[LogWeight] {
        &self.a
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TableKind {
    Ideal,
    MeanField,
    Dcp,
    Custom,
}

/// `Q_0..Q_N`. For the mean-field kind, `Q_N` carries a global per-`N` factor on top of
/// the product-weight recursion; cycle statistics only see the recursion part.
#[derive(Debug, Clone)]
pub struct PartitionTable {
    recursion: Vec<LogWeight>,
    global_ln: Vec<f64>,
    weights: WeightSequence,
    params: Option<SystemParams>,
    kind: TableKind,
}

impl PartitionTable {
    pub fn n_max(&self) -> usize {
        self.recursion.len() - 1
    }

    pub fn kind(&self) -> TableKind {
        self.kind
    }

    pub fn params(&self) -> Option<&SystemParams> {
        self.params.as_ref()
    }

    pub fn weights(&self) -> &WeightSequence {
        &self.weights
    }

    /// `Q_N` including any global factor.
    pub fn q(&self, n: usize) -> LogWeight {
        self.recursion[n].scale_exp(self.global_ln[n])
    }

    pub fn ln_q(&self, n: usize) -> f64 {
        self.q(n).ln()
    }

    /// Product-weight part of `Q_N`.
    pub fn recursion_value(&self, n: usize) -> LogWeight {
        self.recursion[n]
    }

    pub fn values(&self) -> Vec<LogWeight> {
        (0..=self.n_max()).map(|n| self.q(n)).collect()
    }
}

fn run(weights: &WeightSequence) -> Vec<LogWeight> {
    let n_max = weights.len();
    let mut q = Vec::with_capacity(n_max + 1);
    q.push(LogWeight::ONE);
    for big_n in 1..=n_max {
        let s = LogWeight::sum((1..=big_n).map(|n| weights.get(n) * q[big_n - n]));
        q.push(s.scale_exp(-(big_n as f64).ln()));
    }
    q
}

/// Run the recursion for a custom weight sequence.
pub fn recurse(weights: &WeightSequence) -> PartitionTable {
    recurse_with(weights, None, TableKind::Custom)
}

pub fn recurse_with(weights: &WeightSequence, params: Option<SystemParams>, kind: TableKind) -> PartitionTable {
    let recursion = run(weights);
    let global_ln = vec![0.0; recursion.len()];
    PartitionTable { recursion, global_ln, weights: weights.clone(), params, kind }
}

/// Ideal-gas table `Q⁰_0..Q⁰_N`.
pub fn ideal_table(params: &SystemParams) -> Result<PartitionTable> {
    let w = WeightSequence::ideal(params)?;
    Ok(recurse_with(&w, Some(*params), TableKind::Ideal))
}

/// Ideal table times `exp(-βû(0)N(N-1)/(2L^d))` at each `N`.
pub fn mean_field_table(params: &SystemParams, u_hat_0: f64) -> Result<PartitionTable> {
    if !(u_hat_0 >= 0.0) {
        return Err(domain(format!("mean-field table needs u_hat(0) >= 0, got {u_hat_0}")));
    }
    let mut t = ideal_table(params)?;
    let k = params.beta * u_hat_0 / (2.0 * params.volume());
    t.global_ln = (0..=params.n).map(|n| -k * (n as f64) * (n as f64 - 1.0)).collect();
    t.kind = TableKind::MeanField;
    Ok(t)
}

/// Admissible bracket for the exponential rate `γ` of cycle-decoupled weights.
pub fn dcp_gamma_bracket(params: &SystemParams, pot: &PairPotential) -> (f64, f64) {
    let d = params.d;
    let lo = if d >= 3 {
        let z = riemann_zeta(d as f64 / 2.0).expect("d/2 > 1");
        -(2f64).powf(d as f64 / 2.0 - 1.0) * z * params.beta * pot.u_hat_0(d) / params.lambda.powi(d as i32)
    } else {
        f64::NEG_INFINITY
    };
    let hi = params.beta * periodize_u(pot, &vec![0.0; d as usize], params.side, 1e-16) / 2.0;
    (lo, hi)
}

#[derive(Debug, Clone)]
pub struct DcpWeights {
    pub weights: WeightSequence,
    pub gamma: f64,
    pub bracket: Option<(f64, f64)>,
    pub inside_bracket: bool,
    /// First `n` with `a_n <= 1`.
    pub crossing: Option<usize>,
}

/// `a_n = q_n e^{γn}`; when a potential is supplied, `γ` is checked against its bracket.
pub fn dcp_weights(params: &SystemParams, gamma: f64, pot: Option<&PairPotential>) -> Result<DcpWeights> {
    if !gamma.is_finite() {
        return Err(domain("gamma must be finite"));
    }
    if params.n == 0 {
        return Err(domain("dcp weights need N >= 1"));
    }
    let a: Vec<LogWeight> = (1..=params.n).map(|n| params.q(n).scale_exp(gamma * n as f64)).collect();
    let crossing = a.iter().position(|w| w.ln() <= 0.0).map(|i| i + 1);
    let bracket = pot.map(|p| dcp_gamma_bracket(params, p));
    let inside_bracket = bracket.is_none_or(|(lo, hi)| gamma >= lo && gamma <= hi);
    Ok(DcpWeights { weights: WeightSequence::new(a)?, gamma, bracket, inside_bracket, crossing })
}

pub fn dcp_table(params: &SystemParams, gamma: f64) -> Result<PartitionTable> {
    let w = dcp_weights(params, gamma, None)?;
    Ok(recurse_with(&w.weights, Some(*params), TableKind::Dcp))
}

/// Max over `N` of the relative residual of
/// `A_N − A_{N−1} = (1/N) Σ (a_n − 1)(A_{N−n} − A_{N−n−1})`, `A_{−1} = 0`.
pub fn difference_identity_check(weights: &WeightSequence, table: &PartitionTable) -> f64 {
    let n_max = table.n_max().min(weights.len());
    let mut worst = 0.0f64;
    for big_n in 1..=n_max {
        let top = table.recursion_value(big_n);
        let rel = |k: isize| if k < 0 { 0.0 } else { table.recursion_value(k as usize).ratio(top) };
        let lhs = 1.0 - rel(big_n as isize - 1);
        let mut rhs = 0.0;
        let mut scale = lhs.abs();
        for n in 1..=big_n {
            let k = (big_n - n) as isize;
            let delta = rel(k) - rel(k - 1);
            let term = (weights.get(n).value() - 1.0) * delta / big_n as f64;
            rhs += term;
            scale += term.abs();
        }
        if scale > 0.0 {
            worst = worst.max((lhs - rhs).abs() / scale);
        }
    }
    worst
}

/// Max over `N` of `|Σ a_n Q_{N−n}/(N Q_N) − 1|`.
pub fn normalization_residual(table: &PartitionTable) -> f64 {
    let w = table.weights();
    (1..=table.n_max())
        .map(|big_n| {
            let s = LogWeight::sum((1..=big_n).map(|n| w.get(n) * table.recursion_value(big_n - n)));
            (s.ratio(table.recursion_value(big_n)) / big_n as f64 - 1.0).abs()
        })
        .fold(0.0, f64::max)
}

pub const ORACLE_MAX_N: usize = 10;

/// `Q_N` by enumerating the integer partitions of `N` with weights `Π a_n^{m_n}/(m_n! n^{m_n})`.
pub fn partition_sum_oracle(weights: &WeightSequence, big_n: usize) -> Result<LogWeight> {
    if big_n > ORACLE_MAX_N {
        return Err(Error::Refused(format!("partition oracle limited to N <= {ORACLE_MAX_N}, got {big_n}")));
    }
    if big_n > weights.len() {
        return Err(domain(format!("need {big_n} weights, have {}", weights.len())));
    }
    let mut terms = Vec::new();
    let mut mult = vec![0usize; big_n + 1];
    enumerate(big_n, big_n, &mut mult, weights, &mut terms);
    Ok(LogWeight::sum(terms))
}

fn enumerate(rest: usize, max_part: usize, mult: &mut [usize], w: &WeightSequence, out: &mut Vec<LogWeight>) {
    if rest == 0 {
        let mut ln = 0.0;
        for (n, &m) in mult.iter().enumerate().skip(1) {
            if m > 0 {
                let ln_fact: f64 = (1..=m).map(|k| (k as f64).ln()).sum();
                ln += m as f64 * (w.get(n).ln() - (n as f64).ln()) - ln_fact;
            }
        }
        out.push(LogWeight::from_ln(ln));
        return;
    }
    for part in (1..=max_part.min(rest)).rev() {
        mult[part] += 1;
        enumerate(rest - part, part, mult, w, out);
        mult[part] -= 1;
    }
}

/// The same recursion in exact rational arithmetic.
pub fn recurse_exact(a: &[BigRational]) -> Vec<BigRational> {
    let mut q = vec![BigRational::one()];
    for big_n in 1..=a.len() {
        let mut s = BigRational::zero();
        for n in 1..=big_n {
            s += &a[n - 1] * &q[big_n - n];
        }
        q.push(s / BigRational::from_integer(big_n.into()));
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::BigInt;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn constant_weights() {
        let t = recurse(&WeightSequence::constant(1.0, 50).unwrap());
        for n in 0..=50 {
            assert!(t.q(n).ln().abs() < 1e-13);
        }
        let t = recurse(&WeightSequence::constant(2.0, 64).unwrap());
        for n in 0..=64 {
            assert!(rel(t.q(n).value(), n as f64 + 1.0) < 1e-13);
        }
        let two = vec![BigRational::from_integer(BigInt::from(2)); 30];
        let exact = recurse_exact(&two);
        for (n, q) in exact.iter().enumerate() {
            assert_eq!(*q, BigRational::from_integer(BigInt::from(n + 1)));
        }
    }

    #[test]
    fn small_n_closed_forms() {
        let p = SystemParams::new(3, 3.0, 1.0, 1.0, 3).unwrap();
        let t = ideal_table(&p).unwrap();
        let (q1, q2, q3) = (p.q_value(1), p.q_value(2), p.q_value(3));
        assert!(rel(t.q(1).value(), q1) < 1e-14);
        assert!(rel(t.q(2).value(), (q1 * q1 + q2) / 2.0) < 1e-14);
        assert!(rel(t.q(3).value(), q1.powi(3) / 6.0 + q1 * q2 / 2.0 + q3 / 3.0) < 1e-14);
    }

    #[test]
    fn oracle_matches_recursion() {
        let w = WeightSequence::from_values(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        let t = recurse(&w);
        assert!(rel(partition_sum_oracle(&w, 4).unwrap().value(), t.q(4).value()) < 1e-12);
        assert!(rel(partition_sum_oracle(&w, 1).unwrap().value(), 1.0) < 1e-15);
        let p = SystemParams::new(3, 5.0, 1.0, 1.0, 10).unwrap();
        let w = WeightSequence::ideal(&p).unwrap();
        let t = recurse(&w);
        for n in 1..=10 {
            assert!(rel(partition_sum_oracle(&w, n).unwrap().value(), t.q(n).value()) < 1e-12);
        }
        assert!(matches!(
            partition_sum_oracle(&WeightSequence::constant(1.0, 11).unwrap(), 11),
            Err(Error::Refused(_))
        ));
    }

    #[test]
    fn difference_identity() {
        let w = WeightSequence::constant(1.0, 40).unwrap();
        assert_eq!(difference_identity_check(&w, &recurse(&w)), 0.0);
        let w = WeightSequence::constant(2.0, 64).unwrap();
        assert!(difference_identity_check(&w, &recurse(&w)) < 1e-12);
        let p = SystemParams::new(3, 8.0, 1.0, 1.0, 128).unwrap();
        let t = ideal_table(&p).unwrap();
        assert!(difference_identity_check(t.weights(), &t) < 1e-10);
    }

    #[test]
    fn mean_field_ratio() {
        let p = SystemParams::new(3, 6.0, 0.7, 1.0, 40).unwrap();
        let ideal = ideal_table(&p).unwrap();
        let same = mean_field_table(&p, 0.0).unwrap();
        let mf = mean_field_table(&p, 2.5).unwrap();
        for n in 0..=40 {
            assert_eq!(same.q(n), ideal.q(n));
            let expect = -0.7 * 2.5 * (n * n.saturating_sub(1)) as f64 / (2.0 * 216.0);
            assert!((mf.ln_q(n) - ideal.ln_q(n) - expect).abs() < 1e-12);
        }
        assert!(mean_field_table(&p, -1.0).is_err());
    }

    #[test]
    fn dcp_gamma_zero_is_ideal() {
        let p = SystemParams::new(3, 8.0, 1.0, 1.0, 200).unwrap();
        let ideal = ideal_table(&p).unwrap();
        let dcp = dcp_table(&p, 0.0).unwrap();
        for n in 0..=200 {
            assert_eq!(dcp.q(n).ln().to_bits(), ideal.q(n).ln().to_bits());
        }
    }

    #[test]
    fn dcp_lower_envelope_and_crossing() {
        let p = SystemParams::new(3, 4.0, 1.0, 1.0, 100).unwrap();
        let gamma = -0.3;
        let dcp = dcp_table(&p, gamma).unwrap();
        let ideal = ideal_table(&p).unwrap();
        for n in 0..=100 {
            assert!((dcp.ln_q(n) - ideal.ln_q(n) - gamma * n as f64).abs() < 1e-9 * (1.0 + ideal.ln_q(n).abs()));
        }
        let w = dcp_weights(&p, gamma, None).unwrap();
        let n_star = w.crossing.unwrap();
        assert!(w.weights.get(n_star).ln() <= 0.0);
        assert!(w.weights.get(n_star - 1).ln() > 0.0);
    }

    #[test]
    fn normalization() {
        let p = SystemParams::new(3, 8.0, 1.0, 1.0, 256).unwrap();
        assert!(normalization_residual(&ideal_table(&p).unwrap()) < 1e-12);
        assert!(normalization_residual(&mean_field_table(&p, 1.0).unwrap()) < 1e-12);
    }
}
