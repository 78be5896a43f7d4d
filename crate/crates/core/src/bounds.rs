//! Threshold bounds: the hashing bound, the closed-form upper bound for
//! non-degenerate codes, the lower bound from co-prime factorisation, and
//! the self-consistency inequality relating thresholds of `n` and `n² + n`.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

const TOLERANCE: f64 = 1e-10;
const EDGE: f64 = 1e-15;

/// Entropy-like left-hand side of the hashing condition,
/// `p ln(d−1) − p ln p − (1−p) ln(1−p)`.
pub fn hashing_lhs(d: u64, p: f64) -> f64 {
    let d = d as f64;
    let mut h = p * (d - 1.0).ln();
    if p > 0.0 {
        h -= p * p.ln();
    }
    if p < 1.0 {
        h -= (1.0 - p) * (1.0 - p).ln();
    }
    h
}

fn check_d(d: u64) -> Result<()> {
    if d < 2 {
        return Err(Error::invalid(format!("dimension must be at least 2, got {d}")));
    }
    Ok(())
}

/// Error rate at which the hashing condition equals `ln(d)/2`.
pub fn hashing_bound(d: u64) -> Result<f64> {
    check_d(d)?;
    let target = 0.5 * (d as f64).ln();
    let f = |p: f64| hashing_lhs(d, p) - target;
    let (mut lo, mut hi) = (EDGE, (d - 1) as f64 / d as f64 - EDGE);
    let (f_lo, f_hi) = (f(lo), f(hi));
    assert!(f_lo < 0.0 && f_hi > 0.0, "hashing condition not bracketed for d = {d}");
    let mut last = f_lo;
    while hi - lo > TOLERANCE {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm < 0.0 {
            assert!(fm >= last, "hashing condition not monotone for d = {d}");
            last = fm;
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `(d−1) / (2(d + √d))`.
pub fn upper_bound(d: u64) -> Result<f64> {
    check_d(d)?;
    let x = d as f64;
    Ok((x - 1.0) / (2.0 * (x + x.sqrt())))
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn is_prime(n: u64) -> bool {
    n >= 2 && (2..).take_while(|k| k * k <= n).all(|k| n % k != 0)
}

/// Lower bound for `d = n·m` from thresholds of the co-prime factors:
/// `min(p_n(d−1)/(d−m), p_m(d−1)/(d−n))`.
pub fn lower_bound(p_n: f64, p_m: f64, n: u64, m: u64) -> Result<f64> {
    if n < 2 || m < 2 {
        return Err(Error::invalid(format!("factors must be at least 2, got {n} and {m}")));
    }
    if gcd(n, m) != 1 {
        return Err(Error::invalid(format!("{n} and {m} are not co-prime")));
    }
    let d = (n * m) as f64;
    Ok((p_n * (d - 1.0) / (d - m as f64)).min(p_m * (d - 1.0) / (d - n as f64)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelfConsistency {
    pub n: u64,
    /// Threshold at `n² + n`.
    pub lhs: f64,
    /// `p_n (1 + 1/n − 1/n²)`.
    pub rhs: f64,
}

impl SelfConsistency {
    pub fn margin(&self) -> f64 {
        self.lhs - self.rhs
    }

    pub fn passed(&self) -> bool {
        self.lhs >= self.rhs
    }
}

/// Checks `p_{n²+n} ≥ p_n (1 + 1/n − 1/n²)` for a candidate threshold
/// function.
pub fn self_consistency<F>(threshold: F, n: u64) -> Result<SelfConsistency>
where
    F: Fn(u64) -> Result<f64>,
{
    if !is_prime(n) {
        return Err(Error::invalid(format!("{n} is not prime")));
    }
    let x = n as f64;
    Ok(SelfConsistency {
        n,
        lhs: threshold(n * n + n)?,
        rhs: threshold(n)? * (1.0 + 1.0 / x - 1.0 / (x * x)),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub d: u64,
    pub hashing: f64,
    pub upper: f64,
    /// Co-prime lower bound from hashing thresholds of the factors, when `d`
    /// has a non-trivial co-prime factorisation.
    pub lower: Option<f64>,
    /// Self-consistency of the hashing values, for prime `d`.
    pub self_consistency: Option<SelfConsistency>,
}

impl BoundReport {
    pub fn new(d: u64) -> Result<Self> {
        let hashing = hashing_bound(d)?;
        let upper = upper_bound(d)?;
        let lower = match coprime_split(d) {
            Some((n, m)) => Some(lower_bound(hashing_bound(n)?, hashing_bound(m)?, n, m)?),
            None => None,
        };
        let self_consistency = if is_prime(d) {
            Some(self_consistency(hashing_bound, d)?)
        } else {
            None
        };
        Ok(Self {
            d,
            hashing,
            upper,
            lower,
            self_consistency,
        })
    }

    /// `0 < p_hb < p_upper < 1/2`.
    pub fn ordered(&self) -> bool {
        0.0 < self.hashing && self.hashing < self.upper && self.upper < 0.5
    }
}

/// The split `d = n·m` with co-prime factors that makes `n` the largest
/// prime power dividing `d`, if `d` is not itself a prime power.
pub fn coprime_split(d: u64) -> Option<(u64, u64)> {
    let mut best: Option<(u64, u64)> = None;
    let mut rest = d;
    let mut k = 2;
    while k * k <= rest {
        if rest % k == 0 {
            let mut pk = 1;
            while rest % k == 0 {
                rest /= k;
                pk *= k;
            }
            if best.map_or(true, |b| pk > b.0) {
                best = Some((pk, d / pk));
            }
        }
        k += 1;
    }
    if rest > 1 && best.map_or(true, |b| rest > b.0) {
        best = Some((rest, d / rest));
    }
    best.filter(|&(n, m)| n >= 2 && m >= 2).map(|(n, m)| (n.min(m), n.max(m)))
}

/// Renders reports as an aligned text table.
pub struct BoundTable<'a>(pub &'a [BoundReport]);

impl fmt::Display for BoundTable<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:>6}  {:>12}  {:>12}  {:>12}  {}", "d", "p_hashing", "p_upper", "p_lower", "self-consistency")?;
        for r in self.0 {
            let lower = r.lower.map_or_else(|| "-".to_string(), |v| format!("{v:.10}"));
            let sc = match &r.self_consistency {
                Some(s) => format!(
                    "n={} p({})={:.6} >= {:.6}: {} (margin {:+.6})",
                    s.n,
                    s.n * s.n + s.n,
                    s.lhs,
                    s.rhs,
                    if s.passed() { "pass" } else { "FAIL" },
                    s.margin()
                ),
                None => "-".to_string(),
            };
            writeln!(f, "{:>6}  {:>12.10}  {:>12.10}  {:>12}  {}", r.d, r.hashing, r.upper, lower, sc)?;
        }
        Ok(())
    }
}
