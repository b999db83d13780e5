//! Exhaustive search over selection-probability vectors.
//!
//! This is an independent check on the closed-form optimum and shares no code
//! with it. Every coordinate but one is enumerated on a grid; the remaining
//! coordinate is solved exactly from the rate constraint `E[X] = n/m` (the
//! renewal form of `pi_0 = m/n`), which is affine in `1 - p_j` for `j < m'`
//! and in `1/p_{m'}` for the saturating state. The variance of every feasible
//! vector is computed by its own head-plus-geometric-tail summation.

use crate::error::{Error, Result};

/// Largest maximum age accepted by [`variance_grid_oracle`].
pub const ORACLE_MAX_AGE: usize = 4;

const ALLOWED_STEPS: [f64; 3] = [0.01, 0.02, 0.05];
const FEASIBILITY_SLACK: f64 = 1e-12;

/// Returns the lowest-variance feasible vector found and its variance.
pub fn variance_grid_oracle(n: usize, m: usize, m_prime: usize, grid_step: f64) -> Result<(Vec<f64>, f64)> {
    if m_prime > ORACLE_MAX_AGE {
        return Err(Error::OracleScope(format!(
            "m' = {m_prime} exceeds {ORACLE_MAX_AGE}; the grid grows exponentially"
        )));
    }
    if m_prime == 0 {
        return Err(Error::OracleScope("m' must be at least 1".into()));
    }
    if m == 0 || m > n {
        return Err(Error::InvalidParameter(format!("need 1 <= m <= n, got m = {m}, n = {n}")));
    }
    if !ALLOWED_STEPS.iter().any(|s| (s - grid_step).abs() < 1e-12) {
        return Err(Error::OracleScope(format!(
            "grid step {grid_step} not in {ALLOWED_STEPS:?}"
        )));
    }
    let levels = (1.0 / grid_step).round() as usize;
    let target_mean = n as f64 / m as f64;
    let states = m_prime + 1;

    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut digits = vec![0usize; m_prime];
    let mut p = vec![0.0; states];

    for free in 0..states {
        digits.iter_mut().for_each(|d| *d = 0);
        loop {
            let mut it = digits.iter();
            for (j, pj) in p.iter_mut().enumerate() {
                if j != free {
                    *pj = *it.next().unwrap() as f64 / levels as f64;
                }
            }
            if let Some(value) = solve_free(&p, free, target_mean) {
                p[free] = value;
                if let Some(var) = gap_variance(&p) {
                    if best.as_ref().is_none_or(|(_, v)| var < *v) {
                        best = Some((p.clone(), var));
                    }
                }
            }
            if !increment(&mut digits, levels) {
                break;
            }
        }
    }
    best.ok_or_else(|| Error::OracleScope("no feasible vector on the grid".into()))
}

fn increment(digits: &mut [usize], levels: usize) -> bool {
    for d in digits.iter_mut() {
        if *d < levels {
            *d += 1;
            return true;
        }
        *d = 0;
    }
    false
}

/// Solves `p[free]` so that the mean gap equals `target`; `None` if the
/// solution is not a probability.
fn solve_free(p: &[f64], free: usize, target: f64) -> Option<f64> {
    let last = p.len() - 1;
    // mean gap = sum_{k<m'} s_k + s_{m'} / p_{m'}, with s_k = prod_{j<k}(1-p_j)
    if free == last {
        let mut s = 1.0;
        let mut head = 0.0;
        for &pj in &p[..last] {
            head += s;
            s *= 1.0 - pj;
        }
        if s == 0.0 {
            // saturating state unreachable: p_{m'} is irrelevant
            return ((head - target).abs() <= FEASIBILITY_SLACK).then_some(1.0);
        }
        let rest = target - head;
        if rest <= 0.0 {
            return None;
        }
        let value = s / rest;
        return accept(value, true);
    }
    // split the mean into the part before `free` and the part scaled by (1 - p_free)
    let survival = |k: usize| p[..k].iter().map(|pj| 1.0 - pj).product::<f64>();
    let before: f64 = (0..=free).map(survival).sum();
    let mut t = survival(free);
    let mut scaled = 0.0;
    for k in free + 1..=last {
        if k != free + 1 {
            t *= 1.0 - p[k - 1];
        }
        if k < last {
            scaled += t;
        } else if t > 0.0 {
            if p[last] == 0.0 {
                // reachable absorbing state unless 1 - p_free = 0
                return ((before - target).abs() <= FEASIBILITY_SLACK).then_some(1.0);
            }
            scaled += t / p[last];
        }
    }
    if scaled <= 0.0 {
        return ((before - target).abs() <= FEASIBILITY_SLACK).then_some(1.0);
    }
    let survive = (target - before) / scaled;
    accept(1.0 - survive, false)
}

fn accept(value: f64, strictly_positive: bool) -> Option<f64> {
    let v = if value.abs() < FEASIBILITY_SLACK {
        0.0
    } else if (value - 1.0).abs() < FEASIBILITY_SLACK {
        1.0
    } else {
        value
    };
    let ok = (0.0..=1.0).contains(&v) && (!strictly_positive || v > 0.0);
    ok.then_some(v)
}

/// Variance of the gap for a vector with finite mean.
fn gap_variance(p: &[f64]) -> Option<f64> {
    let last = p.len() - 1;
    let mut probs = Vec::with_capacity(p.len());
    let mut s = 1.0;
    for &pj in &p[..last] {
        probs.push(s * pj);
        s *= 1.0 - pj;
    }
    let rate = p[last];
    if s > 0.0 && rate == 0.0 {
        return None;
    }
    // first and second moments: head terms plus m' + Geometric(rate) tail
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    for (k, pk) in probs.iter().enumerate() {
        let x = (k + 1) as f64;
        m1 += x * pk;
        m2 += x * x * pk;
    }
    if s > 0.0 {
        let base = last as f64;
        let g1 = 1.0 / rate;
        let g2 = (2.0 - rate) / (rate * rate);
        m1 += s * (base + g1);
        m2 += s * (base * base + 2.0 * base * g1 + g2);
    }
    Some((m2 - m1 * m1).max(0.0))
}
