//! The Riemann zeta function on real `s > 1`, the constants built from
//! `zeta(2 beta - 1) / zeta(2 beta)`, and brute-force Dirichlet oracles.

use crate::brocot_sums::check_beta;
use crate::error::{Error, Result};
use crate::stern_brocot::CompensatedSum;

/// `B_2, B_4, ..., B_30`.
const BERNOULLI: [f64; 15] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
    8553103.0 / 6.0,
    -23749461029.0 / 870.0,
    8615841276005.0 / 14322.0,
];

/// Smallest accepted distance of `s` from the pole.
pub const POLE_MARGIN: f64 = 1e-6;
/// Smallest accepted target error.
pub const MIN_TARGET_ERROR: f64 = 1e-14;
/// Memory guard for the totient sieve.
pub const TOTIENT_GUARD: u64 = 100_000_000;
/// Largest part-sum for the brute-force prefix/suffix constant.
pub const C0_GUARD: u32 = 30;
/// Truncation used by [`constants_for`].
pub const C0_DEFAULT_VMAX: u32 = 24;

/// Euler-Maclaurin correction terms `B_{2j}/(2j)! s(s+1)...(s+2j-2) N^{-s-2j+1}`.
fn correction_terms(s: f64, n: f64) -> [f64; 15] {
    let mut out = [0.0; 15];
    // rising = s (s+1) ... (s+2j-2) / (2j)!, power = N^{-s-2j+1}.
    let mut rising = s / 2.0;
    let mut power = n.powf(-s - 1.0);
    for (j, slot) in out.iter_mut().enumerate() {
        *slot = BERNOULLI[j] * rising * power;
        let m = 2.0 * j as f64 + 2.0;
        rising *= (s + m - 1.0) * (s + m) / ((m + 1.0) * (m + 2.0));
        power /= n * n;
    }
    out
}

/// `zeta(s)` for real `s > 1` with `|result - zeta(s)| <= target_error`.
///
/// Euler-Maclaurin summation: the cutoff `N` doubles until some correction
/// order `m` makes the first omitted term, which bounds the remainder for
/// real `s`, fall below half the target.
pub fn zeta(s: f64, target_error: f64) -> Result<f64> {
    if !s.is_finite() || s <= 1.0 + POLE_MARGIN {
        return Err(Error::ZetaPole(s));
    }
    if target_error.is_nan() || target_error < MIN_TARGET_ERROR {
        return Err(Error::UnreachableTolerance { s, target: target_error });
    }
    let mut cutoff = 4u64;
    loop {
        let n = cutoff as f64;
        let terms = correction_terms(s, n);
        let order = (1..terms.len()).find(|&m| terms[m].abs() <= 0.5 * target_error);
        if let Some(m) = order {
            let mut acc = CompensatedSum::new();
            for k in (1..cutoff).rev() {
                acc.add((k as f64).powf(-s));
            }
            acc.add(n.powf(1.0 - s) / (s - 1.0));
            acc.add(0.5 * n.powf(-s));
            for t in terms[..m].iter().rev() {
                acc.add(*t);
            }
            let value = acc.value();
            // Rounding in the head sum, relative to the result.
            let floor = 8.0 * f64::EPSILON * value;
            if floor > target_error {
                return Err(Error::UnreachableTolerance { s, target: target_error });
            }
            return Ok(value);
        }
        if cutoff > 1 << 24 {
            return Err(Error::UnreachableTolerance { s, target: target_error });
        }
        cutoff *= 2;
    }
}

/// Constants predicted for a given `beta`.
#[derive(Clone, Debug, PartialEq)]
pub struct ZetaConstants {
    pub beta: f64,
    /// `zeta(2 beta - 1)`.
    pub zeta_hi: f64,
    /// `zeta(2 beta)`.
    pub zeta_lo: f64,
    pub ratio: f64,
    /// Leading coefficient `2 ratio` of `n^beta sigma_beta(F_n)`.
    pub main_term: f64,
    /// The published closed form `ratio + 2 ratio^2` for the limit of `n^{2 beta} sigma_beta(n)`.
    pub c0_closed_form: f64,
    /// Brute-force prefix/suffix sum at the default truncation, tail included.
    pub c0_oracle: f64,
    pub c0_oracle_tail: f64,
}

pub fn constants_for(beta: f64) -> Result<ZetaConstants> {
    constants_with_truncation(beta, C0_DEFAULT_VMAX)
}

pub fn constants_with_truncation(beta: f64, v_max: u32) -> Result<ZetaConstants> {
    check_beta(beta)?;
    let zeta_hi = zeta(2.0 * beta - 1.0, 1e-13)?;
    let zeta_lo = zeta(2.0 * beta, 1e-13)?;
    let ratio = zeta_hi / zeta_lo;
    let c0 = c0_bruteforce(beta, v_max)?;
    Ok(ZetaConstants {
        beta,
        zeta_hi,
        zeta_lo,
        ratio,
        main_term: 2.0 * ratio,
        c0_closed_form: ratio + 2.0 * ratio * ratio,
        c0_oracle: c0.value + c0.tail,
        c0_oracle_tail: c0.tail,
    })
}

/// A truncated series with an estimate of what was left out.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncatedSum {
    pub value: f64,
    pub tail: f64,
}

/// `sum_{q=2}^{q_max} phi(q) / q^{2 beta}` from a linear sieve, with the tail
/// bound `q_max^{2 - 2 beta} / (2 beta - 2)`. The full series is `ratio - 1`.
pub fn totient_sum_oracle(beta: f64, q_max: u64) -> Result<TruncatedSum> {
    check_beta(beta)?;
    if q_max < 2 {
        return Err(Error::InvalidParameter {
            name: "q_max",
            value: q_max.to_string(),
            reason: "q_max must be >= 2",
        });
    }
    if q_max > TOTIENT_GUARD {
        return Err(Error::GuardExceeded {
            what: "totient sieve",
            n: q_max,
            limit: TOTIENT_GUARD,
        });
    }
    let phi = totients(q_max as usize);
    let mut acc = CompensatedSum::new();
    for q in (2..=q_max as usize).rev() {
        acc.add(phi[q] as f64 * (q as f64).powf(-2.0 * beta));
    }
    Ok(TruncatedSum {
        value: acc.value(),
        tail: (q_max as f64).powf(2.0 - 2.0 * beta) / (2.0 * beta - 2.0),
    })
}

/// Euler's totient for `0..=limit` by the linear sieve.
pub fn totients(limit: usize) -> Vec<u32> {
    let mut phi = vec![0u32; limit + 1];
    let mut primes: Vec<u32> = Vec::new();
    if limit >= 1 {
        phi[1] = 1;
    }
    for i in 2..=limit {
        if phi[i] == 0 {
            phi[i] = (i - 1) as u32;
            primes.push(i as u32);
        }
        for &p in &primes {
            let ip = i * p as usize;
            if ip > limit {
                break;
            }
            if i % p as usize == 0 {
                phi[ip] = phi[i] * p;
                break;
            }
            phi[ip] = phi[i] * (p - 1);
        }
    }
    phi
}

/// `sum (<P> <S>)^{-2 beta}` over a prefix `P` (any composition) and a suffix
/// `S` (empty or ending in a part at least 2) with `|P| + |S| <= v_max`.
///
/// The tail assumes the shell at part-sum `v` decays like `v^{-2 beta}`.
pub fn c0_bruteforce(beta: f64, v_max: u32) -> Result<TruncatedSum> {
    check_beta(beta)?;
    if v_max > C0_GUARD {
        return Err(Error::GuardExceeded {
            what: "prefix/suffix enumeration",
            n: v_max as u64,
            limit: C0_GUARD as u64,
        });
    }
    let e = 2.0 * beta;
    let int_e = (e.fract() == 0.0 && e <= 64.0).then_some(e as i32);
    let len = v_max as usize + 1;
    // all[u]: every composition of u; canon[s]: empty or last part >= 2.
    let mut all = vec![CompensatedSum::new(); len];
    let mut canon = vec![CompensatedSum::new(); len];

    #[allow(clippy::too_many_arguments)]
    fn walk(
        sum: u32,
        last: u64,
        k: u64,
        k_prev: u64,
        v_max: u32,
        weight: &dyn Fn(f64) -> f64,
        all: &mut [CompensatedSum],
        canon: &mut [CompensatedSum],
    ) {
        let w = weight(k as f64);
        all[sum as usize].add(w);
        if sum == 0 || last >= 2 {
            canon[sum as usize].add(w);
        }
        for a in 1..=(v_max - sum) as u64 {
            walk(sum + a as u32, a, a * k + k_prev, k, v_max, weight, all, canon);
        }
    }
    let weight = move |k: f64| match int_e {
        Some(i) => k.powi(i).recip(),
        None => k.powf(-e),
    };
    walk(0, 0, 1, 0, v_max, &weight, &mut all, &mut canon);

    let f: Vec<f64> = all.iter().map(|c| c.value()).collect();
    let g: Vec<f64> = canon.iter().map(|c| c.value()).collect();
    let mut total = CompensatedSum::new();
    let mut last_shell = 0.0;
    for v in 0..len {
        let shell: f64 = (0..=v).map(|u| f[u] * g[v - u]).sum();
        total.add(shell);
        last_shell = shell;
    }
    let tail = if v_max == 0 {
        0.0
    } else {
        last_shell * v_max as f64 / (2.0 * beta - 1.0)
    };
    Ok(TruncatedSum {
        value: total.value(),
        tail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn zeta_closed_forms() {
        assert!((zeta(2.0, 1e-14).unwrap() - PI * PI / 6.0).abs() < 1e-12);
        assert!((zeta(4.0, 1e-14).unwrap() - PI.powi(4) / 90.0).abs() < 1e-12);
        assert!((zeta(6.0, 1e-14).unwrap() - PI.powi(6) / 945.0).abs() < 1e-12);
    }

    /// Direct summation to 10^6 with the integral tail `N^{1-s}/(s-1) - N^{-s}/2`.
    fn direct_oracle(s: f64) -> f64 {
        let n = 1_000_000u64;
        let mut acc = CompensatedSum::new();
        for k in (1..n).rev() {
            acc.add((k as f64).powf(-s));
        }
        let nf = n as f64;
        acc.add(nf.powf(1.0 - s) / (s - 1.0) + 0.5 * nf.powf(-s));
        acc.value()
    }

    #[test]
    fn zeta_matches_direct_summation() {
        let z3 = zeta(3.0, 1e-13).unwrap();
        assert!((z3 - 1.2020569032).abs() < 1e-10);
        for s in [1.5, 2.5, 3.0, 7.25] {
            let d = direct_oracle(s);
            // The oracle's own error is dominated by the next correction term.
            let bound = s * 1e-6f64.powf(s + 1.0) / 12.0 + 1e-13;
            assert!((zeta(s, 1e-13).unwrap() - d).abs() < bound + 1e-12, "s = {s}");
        }
    }

    #[test]
    fn zeta_domain_errors() {
        assert!(matches!(zeta(1.0, 1e-12), Err(Error::ZetaPole(_))));
        assert!(matches!(zeta(1.0000001, 1e-12), Err(Error::ZetaPole(_))));
        assert!(matches!(zeta(2.0, 1e-16), Err(Error::UnreachableTolerance { .. })));
        // zeta(1 + 1e-5) is about 1e5; 1e-14 absolute is below its rounding floor.
        assert!(matches!(zeta(1.00001, 1e-14), Err(Error::UnreachableTolerance { .. })));
        assert!((zeta(1.00001, 1e-6).unwrap() - 100000.577216).abs() < 1e-4);
    }

    #[test]
    fn zeta_decreasing_towards_one() {
        let mut prev = f64::INFINITY;
        let mut s = 1.1;
        while s <= 40.0 {
            let z = zeta(s, 1e-13).unwrap();
            assert!(z < prev && z > 1.0, "s = {s}");
            prev = z;
            s += 0.1;
        }
        assert!(prev - 1.0 < 1e-11);
    }

    #[test]
    fn constants_examples() {
        let c = constants_with_truncation(2.0, 12).unwrap();
        // zeta(3)/zeta(4) = 1.11062653532615... (50-digit reference).
        assert!((c.ratio - 1.11062653532615).abs() < 1e-13);
        assert!((c.main_term - 2.2212530706523).abs() < 1e-12);
        assert!((c.c0_closed_form - 3.5776).abs() < 1e-4);
        assert!(c.zeta_hi > c.zeta_lo && c.zeta_lo > 1.0);
        let c = constants_with_truncation(30.0, 4).unwrap();
        assert!((c.ratio - 1.0).abs() < 1e-8 && (c.main_term - 2.0).abs() < 1e-8);
        assert!(constants_for(1.0).is_err());
    }

    #[test]
    fn totient_examples() {
        assert_eq!(&totients(12)[1..], &[1, 1, 2, 2, 4, 2, 6, 4, 6, 4, 10, 4]);
        let t = totient_sum_oracle(2.0, 3).unwrap();
        assert!((t.value - (1.0 / 16.0 + 2.0 / 81.0)).abs() < 1e-15);
        assert_eq!(totient_sum_oracle(2.0, 2).unwrap().value, 0.0625);
        assert!(totient_sum_oracle(2.0, 1).is_err());
        assert!(matches!(
            totient_sum_oracle(2.0, TOTIENT_GUARD + 1),
            Err(Error::GuardExceeded { .. })
        ));
    }

    #[test]
    fn totient_brackets_ratio() {
        for beta in [1.5, 2.0, 3.0] {
            let target = zeta(2.0 * beta - 1.0, 1e-13).unwrap() / zeta(2.0 * beta, 1e-13).unwrap() - 1.0;
            let t = totient_sum_oracle(beta, 100_000).unwrap();
            // Slack for the 1e-13 error allowed in each zeta value.
            let slack = 3e-13;
            assert!(t.value <= target + slack && target <= t.value + t.tail + slack, "beta = {beta}");
        }
    }

    #[test]
    fn c0_examples() {
        assert_eq!(c0_bruteforce(2.0, 0).unwrap().value, 1.0);
        assert_eq!(c0_bruteforce(2.0, 1).unwrap().value, 2.0);
        // v = 2 adds prefixes (2), (1,1) and the suffix (2), plus (1)|() ... pairs:
        // (2)|(): 1/16, (1,1)|(): 1/16, ()|(2): 1/16.
        assert!((c0_bruteforce(2.0, 2).unwrap().value - (2.0 + 3.0 / 16.0)).abs() < 1e-15);
        assert!(c0_bruteforce(2.0, 31).is_err());
    }

    #[test]
    fn c0_monotone_and_enveloped() {
        for beta in [1.5, 2.0, 3.0] {
            let ratio = zeta(2.0 * beta - 1.0, 1e-13).unwrap() / zeta(2.0 * beta, 1e-13).unwrap();
            let mut prev = 0.0;
            for v in 0..=16 {
                let c = c0_bruteforce(beta, v).unwrap().value;
                assert!(c >= prev);
                assert!(c <= (1.0 + 2.0 * ratio) * ratio);
                prev = c;
            }
        }
    }

    #[test]
    fn c0_approaches_twice_ratio_squared() {
        // Each suffix has a twin ending in 1 with the same continuant, so the
        // prefix series is 2 ratio and the suffix series is ratio.
        let ratio = zeta(5.0, 1e-13).unwrap() / zeta(6.0, 1e-13).unwrap();
        let c = c0_bruteforce(3.0, 22).unwrap();
        let target = 2.0 * ratio * ratio;
        assert!(((c.value + c.tail) - target).abs() < 1e-4 * target);
    }
}
