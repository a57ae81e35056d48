//! Least-squares fits of `value(n) ~ sum_j c_j n^{-e_j}`, limit extrapolation,
//! and log-log estimates of how fast an error decays.

use crate::brocot_sums::SeriesSample;
use crate::error::{Error, Result};

/// Residuals below this are treated as exact convergence.
pub const CONVERGED_RESIDUAL: f64 = 1e-15;

/// Correction exponents used by [`extrapolate_limit`].
pub const LIMIT_EXPONENTS: [f64; 3] = [0.0, 1.0, 2.0];

#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionModel {
    pub exponents: Vec<f64>,
    pub coefficients: Vec<f64>,
    pub residual_rms: f64,
    pub fit_window: (u32, u32),
}

impl ExpansionModel {
    pub fn eval(&self, n: f64) -> f64 {
        self.exponents
            .iter()
            .zip(&self.coefficients)
            .map(|(e, c)| c * n.powf(-e))
            .sum()
    }

    /// Coefficient of the term with exponent `e`, if fitted.
    pub fn coefficient(&self, e: f64) -> Option<f64> {
        self.exponents
            .iter()
            .position(|&x| x == e)
            .map(|i| self.coefficients[i])
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlopeEstimate {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Solves the symmetric positive definite system `g x = b` by Cholesky. Returns the first column whose pivot collapses.
fn cholesky_solve(g: &[Vec<f64>], b: &[f64]) -> std::result::Result<Vec<f64>, usize> {
    let m = b.len();
    let mut l = vec![vec![0.0; m]; m];
    for j in 0..m {
        let d = g[j][j] - l[j][..j].iter().map(|x| x * x).sum::<f64>();
        if d.is_nan() || d <= 1e-13 * g[j][j] {
            return Err(j);
        }
        l[j][j] = d.sqrt();
        for i in j + 1..m {
            let s = g[i][j] - l[i][..j].iter().zip(&l[j][..j]).map(|(p, q)| p * q).sum::<f64>();
            l[i][j] = s / l[j][j];
        }
    }
    let mut y = vec![0.0; m];
    for i in 0..m {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i][k] * y[k];
        }
        y[i] = s / l[i][i];
    }
    let mut x = vec![0.0; m];
    for i in (0..m).rev() {
        let mut s = y[i];
        for k in i + 1..m {
            s -= l[k][i] * x[k];
        }
        x[i] = s / l[i][i];
    }
    Ok(x)
}

fn check_exponents(exponents: &[f64]) -> Result<()> {
    if exponents.is_empty() || exponents.iter().any(|e| !e.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "exponents",
            value: format!("{exponents:?}"),
            reason: "need at least one finite exponent",
        });
    }
    if exponents.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter {
            name: "exponents",
            value: format!("{exponents:?}"),
            reason: "exponents must be strictly increasing",
        });
    }
    Ok(())
}

/// Least squares over raw points, solved through column-scaled normal
/// equations with three rounds of iterative refinement.
pub fn fit_points(ns: &[f64], values: &[f64], exponents: &[f64]) -> Result<ExpansionModel> {
    check_exponents(exponents)?;
    let needed = exponents.len() + 2;
    if ns.len() < needed || values.len() != ns.len() {
        return Err(Error::TooFewSamples {
            needed,
            got: ns.len().min(values.len()),
        });
    }
    let rows = ns.len();
    let cols = exponents.len();
    let mut a = vec![vec![0.0; cols]; rows];
    for (i, &n) in ns.iter().enumerate() {
        for (j, &e) in exponents.iter().enumerate() {
            a[i][j] = n.powf(-e);
        }
    }
    // Unit RMS columns.
    let scale: Vec<f64> = (0..cols)
        .map(|j| (a.iter().map(|r| r[j] * r[j]).sum::<f64>() / rows as f64).sqrt())
        .collect();
    for row in a.iter_mut() {
        for (x, s) in row.iter_mut().zip(&scale) {
            *x /= s;
        }
    }
    let mut g = vec![vec![0.0; cols]; cols];
    for row in &a {
        for i in 0..cols {
            for j in 0..cols {
                g[i][j] += row[i] * row[j];
            }
        }
    }
    let normal_rhs = |x: &[f64]| -> Vec<f64> {
        let mut b = vec![0.0; cols];
        for (row, &y) in a.iter().zip(values) {
            let r = y - row.iter().zip(x).map(|(p, q)| p * q).sum::<f64>();
            for (bj, aj) in b.iter_mut().zip(row) {
                *bj += aj * r;
            }
        }
        b
    };
    let solve = |b: &[f64]| cholesky_solve(&g, b).map_err(|column| Error::RankDeficient { column });
    let mut x = solve(&normal_rhs(&vec![0.0; cols]))?;
    for _ in 0..3 {
        let d = solve(&normal_rhs(&x))?;
        for (xi, di) in x.iter_mut().zip(d) {
            *xi += di;
        }
    }
    let coefficients: Vec<f64> = x.iter().zip(&scale).map(|(c, s)| c / s).collect();
    let model = ExpansionModel {
        exponents: exponents.to_vec(),
        coefficients,
        residual_rms: 0.0,
        fit_window: (
            ns.iter().cloned().fold(f64::INFINITY, f64::min) as u32,
            ns.iter().cloned().fold(f64::NEG_INFINITY, f64::max) as u32,
        ),
    };
    let ss: f64 = ns
        .iter()
        .zip(values)
        .map(|(&n, &y)| (y - model.eval(n)).powi(2))
        .sum();
    Ok(ExpansionModel {
        residual_rms: (ss / rows as f64).sqrt(),
        ..model
    })
}

fn check_homogeneous(samples: &[SeriesSample]) -> Result<()> {
    if let Some(first) = samples.first() {
        if samples.iter().any(|s| s.beta != first.beta || s.kind != first.kind) {
            return Err(Error::MixedSamples);
        }
    }
    Ok(())
}

fn points(samples: &[SeriesSample], leading_exponent: f64) -> (Vec<f64>, Vec<f64>) {
    samples
        .iter()
        .map(|s| {
            let n = s.n as f64;
            (n, n.powf(leading_exponent) * s.value.to_f64())
        })
        .unzip()
}

/// Fits the sample values themselves against `n^{-e_j}`.
pub fn fit_expansion(samples: &[SeriesSample], exponents: &[f64]) -> Result<ExpansionModel> {
    check_homogeneous(samples)?;
    let (ns, ys) = points(samples, 0.0);
    fit_points(&ns, &ys, exponents)
}

/// Fits `n^{leading_exponent} value` against `exponents`.
pub fn fit_scaled(samples: &[SeriesSample], leading_exponent: f64, exponents: &[f64]) -> Result<ExpansionModel> {
    check_homogeneous(samples)?;
    let (ns, ys) = points(samples, leading_exponent);
    fit_points(&ns, &ys, exponents)
}

/// Constant term of `n^{leading_exponent} value ~ c_0 + c_1/n + c_2/n^2`.
pub fn extrapolate_limit(samples: &[SeriesSample], leading_exponent: f64) -> Result<f64> {
    if samples.len() < 5 {
        return Err(Error::TooFewSamples {
            needed: 5,
            got: samples.len(),
        });
    }
    Ok(fit_scaled(samples, leading_exponent, &LIMIT_EXPONENTS)?.coefficients[0])
}

/// Ordinary least squares of `log |n^e value - limit|` against `log n`.
pub fn error_slope(samples: &[SeriesSample], predicted_limit: f64, leading_exponent: f64) -> Result<SlopeEstimate> {
    check_homogeneous(samples)?;
    let (ns, ys) = points(samples, leading_exponent);
    let pts: Vec<(f64, f64)> = ns
        .iter()
        .zip(&ys)
        .filter_map(|(&n, &y)| {
            let r = (y - predicted_limit).abs();
            (r >= CONVERGED_RESIDUAL).then(|| (n.ln(), r.ln()))
        })
        .collect();
    if pts.is_empty() && !samples.is_empty() {
        return Err(Error::Converged);
    }
    if pts.len() < 4 {
        return Err(Error::TooFewSamples {
            needed: 4,
            got: pts.len(),
        });
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok(SlopeEstimate {
        slope,
        intercept: my - slope * mx,
        r_squared,
        points: pts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brocot_sums::{SampleValue, SeriesKind};

    fn samples(ns: std::ops::RangeInclusive<u32>, f: impl Fn(f64) -> f64) -> Vec<SeriesSample> {
        ns.map(|n| SeriesSample {
            n,
            beta: 2.0,
            kind: SeriesKind::SigmaF,
            value: SampleValue::Float(f(n as f64)),
        })
        .collect()
    }

    #[test]
    fn recovers_single_term() {
        let m = fit_expansion(&samples(4..=20, |n| 3.0 / (n * n)), &[2.0]).unwrap();
        assert!((m.coefficients[0] - 3.0).abs() < 1e-9);
        assert_eq!(m.fit_window, (4, 20));
    }

    #[test]
    fn recovers_two_terms() {
        let m = fit_expansion(&samples(4..=20, |n| 2.0 / (n * n) + 5.0 / (n * n * n)), &[2.0, 3.0]).unwrap();
        assert!((m.coefficients[0] - 2.0).abs() < 1e-8);
        assert!((m.coefficients[1] - 5.0).abs() < 1e-8);
    }

    #[test]
    fn recovers_four_terms_on_wide_window() {
        let truth = [2.2, -0.7, 19.0, 3.0];
        let ex = [0.0, 1.0, 2.0, 3.0];
        let f = |n: f64| truth.iter().zip(&ex).map(|(c, e)| c * n.powf(-e)).sum::<f64>();
        for (lo, hi) in [(4, 64), (8, 30), (4, 12)] {
            let m = fit_expansion(&samples(lo..=hi, f), &ex).unwrap();
            for (c, t) in m.coefficients.iter().zip(&truth) {
                assert!((c - t).abs() <= 1e-8 * t.abs(), "{lo}..{hi}: {c} vs {t}");
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let s = samples(4..=8, |n| 1.0 / n);
        assert!(matches!(fit_expansion(&s, &[1.0, 2.0, 3.0, 4.0]), Err(Error::TooFewSamples { .. })));
        assert!(fit_expansion(&s, &[2.0, 1.0]).is_err());
        let mut mixed = s.clone();
        mixed[0].beta = 3.0;
        assert_eq!(fit_expansion(&mixed, &[1.0]), Err(Error::MixedSamples));
        let wide = samples(4..=12, |n| 1.0 / n);
        assert!(matches!(
            fit_expansion(&wide, &[1.0, 1.0 + 1e-9]),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn extrapolate_examples() {
        let beta: f64 = 2.0;
        let s = samples(8..=30, |n| 7.0 / n.powf(beta));
        assert!((extrapolate_limit(&s, beta).unwrap() - 7.0).abs() < 1e-12);
        let s = samples(8..=30, |n| 7.0 / n.powf(beta) + 1.0 / n.powf(beta + 1.0));
        assert!((extrapolate_limit(&s, beta).unwrap() - 7.0).abs() < 1e-9);
        assert!(extrapolate_limit(&s[..4], beta).is_err());
    }

    #[test]
    fn slope_examples() {
        let s = samples(8..=30, |n| 2.0 / (n * n) + 0.5 / (n * n * n));
        let e = error_slope(&s, 2.0, 2.0).unwrap();
        assert!((e.slope + 1.0).abs() < 1e-9 && e.r_squared > 0.999999);
        let s = samples(8..=30, |n| 2.0 / (n * n) + 0.5 / (n * n * n * n));
        assert!((error_slope(&s, 2.0, 2.0).unwrap().slope + 2.0).abs() < 1e-9);
        let s = samples(8..=30, |n| 2.0 / (n * n));
        assert_eq!(error_slope(&s, 2.0, 2.0), Err(Error::Converged));
    }

    #[test]
    fn nesting_never_increases_residual() {
        let f = |n: f64| 2.2 + 0.9 / n + 19.0 / (n * n) + (n.ln() / n).powi(3);
        let s = samples(6..=40, f);
        let mut prev = f64::INFINITY;
        for k in 1..=5 {
            let ex: Vec<f64> = (0..k).map(|j| j as f64).collect();
            let m = fit_expansion(&s, &ex).unwrap();
            assert!(m.residual_rms <= prev * (1.0 + 1e-9));
            prev = m.residual_rms;
        }
    }

    #[test]
    fn limit_scales_with_values() {
        let s = samples(8..=30, |n| (2.2 + 0.9 / n + (n.ln() / n).powi(2)) / (n * n));
        let base = extrapolate_limit(&s, 2.0).unwrap();
        for c in [0.5, 2.0, 8.0] {
            let scaled: Vec<_> = s
                .iter()
                .map(|x| SeriesSample {
                    value: SampleValue::Float(c * x.value.to_f64()),
                    ..x.clone()
                })
                .collect();
            assert_eq!(extrapolate_limit(&scaled, 2.0).unwrap(), c * base);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn exact_expansions_are_recovered(
                coeffs in prop::collection::vec(0.1f64..10.0, 1..=4),
                signs in prop::collection::vec(any::<bool>(), 4),
                lo in 4u32..20,
                len in 8u32..45,
            ) {
                let hi = (lo + len).min(64);
                let truth: Vec<f64> = coeffs.iter().zip(&signs).map(|(c, s)| if *s { *c } else { -*c }).collect();
                let ex: Vec<f64> = (0..truth.len()).map(|j| 2.0 + j as f64).collect();
                let f = |n: f64| truth.iter().zip(&ex).map(|(c, e)| c * n.powf(-e)).sum::<f64>();
                let m = fit_expansion(&samples(lo..=hi, f), &ex).unwrap();
                for (c, t) in m.coefficients.iter().zip(&truth) {
                    prop_assert!((c - t).abs() <= 1e-8 * t.abs(), "{} vs {}", c, t);
                }
            }

            #[test]
            fn limit_scales_exactly(k in -3i32..=3, a in 0.5f64..5.0, b in -5.0f64..5.0) {
                let c = 2f64.powi(k);
                let s = samples(8..=30, |n| (a + b / n + (n.ln() / n).powi(2)) / (n * n));
                let scaled = samples(8..=30, |n| c * ((a + b / n + (n.ln() / n).powi(2)) / (n * n)));
                prop_assert_eq!(extrapolate_limit(&scaled, 2.0).unwrap(), c * extrapolate_limit(&s, 2.0).unwrap());
            }
        }
    }
}
