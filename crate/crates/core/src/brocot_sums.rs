//! Moment sums over Brocot partitions: `sigma_beta(F_n)`, the continuant sum
//! `sigma_beta(n)`, their partitions into sub-sums, and the coefficient series
//! of the asymptotic expansions.
//!
//! The production paths walk the gap tree. Enumeration of the index set `A_n`
//! (compositions of `n` with last part at least 2) exists for oracles and for
//! the partition sums, which need the partial quotients themselves.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::continuants::{golden_depth_constant, Composition};
use crate::error::{Error, Result};
use crate::stern_brocot::{traverse_fold, traverse_levels, CompensatedSum, GapFrame, TraversalConfig};

/// Enumeration guard for `A_n` and the partition sums.
pub const ENUMERATION_GUARD: u32 = 26;
/// Enumeration guard for the unit-fraction identity over `A_n`.
pub const UNIT_FRACTION_GUARD: u32 = 22;
/// Guard for the prefix/suffix decomposition check.
pub const DECOMPOSITION_GUARD: u32 = 20;
/// Guard for the prefix/suffix weighted sum.
pub const R0_GUARD: u32 = 24;
/// Guard for the bound suites.
pub const BOUNDS_GUARD: u32 = 22;
/// Largest part-sum enumerated by the coefficient series.
pub const COEFFICIENT_GUARD: u32 = 26;
/// Runtime budget for exact moment sums.
pub const EXACT_SIGMA_GUARD: u32 = 26;
/// Runtime budget for float moment sums.
pub const FAST_SIGMA_GUARD: u32 = 36;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Exact,
    FastFloat,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Exact => "exact",
            Mode::FastFloat => "fast-float",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Mode::Exact),
            "fast-float" | "fast" | "float" => Ok(Mode::FastFloat),
            _ => Err(Error::InvalidParameter {
                name: "mode",
                value: s.to_string(),
                reason: "expected exact or fast-float",
            }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SeriesKind {
    SigmaF,
    SigmaQ,
}

impl fmt::Display for SeriesKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SeriesKind::SigmaF => "sigma_F",
            SeriesKind::SigmaQ => "sigma_Q",
        })
    }
}

impl FromStr for SeriesKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sigma_F" => Ok(SeriesKind::SigmaF),
            "sigma_Q" => Ok(SeriesKind::SigmaQ),
            _ => Err(Error::InvalidParameter {
                name: "kind",
                value: s.to_string(),
                reason: "expected sigma_F or sigma_Q",
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SampleValue {
    Exact(BigRational),
    Float(f64),
}

impl SampleValue {
    pub fn to_f64(&self) -> f64 {
        match self {
            SampleValue::Exact(r) => rational_to_f64(r),
            SampleValue::Float(x) => *x,
        }
    }

    pub fn mode(&self) -> Mode {
        match self {
            SampleValue::Exact(_) => Mode::Exact,
            SampleValue::Float(_) => Mode::FastFloat,
        }
    }

    /// Parses `p/q` or an integer as exact, anything else as a float.
    pub fn parse(s: &str, mode: Mode) -> Result<Self> {
        let bad = || Error::InvalidParameter {
            name: "value",
            value: s.to_string(),
            reason: "unparseable sample value",
        };
        match mode {
            Mode::Exact => {
                let (p, q) = s.split_once('/').unwrap_or((s, "1"));
                let p: BigInt = p.trim().parse().map_err(|_| bad())?;
                let q: BigInt = q.trim().parse().map_err(|_| bad())?;
                if q.is_zero() {
                    return Err(bad());
                }
                Ok(SampleValue::Exact(BigRational::new(p, q)))
            }
            Mode::FastFloat => s.trim().parse().map(SampleValue::Float).map_err(|_| bad()),
        }
    }
}

impl fmt::Display for SampleValue {
    /// Exact values print as `p/q`, floats in shortest round-trip form.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SampleValue::Exact(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            SampleValue::Float(x) => write!(f, "{x:?}"),
        }
    }
}

/// Converts an exact rational to the nearest-ish double, even when both
/// halves exceed the `f64` range.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    if let Some(x) = r.to_f64().filter(|x| x.is_finite() && *x != 0.0) {
        return x;
    }
    if r.is_zero() {
        return 0.0;
    }
    let bits = |x: &BigInt| x.bits() as i64;
    let shift = bits(r.numer()) - bits(r.denom()) - 60;
    let scaled = if shift >= 0 {
        r.numer() / (r.denom() << shift as usize)
    } else {
        (r.numer() << (-shift) as usize) / r.denom()
    };
    scaled.to_f64().unwrap_or(f64::NAN) * 2f64.powi(shift as i32)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeriesSample {
    pub n: u32,
    pub beta: f64,
    pub kind: SeriesKind,
    pub value: SampleValue,
}

impl SeriesSample {
    pub fn mode(&self) -> Mode {
        self.value.mode()
    }
}

/// Exact sum of rationals `p / d` that keeps a common denominator and reduces
/// once at the end. Adding a term costs only operations against `d`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactSum {
    num: BigUint,
    den: BigUint,
}

impl Default for ExactSum {
    fn default() -> Self {
        Self {
            num: BigUint::zero(),
            den: BigUint::one(),
        }
    }
}

impl ExactSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_recip(&mut self, d: &BigUint) {
        self.add_ratio(&BigUint::one(), d);
    }

    pub fn add_ratio(&mut self, p: &BigUint, d: &BigUint) {
        let r = &self.den % d;
        if !r.is_zero() {
            let m = d / r.gcd(d);
            self.den *= &m;
            self.num *= &m;
        }
        self.num += p * (&self.den / d);
    }

    pub fn merge(mut self, other: Self) -> Self {
        let l = self.den.lcm(&other.den);
        self.num = &self.num * (&l / &self.den) + &other.num * (&l / &other.den);
        self.den = l;
        self
    }

    pub fn to_rational(&self) -> BigRational {
        BigRational::new(BigInt::from(self.num.clone()), BigInt::from(self.den.clone()))
    }
}

/// `x^{-e}` evaluated with `powi` for integral exponents.
#[derive(Clone, Copy, Debug)]
enum RecipPow {
    Int(i32),
    Real(f64),
}

impl RecipPow {
    fn new(e: f64) -> Self {
        match integral(e) {
            Some(k) if k <= i32::MAX as u32 => RecipPow::Int(k as i32),
            _ => RecipPow::Real(e),
        }
    }

    #[inline]
    fn eval(self, x: f64) -> f64 {
        match self {
            RecipPow::Int(k) => x.powi(k).recip(),
            RecipPow::Real(e) => x.powf(-e),
        }
    }
}

fn integral(x: f64) -> Option<u32> {
    (x >= 0.0 && x.fract() == 0.0 && x <= 1e6).then_some(x as u32)
}

/// Accepts `beta >= 1`; the unit moment is the partition-of-unity check.
fn check_moment_beta(beta: f64) -> Result<()> {
    if beta.is_finite() && beta >= 1.0 {
        Ok(())
    } else {
        Err(Error::BetaOutOfDomain {
            beta,
            requirement: "beta >= 1",
        })
    }
}

/// Accepts `beta > 1`, the regime of the asymptotic expansions.
pub fn check_beta(beta: f64) -> Result<()> {
    if beta.is_finite() && beta > 1.0 {
        Ok(())
    } else {
        Err(Error::BetaOutOfDomain {
            beta,
            requirement: "beta > 1",
        })
    }
}

fn check_guard(what: &'static str, n: u32, limit: u32, override_guard: bool) -> Result<()> {
    if n > limit && !override_guard {
        return Err(Error::GuardExceeded {
            what,
            n: n as u64,
            limit: limit as u64,
        });
    }
    Ok(())
}

fn check_n_at_least(n: u32, min: u32) -> Result<()> {
    if n < min {
        return Err(Error::InvalidParameter {
            name: "n",
            value: n.to_string(),
            reason: if min == 1 { "needs n >= 1" } else { "needs n >= 2" },
        });
    }
    Ok(())
}

/// One request for `sigma_beta(F_n)` or `sigma_beta(n)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentQuery {
    pub beta: f64,
    pub n: u32,
    pub mode: Mode,
    pub config: TraversalConfig,
    pub override_guards: bool,
}

impl MomentQuery {
    pub fn new(beta: f64, n: u32, mode: Mode) -> Self {
        Self {
            beta,
            n,
            mode,
            config: TraversalConfig::default(),
            override_guards: false,
        }
    }

    pub fn with_config(mut self, config: TraversalConfig) -> Self {
        self.config = config;
        self
    }

    pub fn with_override(mut self, override_guards: bool) -> Self {
        self.override_guards = override_guards;
        self
    }

    fn check_budget(&self) -> Result<()> {
        match self.mode {
            Mode::Exact => check_guard("exact moment sum", self.n, EXACT_SIGMA_GUARD, self.override_guards),
            Mode::FastFloat => check_guard("float moment sum", self.n, FAST_SIGMA_GUARD, self.override_guards),
        }
    }
}

fn exact_exponent(e: f64, beta: f64, requirement: &'static str) -> Result<u32> {
    integral(e).ok_or(Error::ExactModeUnsupported { beta, requirement })
}

fn fold_exact(depth: u32, config: &TraversalConfig, term: impl Fn(&GapFrame, &mut ExactSum) + Sync) -> Result<BigRational> {
    let acc = traverse_fold(
        depth + 1,
        &config.clamped(depth),
        ExactSum::new,
        |acc, f| term(f, acc),
        ExactSum::merge,
    )?;
    Ok(acc.to_rational())
}

fn fold_float(depth: u32, config: &TraversalConfig, term: impl Fn(&GapFrame) -> f64 + Sync) -> Result<f64> {
    let acc = traverse_fold(
        depth + 1,
        &config.clamped(depth),
        CompensatedSum::new,
        |acc, f| acc.add(term(f)),
        CompensatedSum::merge,
    )?;
    Ok(acc.value())
}

/// `sigma_beta(F_n)`: the sum over gaps of `F_n` of `(q_l q_r)^{-beta}`.
pub fn sigma_f(query: &MomentQuery) -> Result<SeriesSample> {
    let MomentQuery { beta, n, mode, config, .. } = *query;
    check_moment_beta(beta)?;
    check_n_at_least(n, 1)?;
    query.check_budget()?;
    let value = match mode {
        Mode::Exact => {
            let b = exact_exponent(beta, beta, "an integer beta")?;
            SampleValue::Exact(fold_exact(n - 1, &config, |f, acc| {
                acc.add_recip(&BigUint::from(f.q_left as u128 * f.q_right as u128).pow(b))
            })?)
        }
        Mode::FastFloat => {
            let p = RecipPow::new(beta);
            SampleValue::Float(fold_float(n - 1, &config, |f| {
                p.eval(f.q_left as f64 * f.q_right as f64)
            })?)
        }
    };
    Ok(SeriesSample {
        n,
        beta,
        kind: SeriesKind::SigmaF,
        value,
    })
}

/// `sigma_beta(n)`: the sum of `q^{-2 beta}` over `Q_n`, taken as the mediant
/// denominators of the gaps of `F_{n-1}`.
pub fn sigma_q(query: &MomentQuery) -> Result<SeriesSample> {
    let MomentQuery { beta, n, mode, config, .. } = *query;
    check_moment_beta(beta)?;
    check_n_at_least(n, 2)?;
    query.check_budget()?;
    let value = match mode {
        Mode::Exact => {
            let e = exact_exponent(2.0 * beta, beta, "an integer 2*beta")?;
            SampleValue::Exact(fold_exact(n - 2, &config, |f, acc| {
                acc.add_recip(&BigUint::from(f.mediant_den()).pow(e))
            })?)
        }
        Mode::FastFloat => {
            let p = RecipPow::new(2.0 * beta);
            SampleValue::Float(fold_float(n - 2, &config, |f| p.eval(f.mediant_den() as f64))?)
        }
    };
    Ok(SeriesSample {
        n,
        beta,
        kind: SeriesKind::SigmaQ,
        value,
    })
}

/// Float series of both sums for `n` in `n_lo..=n_hi` from a single traversal.
///
/// Every value is bitwise identical to the corresponding single-`n` call of
/// [`sigma_f`] or [`sigma_q`] with the same config.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentSeries {
    pub sigma_f: Vec<SeriesSample>,
    pub sigma_q: Vec<SeriesSample>,
}

pub fn moment_series(
    beta: f64,
    n_lo: u32,
    n_hi: u32,
    config: &TraversalConfig,
    override_guards: bool,
) -> Result<MomentSeries> {
    check_moment_beta(beta)?;
    check_n_at_least(n_lo, 1)?;
    if n_hi < n_lo {
        return Err(Error::InvalidParameter {
            name: "n range",
            value: format!("{n_lo}..{n_hi}"),
            reason: "range must be nonempty and increasing",
        });
    }
    check_guard("float moment sum", n_hi, FAST_SIGMA_GUARD, override_guards)?;
    let pf = RecipPow::new(beta);
    let pq = RecipPow::new(2.0 * beta);
    let lo = n_lo.saturating_sub(2);
    let hi = n_hi - 1;
    let accs = traverse_levels(
        lo,
        hi,
        config,
        || (CompensatedSum::new(), CompensatedSum::new()),
        |acc, f| {
            acc.0.add(pf.eval(f.q_left as f64 * f.q_right as f64));
            acc.1.add(pq.eval(f.mediant_den() as f64));
        },
        |a, b| (a.0.merge(b.0), a.1.merge(b.1)),
    )?;
    let sample = |n, kind, acc: &CompensatedSum| SeriesSample {
        n,
        beta,
        kind,
        value: SampleValue::Float(acc.value()),
    };
    let at = |depth: u32| &accs[(depth - lo) as usize];
    Ok(MomentSeries {
        sigma_f: (n_lo..=n_hi).map(|n| sample(n, SeriesKind::SigmaF, &at(n - 1).0)).collect(),
        sigma_q: (n_lo.max(2)..=n_hi)
            .map(|n| sample(n, SeriesKind::SigmaQ, &at(n - 2).1))
            .collect(),
    })
}

/// Visits every `a` in `A_n` in lexicographic order together with its
/// continuant `q` and neighbour denominators `q_-`, `q_+`.
pub fn for_each_a(n: u32, mut visit: impl FnMut(&[u64], u64, u64, u64)) {
    fn rec(
        remaining: u64,
        p: u64,
        p_prev: u64,
        parts: &mut Vec<u64>,
        visit: &mut impl FnMut(&[u64], u64, u64, u64),
    ) {
        for a in 1..remaining {
            parts.push(a);
            rec(remaining - a, a * p + p_prev, p, parts, visit);
            parts.pop();
        }
        if remaining >= 2 {
            parts.push(remaining);
            let q_plus = (remaining - 1) * p + p_prev;
            visit(parts, q_plus + p, p, q_plus);
            parts.pop();
        }
    }
    if n >= 2 {
        rec(n as u64, 1, 0, &mut Vec::with_capacity(n as usize), &mut visit);
    }
}

/// All compositions of `n` whose last part is at least 2.
pub fn enumerate_a(n: u32, override_guard: bool) -> Result<Vec<Composition>> {
    check_n_at_least(n, 2)?;
    check_guard("enumeration of A_n", n, ENUMERATION_GUARD, override_guard)?;
    let mut out = Vec::with_capacity(1usize << (n - 2));
    for_each_a(n, |parts, _, _, _| out.push(Composition::from_parts_unchecked(parts.to_vec())));
    Ok(out)
}

/// Which parameters feed the default choice of `r` and `w`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamRegime {
    IntervalExpansion,
    ContinuantExpansion,
    BalancedWidth,
}

/// Cut-offs for the partition of `A_n`: continuants below `n^r` are small,
/// and a part above `n - w` is dominant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PartitionParams {
    pub r: f64,
    pub w: u64,
}

impl PartitionParams {
    pub fn new(n: u32, r: f64, w: u64) -> Result<Self> {
        if !(r.is_finite() && r >= 1.0) {
            return Err(Error::InvalidParameter {
                name: "r",
                value: r.to_string(),
                reason: "r must be >= 1",
            });
        }
        if w < 1 || w > n as u64 {
            return Err(Error::InvalidParameter {
                name: "w",
                value: w.to_string(),
                reason: "w must lie in [1, n]",
            });
        }
        Ok(Self { r, w })
    }

    /// `floor(n/2) - 2`, clamped to at least 1.
    pub fn default_w(n: u32) -> u64 {
        ((n / 2) as u64).saturating_sub(2).max(1)
    }

    pub fn for_regime(regime: ParamRegime, n: u32, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        check_n_at_least(n, 2)?;
        let (r, w) = match regime {
            ParamRegime::IntervalExpansion => (3.0 * beta / (2.0 * (beta - 1.0)) + 0.5, Self::default_w(n)),
            ParamRegime::ContinuantExpansion => ((2.0 * beta - 1.0) / (beta - 1.0), Self::default_w(n)),
            ParamRegime::BalancedWidth => {
                let nf = n as f64;
                let shape = nf.powf((2.0 * beta + 3.0) / (4.0 * beta + 1.0))
                    * nf.ln().powf(4.0 * beta / (4.0 * beta + 1.0));
                let w = (nf / 2.0 - 2.0).min(shape).floor();
                let w = if w.is_finite() && w >= 1.0 { w as u64 } else { 1 };
                ((2.0 * beta + 1.0) / (2.0 * (beta - 1.0)), w.min(n as u64))
            }
        };
        Self::new(n, r, w)
    }

    pub fn interval_expansion(n: u32, beta: f64) -> Result<Self> {
        Self::for_regime(ParamRegime::IntervalExpansion, n, beta)
    }

    pub fn continuant_expansion(n: u32, beta: f64) -> Result<Self> {
        Self::for_regime(ParamRegime::ContinuantExpansion, n, beta)
    }

    pub fn balanced_width(n: u32, beta: f64) -> Result<Self> {
        Self::for_regime(ParamRegime::BalancedWidth, n, beta)
    }

    /// At most one part can exceed `n - w`.
    pub fn single_dominant_regime(&self, n: u32) -> bool {
        2 * self.w < n as u64
    }

    /// `w <= n/2 - 2`.
    pub fn expansion_regime(&self, n: u32) -> bool {
        2 * self.w + 4 <= n as u64
    }
}

/// `ceil(n^r)` as an exact integer, or `None` when it exceeds `u64`.
///
/// Rational `r = m/d` with `d <= 1000` is handled exactly through integer
/// roots; other `r` fall back to double precision.
pub fn continuant_threshold(n: u64, r: f64) -> Option<u64> {
    if (n as f64).ln() * r > 64.0 * std::f64::consts::LN_2 + 1.0 {
        return None;
    }
    for d in 1..=1000u32 {
        let m = (r * d as f64).round();
        if (m / d as f64 - r).abs() <= 1e-12 * r {
            let power = BigUint::from(n).pow(m as u32);
            let root = power.nth_root(d);
            let ceil = if root.pow(d) == power { root } else { root + 1u32 };
            return ceil.to_u64();
        }
    }
    let x = (n as f64).powf(r).ceil();
    (x < u64::MAX as f64).then_some(x as u64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PartitionScheme {
    /// Weights `q^{-2 beta}`; the parts sum to `sigma_beta(n)`.
    Continuant,
    /// Weights `(q q_-)^{-beta} + (q q_+)^{-beta}`; the parts sum to `sigma_beta(F_n)`.
    Interval,
}

impl fmt::Display for PartitionScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PartitionScheme::Continuant => "continuant",
            PartitionScheme::Interval => "interval",
        })
    }
}

impl FromStr for PartitionScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "continuant" => Ok(Self::Continuant),
            "interval" => Ok(Self::Interval),
            _ => Err(Error::InvalidParameter {
                name: "scheme",
                value: s.to_string(),
                reason: "expected continuant or interval",
            }),
        }
    }
}

/// Cells of the partition of `A_n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PartitionCell {
    /// `q >= n^r`.
    LargeContinuant,
    /// `q < n^r` and some part exceeds `n - w`.
    Dominant,
    /// `q < n^r` and no part exceeds `n - w`.
    Spread,
    /// Dominant, but the last part is not strictly the largest.
    DominantInner,
    /// Dominant last part, the `q_+` half of the interval weight.
    DominantLastPlus,
    /// Dominant last part, the `q_-` half of the interval weight.
    DominantLastMinus,
}

impl PartitionCell {
    pub fn label(&self) -> &'static str {
        match self {
            PartitionCell::LargeContinuant => "S1_n2",
            PartitionCell::Dominant => "S2_n1",
            PartitionCell::Spread => "S2_n2",
            PartitionCell::DominantInner => "S3_n2",
            PartitionCell::DominantLastPlus => "S3p_n1",
            PartitionCell::DominantLastMinus => "S3m_n1",
        }
    }

    pub fn cells(scheme: PartitionScheme) -> &'static [PartitionCell] {
        use PartitionCell::*;
        match scheme {
            PartitionScheme::Continuant => &[LargeContinuant, Dominant, Spread],
            PartitionScheme::Interval => &[
                LargeContinuant,
                Spread,
                DominantInner,
                DominantLastPlus,
                DominantLastMinus,
            ],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PartitionEntry {
    pub cell: PartitionCell,
    pub value: SampleValue,
    pub members: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PartitionReport {
    pub n: u32,
    pub beta: f64,
    pub params: PartitionParams,
    pub scheme: PartitionScheme,
    pub entries: Vec<PartitionEntry>,
    /// The total, computed independently by the gap traversal.
    pub whole: SampleValue,
}

impl PartitionReport {
    pub fn get(&self, cell: PartitionCell) -> Option<&PartitionEntry> {
        self.entries.iter().find(|e| e.cell == cell)
    }

    pub fn value(&self, cell: PartitionCell) -> f64 {
        self.get(cell).map_or(0.0, |e| e.value.to_f64())
    }

    /// Whether the cells add up to the whole: exactly, or within `1e-12`
    /// relative for floats.
    pub fn parts_sum_to_whole(&self) -> bool {
        match &self.whole {
            SampleValue::Exact(whole) => {
                let mut total = BigRational::zero();
                for e in &self.entries {
                    match &e.value {
                        SampleValue::Exact(v) => total += v,
                        SampleValue::Float(_) => return false,
                    }
                }
                &total == whole
            }
            SampleValue::Float(whole) => {
                let mut total = CompensatedSum::new();
                for e in &self.entries {
                    total.add(e.value.to_f64());
                }
                (total.value() - whole).abs() <= 1e-12 * whole.abs()
            }
        }
    }
}

/// Classification of one `a` in `A_n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Classes {
    large: bool,
    dominant: bool,
    last_strict: bool,
}

fn classify(parts: &[u64], q: u64, n: u64, threshold: Option<u64>, w: u64) -> Classes {
    let (&last, head) = parts.split_last().expect("A_n has no empty member");
    let head_max = head.iter().copied().max().unwrap_or(0);
    Classes {
        large: threshold.is_some_and(|t| q >= t),
        dominant: last.max(head_max) > n - w,
        last_strict: last > head_max,
    }
}

enum Weights {
    Exact { e: u32 },
    Float { p: RecipPow },
}

impl Weights {
    fn new(mode: Mode, exponent: f64, beta: f64, requirement: &'static str) -> Result<Self> {
        Ok(match mode {
            Mode::Exact => Weights::Exact {
                e: exact_exponent(exponent, beta, requirement)?,
            },
            Mode::FastFloat => Weights::Float {
                p: RecipPow::new(exponent),
            },
        })
    }
}

enum Acc {
    Exact(ExactSum),
    Float(CompensatedSum),
}

impl Acc {
    fn new(mode: Mode) -> Self {
        match mode {
            Mode::Exact => Acc::Exact(ExactSum::new()),
            Mode::FastFloat => Acc::Float(CompensatedSum::new()),
        }
    }

    /// Adds `x^{-e}` for the exponent carried by `w`.
    fn add_recip_pow(&mut self, x: u128, w: &Weights) {
        match (self, w) {
            (Acc::Exact(s), Weights::Exact { e }) => s.add_recip(&BigUint::from(x).pow(*e)),
            (Acc::Float(s), Weights::Float { p }) => s.add(p.eval(x as f64)),
            _ => unreachable!("accumulator and weights share a mode"),
        }
    }

    fn value(&self) -> SampleValue {
        match self {
            Acc::Exact(s) => SampleValue::Exact(s.to_rational()),
            Acc::Float(s) => SampleValue::Float(s.value()),
        }
    }
}

/// Splits `sigma_beta(n)` or `sigma_beta(F_n)` over the cells of `A_n`.
pub fn partition_sums(
    n: u32,
    beta: f64,
    params: &PartitionParams,
    scheme: PartitionScheme,
    mode: Mode,
    override_guard: bool,
) -> Result<PartitionReport> {
    check_moment_beta(beta)?;
    check_n_at_least(n, 2)?;
    check_guard("partition sums", n, ENUMERATION_GUARD, override_guard)?;
    let params = PartitionParams::new(n, params.r, params.w)?;
    let threshold = continuant_threshold(n as u64, params.r);
    let cells = PartitionCell::cells(scheme);
    let mut accs: Vec<(Acc, u64)> = cells.iter().map(|_| (Acc::new(mode), 0)).collect();
    let slot = |c: PartitionCell| cells.iter().position(|&x| x == c).expect("cell in scheme");

    let query = MomentQuery::new(beta, n, mode);
    let whole = match scheme {
        PartitionScheme::Continuant => {
            let w = Weights::new(mode, 2.0 * beta, beta, "an integer 2*beta")?;
            for_each_a(n, |parts, q, _, _| {
                let c = classify(parts, q, n as u64, threshold, params.w);
                let cell = if c.large {
                    PartitionCell::LargeContinuant
                } else if c.dominant {
                    PartitionCell::Dominant
                } else {
                    PartitionCell::Spread
                };
                let (acc, count) = &mut accs[slot(cell)];
                acc.add_recip_pow(q as u128, &w);
                *count += 1;
            });
            sigma_q(&query)?.value
        }
        PartitionScheme::Interval => {
            let w = Weights::new(mode, beta, beta, "an integer beta")?;
            for_each_a(n, |parts, q, q_minus, q_plus| {
                let c = classify(parts, q, n as u64, threshold, params.w);
                let lo = q as u128 * q_minus as u128;
                let hi = q as u128 * q_plus as u128;
                if c.large || !c.dominant || !c.last_strict {
                    let cell = if c.large {
                        PartitionCell::LargeContinuant
                    } else if !c.dominant {
                        PartitionCell::Spread
                    } else {
                        PartitionCell::DominantInner
                    };
                    let (acc, count) = &mut accs[slot(cell)];
                    acc.add_recip_pow(lo, &w);
                    acc.add_recip_pow(hi, &w);
                    *count += 1;
                } else {
                    let (acc, count) = &mut accs[slot(PartitionCell::DominantLastPlus)];
                    acc.add_recip_pow(hi, &w);
                    *count += 1;
                    let (acc, count) = &mut accs[slot(PartitionCell::DominantLastMinus)];
                    acc.add_recip_pow(lo, &w);
                    *count += 1;
                }
            });
            sigma_f(&query)?.value
        }
    };

    let entries = cells
        .iter()
        .zip(&accs)
        .map(|(&cell, (acc, members))| PartitionEntry {
            cell,
            value: acc.value(),
            members: *members,
        })
        .collect();
    Ok(PartitionReport {
        n,
        beta,
        params,
        scheme,
        entries,
        whole,
    })
}

/// `sum_{a in A_n} 1/(q q_-) + 1/(q q_+)` over the enumeration of `A_n`.
pub fn unit_fraction_sum(n: u32, override_guard: bool) -> Result<BigRational> {
    check_n_at_least(n, 2)?;
    check_guard("unit-fraction identity", n, UNIT_FRACTION_GUARD, override_guard)?;
    let mut acc = ExactSum::new();
    for_each_a(n, |_, q, q_minus, q_plus| {
        acc.add_recip(&BigUint::from(q as u128 * q_minus as u128));
        acc.add_recip(&BigUint::from(q as u128 * q_plus as u128));
    });
    Ok(acc.to_rational())
}

/// The same identity through the gap traversal of `F_{n-1}`: each mediant
/// `m = q_l + q_r` contributes `1/(m q_l) + 1/(m q_r)`.
pub fn unit_fraction_sum_traversal(n: u32, config: &TraversalConfig) -> Result<BigRational> {
    check_n_at_least(n, 2)?;
    fold_exact(n - 2, config, |f, acc| {
        let m = f.mediant_den() as u128;
        acc.add_recip(&BigUint::from(m * f.q_left as u128));
        acc.add_recip(&BigUint::from(m * f.q_right as u128));
    })
}

fn check_single_dominant(n: u32, w: u64) -> Result<()> {
    if w < 1 || 2 * w >= n as u64 {
        return Err(Error::HypothesisViolated(format!(
            "the prefix/suffix decomposition needs 1 <= w < n/2, got n = {n}, w = {w}"
        )));
    }
    Ok(())
}

/// All compositions of `u`, the empty one included when `u = 0`.
fn compositions(u: u64) -> Vec<Vec<u64>> {
    if u == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for first in 1..=u {
        for mut rest in compositions(u - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Compositions of `v` that are empty or end in a part at least 2.
fn canonical_or_empty(v: u64) -> Vec<Vec<u64>> {
    compositions(v)
        .into_iter()
        .filter(|c| c.last().is_none_or(|&a| a >= 2))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecompositionReport {
    pub n: u32,
    pub w: u64,
    /// Members of `A_n` with a part above `n - w`, enumerated directly.
    pub direct_count: usize,
    /// Members produced by `prefix ++ (X) ++ suffix` over all `(u, v, X)`.
    pub parametrized_count: usize,
    pub multisets_equal: bool,
    pub pairwise_disjoint: bool,
}

impl DecompositionReport {
    pub fn holds(&self) -> bool {
        self.multisets_equal && self.pairwise_disjoint
    }
}

/// Checks that `{a in A_n : some a_j > n - w}` is the disjoint union over
/// `X in (n - w, n]` and `u + v = n - X` of `prefix(u) ++ (X) ++ suffix(v)`,
/// where the prefix is any composition and the suffix is empty or canonical.
pub fn decomposition_check(n: u32, w: u64) -> Result<DecompositionReport> {
    check_single_dominant(n, w)?;
    check_guard("decomposition check", n, DECOMPOSITION_GUARD, false)?;
    let n64 = n as u64;
    let mut direct = Vec::new();
    for_each_a(n, |parts, _, _, _| {
        if parts.iter().any(|&a| a > n64 - w) {
            direct.push(parts.to_vec());
        }
    });

    let mut generated = Vec::new();
    for x in (n64 - w + 1)..=n64 {
        for u in 0..=(n64 - x) {
            let v = n64 - x - u;
            for prefix in compositions(u) {
                for suffix in canonical_or_empty(v) {
                    let mut a = prefix.clone();
                    a.push(x);
                    a.extend_from_slice(&suffix);
                    generated.push(a);
                }
            }
        }
    }
    let parametrized_count = generated.len();
    generated.sort();
    let before = generated.len();
    generated.dedup();
    let pairwise_disjoint = generated.len() == before;
    direct.sort();
    Ok(DecompositionReport {
        n,
        w,
        direct_count: direct.len(),
        parametrized_count,
        multisets_equal: pairwise_disjoint && direct == generated,
        pairwise_disjoint,
    })
}

/// `sum 1 / (<prefix>^{2 beta} <suffix>^{2 beta})` over the members of `A_n`
/// with a part above `n - w`, split around that part.
pub fn r0_sum(n: u32, w: u64, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    check_single_dominant(n, w)?;
    check_guard("prefix/suffix sum", n, R0_GUARD, false)?;
    let p = RecipPow::new(2.0 * beta);
    let limit = n as u64 - w;
    let mut acc = CompensatedSum::new();
    for_each_a(n, |parts, _, _, _| {
        if let Some(j) = parts.iter().position(|&a| a > limit) {
            let kp = crate::continuants::continuant_u64(&parts[..j]).expect("fits at this size");
            let ks = crate::continuants::continuant_u64(&parts[j + 1..]).expect("fits at this size");
            acc.add(p.eval(kp as f64 * ks as f64));
        }
    });
    Ok(acc.value())
}

/// `beta (beta + 1) ... (beta + k - 1) / k!`.
pub fn gamma_coeff(beta: f64, k: u32) -> f64 {
    (0..k).fold(1.0, |g, i| g * (beta + i as f64) / (i + 1) as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CoefficientKind {
    /// Prefix/suffix series of the continuant-sum expansion.
    CPrime,
    /// Inner dominant part, `q_-` half.
    BMinus,
    /// Inner dominant part, `q_+` half.
    BPlus,
    /// Dominant last part, second-order series.
    D,
    /// Dominant last part, first-correction series.
    E,
}

impl fmt::Display for CoefficientKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CoefficientKind::CPrime => "Cprime",
            CoefficientKind::BMinus => "Bminus",
            CoefficientKind::BPlus => "Bplus",
            CoefficientKind::D => "D",
            CoefficientKind::E => "E",
        })
    }
}

impl FromStr for CoefficientKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Cprime" | "cprime" | "C'" => Ok(Self::CPrime),
            "Bminus" | "bminus" | "B-" => Ok(Self::BMinus),
            "Bplus" | "bplus" | "B+" => Ok(Self::BPlus),
            "D" | "d" => Ok(Self::D),
            "E" | "e" => Ok(Self::E),
            _ => Err(Error::InvalidParameter {
                name: "kind",
                value: s.to_string(),
                reason: "expected Cprime, Bminus, Bplus, D or E",
            }),
        }
    }
}

impl CoefficientKind {
    /// The series converges for `k < threshold(beta)`.
    pub fn threshold(&self, beta: f64) -> f64 {
        match self {
            CoefficientKind::E | CoefficientKind::D => 2.0 * beta - 1.0,
            CoefficientKind::CPrime | CoefficientKind::BPlus => 2.0 * beta - 2.0,
            CoefficientKind::BMinus => beta - 2.0,
        }
    }

    /// Exponent `p` with shell contributions decaying like `v^{-p}`.
    pub fn decay(&self, beta: f64, k: u32) -> f64 {
        self.threshold(beta) - k as f64 + 1.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoefficientEstimate {
    pub kind: CoefficientKind,
    pub k: u32,
    pub beta: f64,
    pub v_max: u32,
    pub value: f64,
    /// Crude estimate of the omitted shells `v > v_max`.
    pub tail: f64,
    /// `k` lies where the two stated convergence ranges of the `B` series disagree.
    pub disputed: bool,
}

/// Running continuant state of a composition built left to right: the matrix
/// product `prod [[a, 1], [1, 0]] = [[p, p_prev], [r, r_prev]]`, so that
/// `<a_1..a_t> = p`, `<a_1..a_{t-1}> = p_prev` and `<a_2..a_t> = r`.
#[derive(Clone, Copy, Debug)]
struct Node {
    sum: u32,
    last: u64,
    p: u64,
    p_prev: u64,
    r: u64,
    r_prev: u64,
}

impl Node {
    const EMPTY: Node = Node {
        sum: 0,
        last: 0,
        p: 1,
        p_prev: 0,
        r: 0,
        r_prev: 1,
    };

    #[inline]
    fn push(&self, a: u64) -> Node {
        Node {
            sum: self.sum + a as u32,
            last: a,
            p: a * self.p + self.p_prev,
            p_prev: self.p,
            r: a * self.r + self.r_prev,
            r_prev: self.r,
        }
    }

    fn is_canonical(&self) -> bool {
        self.sum == 0 || self.last >= 2
    }

    /// Reversed value `[a_t, ..., a_1]`.
    fn reversed_cf(&self) -> f64 {
        self.p_prev as f64 / self.p as f64
    }

    /// Forward value `[a_1, ..., a_t]`.
    fn forward_cf(&self) -> f64 {
        self.r as f64 / self.p as f64
    }
}

/// Visits every composition with part-sum at most `max_sum`, the empty one first.
fn walk_compositions(max_sum: u32, visit: &mut impl FnMut(&Node)) {
    fn rec(node: Node, max_sum: u32, visit: &mut impl FnMut(&Node)) {
        visit(&node);
        for a in 1..=(max_sum - node.sum) as u64 {
            rec(node.push(a), max_sum, visit);
        }
    }
    rec(Node::EMPTY, max_sum, visit);
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |b, i| b * (n - i) as f64 / (i + 1) as f64)
}

/// Shell sums `M[u][h] = sum over prefixes of part-sum u of x^h / <P>^{2 beta}`
/// with `x` the reversed value of the prefix.
fn prefix_moments(v_max: u32, degree: u32, p2b: RecipPow) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; degree as usize + 1]; v_max as usize + 1];
    walk_compositions(v_max, &mut |node| {
        let w = p2b.eval(node.p as f64);
        let x = if node.sum == 0 { 0.0 } else { node.reversed_cf() };
        let row = &mut m[node.sum as usize];
        let mut xh = 1.0;
        for slot in row.iter_mut() {
            *slot += w * xh;
            xh *= x;
        }
    });
    m
}

/// Truncation of the coefficient series at part-sum `v_max`.
pub fn truncated_coefficient(kind: CoefficientKind, k: u32, beta: f64, v_max: u32) -> Result<CoefficientEstimate> {
    check_beta(beta)?;
    let threshold = kind.threshold(beta);
    if (k as f64) >= threshold {
        return Err(Error::Divergent {
            kind: match kind {
                CoefficientKind::CPrime => "Cprime",
                CoefficientKind::BMinus => "Bminus",
                CoefficientKind::BPlus => "Bplus",
                CoefficientKind::D => "D",
                CoefficientKind::E => "E",
            },
            k,
            beta,
            threshold,
        });
    }
    if !(2..=COEFFICIENT_GUARD).contains(&v_max) {
        return Err(Error::InvalidParameter {
            name: "v_max",
            value: v_max.to_string(),
            reason: "v_max must lie in [2, 26]",
        });
    }
    let shells = match kind {
        CoefficientKind::E | CoefficientKind::D => last_part_shells(kind, k, beta, v_max),
        CoefficientKind::CPrime => cprime_shells(k, beta, v_max),
        CoefficientKind::BMinus | CoefficientKind::BPlus => b_shells(kind, k, beta, v_max),
    };
    let mut value = CompensatedSum::new();
    for &s in &shells {
        value.add(s);
    }
    let decay = kind.decay(beta, k);
    let last = shells[v_max as usize];
    Ok(CoefficientEstimate {
        kind,
        k,
        beta,
        v_max,
        value: value.value(),
        tail: last * v_max as f64 / (decay - 1.0),
        disputed: kind == CoefficientKind::BPlus && (k as f64) >= beta - 2.0,
    })
}

/// Per-shell terms of `E_k` and `D_k`, both sums over canonical compositions.
fn last_part_shells(kind: CoefficientKind, k: u32, beta: f64, v_max: u32) -> Vec<f64> {
    let p2b = RecipPow::new(2.0 * beta);
    let gl: Vec<f64> = (0..=k).map(|l| gamma_coeff(beta, l)).collect();
    let mut shells = vec![0.0; v_max as usize + 1];
    walk_compositions(v_max, &mut |node| {
        if node.sum == 0 || node.last < 2 {
            return;
        }
        let v = node.sum as f64;
        let x = node.reversed_cf();
        let w = 2.0 * p2b.eval(node.p as f64);
        let term = match kind {
            CoefficientKind::E => gl[k as usize] * (v - x).powi(k as i32),
            _ => (0..=k)
                .map(|l| gl[l as usize] * (v - x).powi(l as i32) * gl[(k - l) as usize] * (v + 1.0 - x).powi((k - l) as i32))
                .sum(),
        };
        shells[node.sum as usize] += w * term;
    });
    shells
}

/// Per-shell terms of `C'_k`: pairs of a prefix and an empty-or-canonical
/// suffix, weighted by `(v - x_P - y_S)^k / (<P> <S>)^{2 beta}`.
fn cprime_shells(k: u32, beta: f64, v_max: u32) -> Vec<f64> {
    let p2b = RecipPow::new(2.0 * beta);
    let mp = prefix_moments(v_max, k, p2b);
    let mut ms = vec![vec![0.0; k as usize + 1]; v_max as usize + 1];
    walk_compositions(v_max, &mut |node| {
        if !node.is_canonical() {
            return;
        }
        let w = p2b.eval(node.p as f64);
        let y = if node.sum == 0 { 0.0 } else { node.forward_cf() };
        let mut yc = 1.0;
        for slot in ms[node.sum as usize].iter_mut() {
            *slot += w * yc;
            yc *= y;
        }
    });
    let g = gamma_coeff(2.0 * beta, k);
    let mut shells = vec![0.0; v_max as usize + 1];
    for v in 1..=v_max {
        let vf = v as f64;
        let mut total = 0.0;
        for u in 0..=v {
            let s = (v - u) as usize;
            // (v - x - y)^k = sum over a + b + c = k of k!/(a! b! c!) v^a (-x)^b (-y)^c.
            for b in 0..=k {
                for c in 0..=(k - b) {
                    let a = k - b - c;
                    let coef = binomial(k, a) * binomial(k - a, b);
                    let sign = if (b + c) % 2 == 0 { 1.0 } else { -1.0 };
                    total += sign * coef * vf.powi(a as i32) * mp[u as usize][b as usize] * ms[s][c as usize];
                }
            }
        }
        shells[v as usize] = g * total;
    }
    shells
}

/// Per-shell terms of `B_k^-` and `B_k^+`: a prefix `P`, then a nonempty
/// canonical suffix `S` paired with its truncation (minus) or with its last
/// part decremented (plus).
fn b_shells(kind: CoefficientKind, k: u32, beta: f64, v_max: u32) -> Vec<f64> {
    let p2b = RecipPow::new(2.0 * beta);
    let pb = RecipPow::new(beta);
    let mp = prefix_moments(v_max, k, p2b);
    let d = k as usize + 1;
    // ns[s][i][j] = sum over suffixes of x1^i x2^j times the suffix weight,
    // with x1 the companion value and x2 the suffix value.
    let mut ns = vec![vec![vec![0.0; d]; d]; v_max as usize + 1];
    walk_compositions(v_max, &mut |node| {
        if node.sum == 0 || node.last < 2 {
            return;
        }
        let (k_comp, r_comp) = match kind {
            CoefficientKind::BMinus => (node.p_prev, node.r_prev),
            _ => (node.p - node.p_prev, node.r - node.r_prev),
        };
        let y1 = r_comp as f64 / k_comp as f64;
        let y2 = node.forward_cf();
        let w = pb.eval(node.p as f64) * pb.eval(k_comp as f64);
        let cell = &mut ns[node.sum as usize];
        let mut p1 = 1.0;
        for row in cell.iter_mut() {
            let mut p2 = 1.0;
            for slot in row.iter_mut() {
                *slot += w * p1 * p2;
                p2 *= y2;
            }
            p1 *= y1;
        }
    });
    let gl: Vec<f64> = (0..=k).map(|l| gamma_coeff(beta, l)).collect();
    let mut shells = vec![0.0; v_max as usize + 1];
    for v in 2..=v_max {
        let vf = v as f64;
        let mut total = 0.0;
        for u in 0..=(v - 2) {
            let s = (v - u) as usize;
            for l in 0..=k {
                let m = k - l;
                // (c - y1)^l (c - y2)^m with c = v - x, expanded in x, y1, y2.
                for i in 0..=l {
                    for j in 0..=m {
                        let e = l - i + m - j;
                        let outer = binomial(l, i) * binomial(m, j) * if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                        for h in 0..=e {
                            let inner = binomial(e, h) * vf.powi((e - h) as i32) * if h % 2 == 0 { 1.0 } else { -1.0 };
                            total += gl[l as usize]
                                * gl[m as usize]
                                * outer
                                * inner
                                * mp[u as usize][h as usize]
                                * ns[s][i as usize][j as usize];
                        }
                    }
                }
            }
        }
        shells[v as usize] = total;
    }
    shells
}

/// A proven inequality checked on actual data.
#[derive(Clone, Debug, PartialEq)]
pub struct HardBound {
    pub name: &'static str,
    pub value: f64,
    pub bound: f64,
    pub holds: bool,
}

/// An order-of-magnitude bound with an unknown constant: reported, never asserted.
#[derive(Clone, Debug, PartialEq)]
pub struct MonitoredRatio {
    pub name: &'static str,
    pub value: f64,
    pub shape: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundsReport {
    pub n: u32,
    pub beta: f64,
    pub params: PartitionParams,
    pub hard: Vec<HardBound>,
    pub monitored: Vec<MonitoredRatio>,
}

impl BoundsReport {
    pub fn all_hold(&self) -> bool {
        self.hard.iter().all(|b| b.holds)
    }
}

/// Checks the large-continuant tail bounds and the length bound, and reports
/// the spread-cell sums against their expected shapes.
pub fn bounds_report(n: u32, beta: f64, params: &PartitionParams) -> Result<BoundsReport> {
    check_beta(beta)?;
    check_n_at_least(n, 2)?;
    check_guard("bound suite", n, BOUNDS_GUARD, false)?;
    let params = PartitionParams::new(n, params.r, params.w)?;
    let (r, nf) = (params.r, n as f64);
    let continuant = partition_sums(n, beta, &params, PartitionScheme::Continuant, Mode::FastFloat, false)?;
    let interval = partition_sums(n, beta, &params, PartitionScheme::Interval, Mode::FastFloat, false)?;

    let threshold = continuant_threshold(n as u64, r);
    let mut max_len = 0usize;
    for_each_a(n, |parts, q, _, _| {
        if threshold.is_none_or(|t| q < t) {
            max_len = max_len.max(parts.len());
        }
    });

    let bound = |name, value: f64, bound: f64| HardBound {
        name,
        value,
        bound,
        holds: value <= bound,
    };
    let large_c = continuant.value(PartitionCell::LargeContinuant);
    let large_i = interval.value(PartitionCell::LargeContinuant);
    let hard = vec![
        bound(
            "large_continuant_tail",
            large_c,
            2f64.powf(beta - 1.0) * nf.powf(-2.0 * r * (beta - 1.0)),
        ),
        bound("length_bound", max_len as f64, golden_depth_constant() * r * nf.ln()),
        bound(
            "large_interval_tail",
            large_i,
            nf.powf(-(beta - 1.0) * (2.0 * r - 1.0)),
        ),
    ];

    let w = params.w as f64;
    let ratio = |name, value: f64, shape: f64| MonitoredRatio {
        name,
        value,
        shape,
        ratio: value / shape,
    };
    let monitored = vec![
        ratio(
            "spread_continuant",
            continuant.value(PartitionCell::Spread),
            nf * nf * nf.ln().powf(4.0 * beta) / w.powf(4.0 * beta),
        ),
        ratio(
            "spread_interval",
            interval.value(PartitionCell::Spread),
            nf * nf * nf.ln().powf(3.0 * beta) / w.powf(3.0 * beta),
        ),
    ];
    Ok(BoundsReport {
        n,
        beta,
        params,
        hard,
        monitored,
    })
}
