//! Brocot sequences `F_n`, the fraction sets `Q_n = F_n \ F_{n-1}`, and the
//! deterministic parallel traversal of the gap tree.
//!
//! Every gap of `F_n` is a [`GapFrame`] `(q_left, q_right)` of length
//! `1 / (q_left * q_right)`. The root `(1, 1)` has depth 0 and the children of
//! `(a, b)` are `(a, a + b)` and `(a + b, b)`, so the frames at depth `n - 1`
//! are exactly the gaps of `F_n`, left to right.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use rayon::prelude::*;

use crate::continuants::Composition;
use crate::error::{Error, Result};

/// Largest `n` for which [`level`] materializes `F_n` without an override.
pub const LEVEL_GUARD: u32 = 24;

/// Largest depth whose frames fit in `u64` (denominators are at most `F(86)`).
pub const FAST_DEPTH_LIMIT: u32 = 84;

/// Default number of levels unrolled before handing subtrees to workers.
pub const DEFAULT_SPLIT_DEPTH: u32 = 10;

/// A reduced fraction `num / den` in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Fraction {
    num: u64,
    den: u64,
}

impl Fraction {
    /// Reduces `num / den`; rejects a zero denominator or a value above 1.
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 || num > den {
            return Err(Error::InvalidParameter {
                name: "fraction",
                value: format!("{num}/{den}"),
                reason: "needs den > 0 and 0 <= num <= den",
            });
        }
        let g = num.gcd(&den);
        Ok(Self {
            num: num / g,
            den: den / g,
        })
    }

    pub const ZERO: Fraction = Fraction { num: 0, den: 1 };
    pub const ONE: Fraction = Fraction { num: 1, den: 1 };

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    pub fn to_rational(&self) -> BigRational {
        BigRational::new(BigInt::from(self.num), BigInt::from(self.den))
    }
}

impl Ord for Fraction {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num as u128 * other.den as u128).cmp(&(other.num as u128 * self.den as u128))
    }
}

impl PartialOrd for Fraction {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// `(p + p') / (q + q')`. Not reduced unless the inputs are unimodular
/// neighbours, in which case it already is.
pub fn mediant(x: Fraction, y: Fraction) -> Fraction {
    Fraction {
        num: x.num + y.num,
        den: x.den + y.den,
    }
}

/// One interval of a Brocot partition, stored by its endpoint denominators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GapFrame {
    pub q_left: u64,
    pub q_right: u64,
    pub depth: u32,
}

impl GapFrame {
    pub const ROOT: GapFrame = GapFrame {
        q_left: 1,
        q_right: 1,
        depth: 0,
    };

    /// Denominator of the mediant that splits this gap.
    #[inline]
    pub fn mediant_den(&self) -> u64 {
        self.q_left + self.q_right
    }

    #[inline]
    pub fn children(&self) -> (GapFrame, GapFrame) {
        let m = self.mediant_den();
        (
            GapFrame {
                q_left: self.q_left,
                q_right: m,
                depth: self.depth + 1,
            },
            GapFrame {
                q_left: m,
                q_right: self.q_right,
                depth: self.depth + 1,
            },
        )
    }

    pub fn gap_length(&self) -> BigRational {
        BigRational::new(
            BigInt::from(1),
            BigInt::from(self.q_left) * BigInt::from(self.q_right),
        )
    }
}

/// Sizes and extreme gap lengths of one level.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelStats {
    pub n: u32,
    pub count_fractions: u64,
    pub count_gaps: u64,
    pub min_gap: BigRational,
    pub max_gap: BigRational,
}

fn check_level(n: u32) -> Result<()> {
    if n < 1 {
        return Err(Error::InvalidParameter {
            name: "n",
            value: n.to_string(),
            reason: "levels start at n = 1",
        });
    }
    if n - 1 > FAST_DEPTH_LIMIT {
        return Err(Error::Overflow);
    }
    Ok(())
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

/// The Brocot sequence `F_n` in increasing order.
pub fn level(n: u32, override_guard: bool) -> Result<Vec<Fraction>> {
    check_level(n)?;
    check_guard("level", n, LEVEL_GUARD, override_guard)?;
    let mut cur = vec![Fraction::ZERO, Fraction::ONE];
    for _ in 1..n {
        let mut next = Vec::with_capacity(2 * cur.len() - 1);
        for pair in cur.windows(2) {
            next.push(pair[0]);
            next.push(mediant(pair[0], pair[1]));
        }
        next.push(Fraction::ONE);
        cur = next;
    }
    Ok(cur)
}

/// `Q_n`, the fractions first appearing in `F_n`, in increasing order (`n >= 2`).
pub fn brocot_fractions(n: u32, override_guard: bool) -> Result<Vec<Fraction>> {
    if n < 2 {
        return Err(Error::InvalidParameter {
            name: "n",
            value: n.to_string(),
            reason: "Q_n is defined for n >= 2",
        });
    }
    Ok(level(n, override_guard)?
        .into_iter()
        .skip(1)
        .step_by(2)
        .collect())
}

/// Pull iterator over the gaps of `F_n`, left to right.
#[derive(Clone, Debug)]
pub struct Gaps {
    stack: Vec<GapFrame>,
    target: u32,
}

impl Iterator for Gaps {
    type Item = GapFrame;

    fn next(&mut self) -> Option<GapFrame> {
        let mut frame = self.stack.pop()?;
        while frame.depth < self.target {
            let (left, right) = frame.children();
            self.stack.push(right);
            frame = left;
        }
        Some(frame)
    }
}

pub fn gaps(n: u32) -> Result<Gaps> {
    check_level(n)?;
    Ok(Gaps {
        stack: vec![GapFrame::ROOT],
        target: n - 1,
    })
}

pub fn level_stats(n: u32, config: &TraversalConfig) -> Result<LevelStats> {
    check_level(n)?;
    if n > 64 {
        return Err(Error::Overflow);
    }
    let (min_product, max_product) = traverse_reduce(
        n,
        &config.clamped(n - 1),
        |f| {
            let p = f.q_left as u128 * f.q_right as u128;
            (p, p)
        },
        |a, b| (a.0.min(b.0), a.1.max(b.1)),
    )?;
    let unit = |p: u128| BigRational::new(BigInt::from(1), BigInt::from(p));
    Ok(LevelStats {
        n,
        count_fractions: (1u64 << (n - 1)) + 1,
        count_gaps: 1u64 << (n - 1),
        min_gap: unit(max_product),
        max_gap: unit(min_product),
    })
}

/// Canonical continued fraction of `x` in `(0, 1)` by the Euclidean algorithm.
pub fn cf_of_fraction(x: Fraction) -> Result<Composition> {
    if x.num == 0 || x.num == x.den {
        return Err(Error::NoCanonicalExpansion(x.to_string()));
    }
    let (mut p, mut q) = (x.num, x.den);
    let mut parts = Vec::new();
    while p != 0 {
        parts.push(q / p);
        (p, q) = (q % p, p);
    }
    Ok(Composition::from_parts_unchecked(parts))
}

/// Sum of the canonical partial quotients; `x` lies in `Q_n` iff this is `n`.
pub fn brocot_order(x: Fraction) -> Result<u64> {
    Ok(cf_of_fraction(x)?.sum())
}

/// How the gap tree is split among workers.
///
/// The tree is cut at `split_depth` into `2^split_depth` subtrees. Each
/// subtree is folded left to right, and subtree results are merged by a fixed
/// pairwise tree in index order, so the worker count never changes a result.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TraversalConfig {
    pub split_depth: u32,
    pub workers: usize,
}

impl Default for TraversalConfig {
    fn default() -> Self {
        Self {
            split_depth: DEFAULT_SPLIT_DEPTH,
            workers: 1,
        }
    }
}

impl TraversalConfig {
    pub fn with_workers(workers: usize) -> Self {
        Self {
            workers,
            ..Self::default()
        }
    }

    /// Same config with the split depth capped at `max_depth`.
    pub fn clamped(&self, max_depth: u32) -> Self {
        Self {
            split_depth: self.split_depth.min(max_depth),
            ..*self
        }
    }
}

/// Neumaier-compensated float accumulator.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(mut self, other: Self) -> Self {
        self.add(other.sum);
        self.comp += other.comp;
        self
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Merges in a fixed balanced tree over the input order.
pub fn pairwise_merge<A>(mut items: Vec<A>, merge: &impl Fn(A, A) -> A) -> Option<A> {
    while items.len() > 1 {
        let mut next = Vec::with_capacity(items.len().div_ceil(2));
        let mut it = items.into_iter();
        while let Some(a) = it.next() {
            next.push(match it.next() {
                Some(b) => merge(a, b),
                None => a,
            });
        }
        items = next;
    }
    items.pop()
}

fn frames_at(depth: u32) -> Vec<GapFrame> {
    let mut frames = vec![GapFrame::ROOT];
    for _ in 0..depth {
        frames = frames
            .iter()
            .flat_map(|f| {
                let (l, r) = f.children();
                [l, r]
            })
            .collect();
    }
    frames
}

fn dfs<A, V>(frame: GapFrame, lo: u32, hi: u32, accs: &mut [A], visit: &V)
where
    V: Fn(&mut A, &GapFrame),
{
    if frame.depth >= lo {
        visit(&mut accs[(frame.depth - lo) as usize], &frame);
    }
    if frame.depth < hi {
        let (l, r) = frame.children();
        dfs(l, lo, hi, accs, visit);
        dfs(r, lo, hi, accs, visit);
    }
}

fn run_pool<T, F>(workers: usize, job: F) -> Result<T>
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    if workers == 1 {
        return Ok(job());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|_| Error::InvalidParameter {
            name: "workers",
            value: workers.to_string(),
            reason: "could not start a worker pool of this size",
        })?;
    Ok(pool.install(job))
}

/// Folds every depth in `lo..=hi` separately and returns one accumulator per
/// depth. The value at depth `d` is bitwise identical to
/// `traverse_fold(d + 1, &config.clamped(d), ..)`.
pub fn traverse_levels<A, I, V, M>(
    lo: u32,
    hi: u32,
    config: &TraversalConfig,
    init: I,
    visit: V,
    merge: M,
) -> Result<Vec<A>>
where
    A: Send,
    I: Fn() -> A + Sync,
    V: Fn(&mut A, &GapFrame) + Sync,
    M: Fn(A, A) -> A + Sync,
{
    if lo > hi {
        return Err(Error::InvalidParameter {
            name: "depth range",
            value: format!("{lo}..={hi}"),
            reason: "range must be nonempty",
        });
    }
    if hi > FAST_DEPTH_LIMIT {
        return Err(Error::Overflow);
    }
    if config.workers == 0 {
        return Err(Error::InvalidParameter {
            name: "workers",
            value: "0".into(),
            reason: "need at least one worker",
        });
    }
    let split = config.split_depth.min(hi);
    let mut out = Vec::with_capacity((hi - lo + 1) as usize);

    // Depths above the cut: one accumulator per frame, merged pairwise.
    for d in lo..split.max(lo) {
        let accs: Vec<A> = frames_at(d)
            .iter()
            .map(|f| {
                let mut a = init();
                visit(&mut a, f);
                a
            })
            .collect();
        out.push(pairwise_merge(accs, &merge).expect("level is nonempty"));
    }

    let deep_lo = split.max(lo);
    let roots = frames_at(split);
    let per_subtree: Vec<Vec<A>> = run_pool(config.workers, || {
        roots
            .par_iter()
            .map(|&root| {
                let mut accs: Vec<A> = (deep_lo..=hi).map(|_| init()).collect();
                dfs(root, deep_lo, hi, &mut accs, &visit);
                accs
            })
            .collect()
    })?;

    let width = (hi - deep_lo + 1) as usize;
    let mut columns: Vec<Vec<A>> = (0..width).map(|_| Vec::with_capacity(roots.len())).collect();
    for accs in per_subtree {
        for (col, a) in columns.iter_mut().zip(accs) {
            col.push(a);
        }
    }
    for col in columns {
        out.push(pairwise_merge(col, &merge).expect("subtree list is nonempty"));
    }
    Ok(out)
}

fn check_split(n: u32, config: &TraversalConfig) -> Result<()> {
    check_level(n)?;
    if config.split_depth > n - 1 {
        return Err(Error::InvalidParameter {
            name: "split_depth",
            value: config.split_depth.to_string(),
            reason: "split depth must be at most n - 1",
        });
    }
    Ok(())
}

/// Folds the gaps of `F_n` into accumulators created by `init`.
pub fn traverse_fold<A, I, V, M>(
    n: u32,
    config: &TraversalConfig,
    init: I,
    visit: V,
    merge: M,
) -> Result<A>
where
    A: Send,
    I: Fn() -> A + Sync,
    V: Fn(&mut A, &GapFrame) + Sync,
    M: Fn(A, A) -> A + Sync,
{
    check_split(n, config)?;
    let mut v = traverse_levels(n - 1, n - 1, config, init, visit, merge)?;
    Ok(v.pop().expect("one depth requested"))
}

/// Maps every gap of `F_n` through `kernel` and combines the results.
///
/// For an associative `combine` the result equals the left-to-right fold of
/// the kernel over [`gaps`], for every split depth and worker count.
pub fn traverse_reduce<T, K, C>(n: u32, config: &TraversalConfig, kernel: K, combine: C) -> Result<T>
where
    T: Send,
    K: Fn(&GapFrame) -> T + Sync,
    C: Fn(T, T) -> T + Sync,
{
    let acc = traverse_fold(
        n,
        config,
        || None,
        |acc: &mut Option<T>, f| {
            let x = kernel(f);
            *acc = Some(match acc.take() {
                Some(a) => combine(a, x),
                None => x,
            });
        },
        |a, b| match (a, b) {
            (Some(a), Some(b)) => Some(combine(a, b)),
            (a, None) => a,
            (None, b) => b,
        },
    )?;
    Ok(acc.expect("every level has at least one gap"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::continuants::{cf_value, neighbor_denominators};
    use num_traits::{One, Zero};

    fn fr(p: u64, q: u64) -> Fraction {
        Fraction::new(p, q).unwrap()
    }

    fn pairs(n: u32) -> Vec<(u64, u64)> {
        gaps(n).unwrap().map(|f| (f.q_left, f.q_right)).collect()
    }

    #[test]
    fn mediant_examples() {
        assert_eq!(mediant(fr(0, 1), fr(1, 1)), fr(1, 2));
        assert_eq!(mediant(fr(0, 1), fr(1, 2)), fr(1, 3));
        assert_eq!(mediant(fr(1, 2), fr(1, 1)), fr(2, 3));
    }

    #[test]
    fn fraction_validation() {
        assert_eq!(fr(2, 4), fr(1, 2));
        assert!(Fraction::new(3, 2).is_err());
        assert!(Fraction::new(0, 0).is_err());
        assert!(fr(1, 3) < fr(1, 2));
    }

    #[test]
    fn level_examples() {
        assert_eq!(level(1, false).unwrap(), vec![fr(0, 1), fr(1, 1)]);
        assert_eq!(level(2, false).unwrap(), vec![fr(0, 1), fr(1, 2), fr(1, 1)]);
        assert_eq!(
            level(3, false).unwrap(),
            vec![fr(0, 1), fr(1, 3), fr(1, 2), fr(2, 3), fr(1, 1)]
        );
        assert!(level(0, false).is_err());
        assert!(matches!(level(25, false), Err(Error::GuardExceeded { .. })));
    }

    #[test]
    fn level_structure() {
        let mut prev = level(1, false).unwrap();
        for n in 2..=12 {
            let cur = level(n, false).unwrap();
            assert_eq!(cur.len(), (1 << (n - 1)) + 1);
            for w in cur.windows(2) {
                assert_eq!(w[1].num * w[0].den - w[0].num * w[1].den, 1);
            }
            // F_{n-1} sits at the even positions of F_n.
            let evens: Vec<_> = cur.iter().step_by(2).copied().collect();
            assert_eq!(evens, prev);
            prev = cur;
        }
    }

    #[test]
    fn gaps_examples() {
        assert_eq!(pairs(1), vec![(1, 1)]);
        assert_eq!(pairs(2), vec![(1, 2), (2, 1)]);
        assert_eq!(pairs(3), vec![(1, 3), (3, 2), (2, 3), (3, 1)]);
        assert!(gaps(0).is_err());
    }

    #[test]
    fn gaps_match_level_denominators() {
        for n in 1..=10 {
            let lv = level(n, false).unwrap();
            let expected: Vec<(u64, u64)> = lv.windows(2).map(|w| (w[0].den, w[1].den)).collect();
            assert_eq!(pairs(n), expected);
        }
    }

    #[test]
    fn q_sets() {
        assert_eq!(brocot_fractions(2, false).unwrap(), vec![fr(1, 2)]);
        assert_eq!(brocot_fractions(3, false).unwrap(), vec![fr(1, 3), fr(2, 3)]);
        assert!(brocot_fractions(1, false).is_err());
        for n in 2..=12 {
            let q = brocot_fractions(n, false).unwrap();
            assert_eq!(q.len(), 1 << (n - 2));
            assert!(q.iter().all(|&x| brocot_order(x).unwrap() == n as u64));
        }
    }

    #[test]
    fn cf_examples() {
        let parts = |x| cf_of_fraction(x).unwrap().into_parts();
        assert_eq!(parts(fr(1, 2)), vec![2]);
        assert_eq!(parts(fr(2, 3)), vec![1, 2]);
        assert_eq!(parts(fr(3, 7)), vec![2, 3]);
        assert_eq!(brocot_order(fr(1, 4)).unwrap(), 4);
        assert!(matches!(
            cf_of_fraction(fr(0, 1)),
            Err(Error::NoCanonicalExpansion(_))
        ));
        assert!(brocot_order(fr(1, 1)).is_err());
    }

    #[test]
    fn cf_roundtrip_and_neighbours() {
        for n in 2..=14 {
            let lv = level(n, false).unwrap();
            for i in (1..lv.len()).step_by(2) {
                let x = lv[i];
                let a = cf_of_fraction(x).unwrap();
                assert_eq!(cf_value(&a), x.to_rational());
                let t = neighbor_denominators(&a).unwrap();
                let mut got = [lv[i - 1].den, lv[i + 1].den];
                let mut want = [
                    u64::try_from(&t.q_minus).unwrap(),
                    u64::try_from(&t.q_plus).unwrap(),
                ];
                got.sort();
                want.sort();
                assert_eq!(got, want, "{x}");
            }
        }
    }

    #[test]
    fn traverse_examples() {
        let cfg = TraversalConfig::default().clamped(9);
        let total = traverse_reduce(10, &cfg, |f| f.gap_length(), |a, b| a + b).unwrap();
        assert!(total.is_one());
        let count = traverse_reduce(7, &TraversalConfig::default().clamped(6), |_| 1u64, |a, b| a + b)
            .unwrap();
        assert_eq!(count, 64);
        let s = traverse_reduce(
            3,
            &TraversalConfig::default().clamped(2),
            |f| ((f.q_left * f.q_right) as f64).powi(-2),
            |a, b| a + b,
        )
        .unwrap();
        assert!((s - 5.0 / 18.0).abs() < 1e-15);
    }

    #[test]
    fn split_depth_must_fit() {
        let cfg = TraversalConfig {
            split_depth: 3,
            workers: 1,
        };
        assert!(traverse_reduce(3, &cfg, |_| 1u64, |a, b| a + b).is_err());
        assert!(traverse_reduce(4, &cfg, |_| 1u64, |a, b| a + b).is_ok());
    }

    #[test]
    fn exact_fold_independent_of_split_and_workers() {
        let reference = gaps(11)
            .unwrap()
            .fold(BigRational::zero(), |acc, f| acc + f.gap_length().pow(2));
        for split in 0..=10 {
            for workers in [1, 3] {
                let cfg = TraversalConfig {
                    split_depth: split,
                    workers,
                };
                let v = traverse_reduce(11, &cfg, |f| f.gap_length().pow(2), |a, b| a + b).unwrap();
                assert_eq!(v, reference);
            }
        }
    }

    #[test]
    fn levels_match_single_calls_bitwise() {
        let cfg = TraversalConfig {
            split_depth: 4,
            workers: 2,
        };
        let kernel = |acc: &mut CompensatedSum, f: &GapFrame| {
            acc.add(((f.q_left as f64) * (f.q_right as f64)).powf(-1.5))
        };
        let all = traverse_levels(0, 12, &cfg, CompensatedSum::new, kernel, CompensatedSum::merge)
            .unwrap();
        for d in 0..=12u32 {
            let single = traverse_fold(
                d + 1,
                &cfg.clamped(d),
                CompensatedSum::new,
                kernel,
                CompensatedSum::merge,
            )
            .unwrap();
            assert_eq!(all[d as usize].value().to_bits(), single.value().to_bits(), "depth {d}");
        }
    }

    #[test]
    fn level_stats_examples() {
        let s = level_stats(4, &TraversalConfig::default()).unwrap();
        assert_eq!(s.count_fractions, 9);
        assert_eq!(s.count_gaps, 8);
        assert_eq!(s.max_gap, BigRational::new(1.into(), 4.into()));
        assert_eq!(s.min_gap, BigRational::new(1.into(), 15.into()));
    }

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let mut s = CompensatedSum::new();
        for x in [1.0, 1e100, 1.0, -1e100] {
            s.add(x);
        }
        assert_eq!(s.value(), 2.0);
    }
}
