//! Discrete travel-cost distributions over an integer cost grid.
//!
//! [`CostDistribution`] is a sparse histogram of total cost, [`JointDistribution`]
//! keeps one cost per edge of a path so that correlated edges stay correlated.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::ids::{Cost, EdgeId};

/// Mass must sum to one within this tolerance.
pub const MASS_TOLERANCE: f64 = 1e-9;
/// Default cap on distinct support points accepted by [`CostDistribution::new`].
pub const DEFAULT_SUPPORT_CAP: usize = 10_000;
/// Largest tolerated pre-normalization deficit in [`assemble`].
pub const ASSEMBLY_DEFICIT_TOLERANCE: f64 = 1e-6;
/// Additive smoothing applied to the estimate in [`kl_divergence`].
pub const KL_SMOOTHING: f64 = 1e-6;
/// Slack used when comparing CDF values.
pub const CDF_EPSILON: f64 = 1e-12;

/// Non-negative travel-cost budget.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Budget(pub Cost);

impl Budget {
    pub fn value(self) -> Cost {
        self.0
    }
}

/// Histogram over integer costs. Points are sorted by cost, every mass is
/// strictly positive and the masses sum to one.
#[derive(Clone, Debug, PartialEq)]
pub struct CostDistribution {
    points: Vec<(Cost, f64)>,
}

impl CostDistribution {
    /// Builds a distribution from `(cost, probability)` pairs, merging
    /// duplicate costs and dropping zero-mass entries.
    pub fn new<I: IntoIterator<Item = (Cost, f64)>>(pairs: I) -> Result<Self> {
        Self::with_cap(pairs, DEFAULT_SUPPORT_CAP)
    }

    pub fn with_cap<I: IntoIterator<Item = (Cost, f64)>>(pairs: I, cap: usize) -> Result<Self> {
        let mut merged: BTreeMap<Cost, f64> = BTreeMap::new();
        for (c, p) in pairs {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidDistribution(format!("probability {p} at cost {c} is not in [0, 1]")));
            }
            *merged.entry(c).or_insert(0.0) += p;
        }
        merged.retain(|_, p| *p > 0.0);
        if merged.len() > cap {
            return Err(Error::SupportTooLarge { size: merged.len(), cap });
        }
        let total: f64 = merged.values().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("mass sums to {total}, not 1")));
        }
        Ok(Self { points: merged.into_iter().collect() })
    }

    /// Relative frequencies of observed costs.
    pub fn from_samples<I: IntoIterator<Item = Cost>>(samples: I) -> Result<Self> {
        let mut counts: BTreeMap<Cost, u64> = BTreeMap::new();
        let mut n = 0u64;
        for c in samples {
            *counts.entry(c).or_insert(0) += 1;
            n += 1;
        }
        if n == 0 {
            return Err(Error::InvalidDistribution("no samples".into()));
        }
        Self::new(counts.into_iter().map(|(c, k)| (c, k as f64 / n as f64)))
    }

    /// One-point distribution.
    pub fn point(cost: Cost) -> Self {
        Self { points: vec![(cost, 1.0)] }
    }

    /// Builds from already-sorted positive mass without validation.
    pub(crate) fn from_sorted_unchecked(points: Vec<(Cost, f64)>) -> Self {
        debug_assert!(points.windows(2).all(|w| w[0].0 < w[1].0));
        Self { points }
    }

    pub fn points(&self) -> &[(Cost, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn min_cost(&self) -> Cost {
        self.points[0].0
    }

    pub fn max_cost(&self) -> Cost {
        self.points[self.points.len() - 1].0
    }

    pub fn mass(&self, cost: Cost) -> f64 {
        match self.points.binary_search_by_key(&cost, |&(c, _)| c) {
            Ok(i) => self.points[i].1,
            Err(_) => 0.0,
        }
    }

    pub fn total_mass(&self) -> f64 {
        compensated_sum(self.points.iter().map(|&(_, p)| p))
    }

    pub fn mean(&self) -> f64 {
        compensated_sum(self.points.iter().map(|&(c, p)| c as f64 * p))
    }

    /// P(cost <= x).
    pub fn cdf(&self, x: Cost) -> f64 {
        compensated_sum(self.points.iter().take_while(|&&(c, _)| c <= x).map(|&(_, p)| p))
    }

    /// Shift every support point by a constant.
    pub fn shift(&self, by: Cost) -> Self {
        Self { points: self.points.iter().map(|&(c, p)| (c + by, p)).collect() }
    }

    /// Total-variation distance to another distribution.
    pub fn total_variation(&self, other: &Self) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        let (a, b) = (&self.points, &other.points);
        while i < a.len() || j < b.len() {
            match (a.get(i), b.get(j)) {
                (Some(&(ca, pa)), Some(&(cb, pb))) if ca == cb => {
                    acc += (pa - pb).abs();
                    i += 1;
                    j += 1;
                }
                (Some(&(ca, pa)), Some(&(cb, _))) if ca < cb => {
                    acc += pa;
                    i += 1;
                }
                (Some(&(ca, pa)), None) => {
                    let _ = ca;
                    acc += pa;
                    i += 1;
                }
                (_, Some(&(_, pb))) => {
                    acc += pb;
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        acc / 2.0
    }
}

/// Sum of two independent costs.
pub fn convolve(a: &CostDistribution, b: &CostDistribution) -> CostDistribution {
    let lo = a.min_cost() + b.min_cost();
    let span = (a.max_cost() + b.max_cost() - lo) as usize + 1;
    let mut dense = vec![0.0f64; span];
    for &(ca, pa) in &a.points {
        for &(cb, pb) in &b.points {
            dense[(ca + cb - lo) as usize] += pa * pb;
        }
    }
    let points = dense.into_iter().enumerate().filter(|&(_, p)| p > 0.0).map(|(i, p)| (lo + i as Cost, p)).collect();
    CostDistribution::from_sorted_unchecked(points)
}

/// Neumaier summation; keeps sums such as 0.5 + 0.2 + 0.2 at the correctly
/// rounded 0.9.
pub(crate) fn compensated_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// P(cost <= budget).
pub fn prob_within(d: &CostDistribution, budget: Budget) -> f64 {
    d.cdf(budget.0).min(1.0)
}

/// First-order stochastic dominance: `a`'s CDF is nowhere below `b`'s and
/// strictly above it somewhere.
pub fn dominates(a: &CostDistribution, b: &CostDistribution) -> bool {
    matches!(compare_cdfs(a, b), CdfOrder::Dominates)
}

/// Both CDFs agree everywhere (within [`CDF_EPSILON`]).
pub fn cdf_equal(a: &CostDistribution, b: &CostDistribution) -> bool {
    matches!(compare_cdfs(a, b), CdfOrder::Equal)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CdfOrder {
    Equal,
    Dominates,
    Dominated,
    Incomparable,
}

pub fn compare_cdfs(a: &CostDistribution, b: &CostDistribution) -> CdfOrder {
    let (mut i, mut j) = (0, 0);
    let (mut fa, mut fb) = (0.0, 0.0);
    let (mut above, mut below) = (false, false);
    while i < a.points.len() || j < b.points.len() {
        let ca = a.points.get(i).map(|p| p.0).unwrap_or(Cost::MAX);
        let cb = b.points.get(j).map(|p| p.0).unwrap_or(Cost::MAX);
        let x = ca.min(cb);
        if ca == x {
            fa += a.points[i].1;
            i += 1;
        }
        if cb == x {
            fb += b.points[j].1;
            j += 1;
        }
        if fa > fb + CDF_EPSILON {
            above = true;
        } else if fb > fa + CDF_EPSILON {
            below = true;
        }
        if above && below {
            return CdfOrder::Incomparable;
        }
    }
    match (above, below) {
        (false, false) => CdfOrder::Equal,
        (true, false) => CdfOrder::Dominates,
        (false, true) => CdfOrder::Dominated,
        (true, true) => CdfOrder::Incomparable,
    }
}

/// KL(truth || estimate) with the default additive smoothing.
pub fn kl_divergence(truth: &CostDistribution, estimate: &CostDistribution) -> Result<f64> {
    kl_divergence_smoothed(truth, estimate, KL_SMOOTHING)
}

/// KL(truth || estimate) after adding `epsilon` to the estimate over the
/// union support and renormalizing.
pub fn kl_divergence_smoothed(truth: &CostDistribution, estimate: &CostDistribution, epsilon: f64) -> Result<f64> {
    let mut union: Vec<Cost> = truth.points.iter().chain(&estimate.points).map(|p| p.0).collect();
    union.sort_unstable();
    union.dedup();
    let norm = 1.0 + epsilon * union.len() as f64;
    let mut kl = 0.0;
    for &(c, p) in &truth.points {
        let q = (estimate.mass(c) + epsilon) / norm;
        if q <= 0.0 {
            return Err(Error::SupportMismatch(c));
        }
        kl += p * (p / q).ln();
    }
    Ok(kl.max(0.0))
}

/// Probability mass over per-edge cost vectors of a path.
#[derive(Clone, Debug, PartialEq)]
pub struct JointDistribution {
    edges: Vec<EdgeId>,
    mass: BTreeMap<Vec<Cost>, f64>,
}

impl JointDistribution {
    pub fn new<I: IntoIterator<Item = (Vec<Cost>, f64)>>(edges: Vec<EdgeId>, vectors: I) -> Result<Self> {
        if edges.is_empty() {
            return Err(Error::InvalidDistribution("joint over zero edges".into()));
        }
        let mut mass: BTreeMap<Vec<Cost>, f64> = BTreeMap::new();
        for (v, p) in vectors {
            if v.len() != edges.len() {
                return Err(Error::InvalidDistribution(format!("cost vector of length {} over {} edges", v.len(), edges.len())));
            }
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidDistribution(format!("probability {p} is negative")));
            }
            *mass.entry(v).or_insert(0.0) += p;
        }
        mass.retain(|_, p| *p > 0.0);
        let total: f64 = mass.values().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("joint mass sums to {total}, not 1")));
        }
        Ok(Self { edges, mass })
    }

    /// Relative frequencies of observed per-edge cost vectors.
    pub fn from_samples<'a, I: IntoIterator<Item = &'a [Cost]>>(edges: Vec<EdgeId>, samples: I) -> Result<Self> {
        let mut counts: BTreeMap<Vec<Cost>, u64> = BTreeMap::new();
        let mut n = 0u64;
        for s in samples {
            *counts.entry(s.to_vec()).or_insert(0) += 1;
            n += 1;
        }
        if n == 0 {
            return Err(Error::InvalidDistribution("no samples".into()));
        }
        Self::new(edges, counts.into_iter().map(|(v, k)| (v, k as f64 / n as f64)))
    }

    /// Lifts a single-edge cost distribution.
    pub fn single(edge: EdgeId, d: &CostDistribution) -> Self {
        Self { edges: vec![edge], mass: d.points.iter().map(|&(c, p)| (vec![c], p)).collect() }
    }

    pub fn edges(&self) -> &[EdgeId] {
        &self.edges
    }

    pub fn vectors(&self) -> impl Iterator<Item = (&[Cost], f64)> {
        self.mass.iter().map(|(v, &p)| (v.as_slice(), p))
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.values().sum()
    }
}

/// Distribution of the summed cost of a joint.
pub fn total_cost(j: &JointDistribution) -> CostDistribution {
    let mut acc: BTreeMap<Cost, f64> = BTreeMap::new();
    for (v, &p) in &j.mass {
        *acc.entry(v.iter().sum()).or_insert(0.0) += p;
    }
    CostDistribution::from_sorted_unchecked(acc.into_iter().collect())
}

/// Marginal of `j` over a contiguous run of its edges.
pub fn marginalize(j: &JointDistribution, subset: &[EdgeId]) -> Result<JointDistribution> {
    let start = find_subsequence(&j.edges, subset).ok_or(Error::NotSubPath)?;
    Ok(marginal_at(j, start, subset.len()))
}

fn marginal_at(j: &JointDistribution, start: usize, len: usize) -> JointDistribution {
    let mut mass: BTreeMap<Vec<Cost>, f64> = BTreeMap::new();
    for (v, &p) in &j.mass {
        *mass.entry(v[start..start + len].to_vec()).or_insert(0.0) += p;
    }
    JointDistribution { edges: j.edges[start..start + len].to_vec(), mass }
}

fn find_subsequence(haystack: &[EdgeId], needle: &[EdgeId]) -> Option<usize> {
    if needle.is_empty() || needle.len() > haystack.len() {
        return None;
    }
    haystack.windows(needle.len()).position(|w| w == needle)
}

/// Number of edges by which the suffix of `a` overlaps the prefix of `b`.
/// `Ok(0)` means the sequences share no edge.
pub fn overlap_len(a: &[EdgeId], b: &[EdgeId]) -> Result<usize> {
    let Some(pos) = a.iter().position(|e| *e == b[0]) else {
        if b.iter().any(|e| a.contains(e)) {
            return Err(Error::NotAssemblable("sequences share edges out of order".into()));
        }
        return Ok(0);
    };
    let k = a.len() - pos;
    if k >= b.len() || a[pos..] != b[..k] {
        return Err(Error::NotAssemblable("suffix of the first path is not a proper prefix of the second".into()));
    }
    if b[k..].iter().any(|e| a.contains(e)) {
        return Err(Error::NotAssemblable("assembled path repeats an edge".into()));
    }
    Ok(k)
}

/// Chains two joints that overlap on a suffix/prefix (or are adjacent).
///
/// With a non-empty overlap `o` the mass of a combined vector is
/// `j1(v1) * j2(v2) / m2(o)` where `m2` is `j2`'s marginal on the overlap.
/// If `o` carries no mass under `j2` the remainder is drawn from `j2`'s
/// marginal on its non-overlapping edges. With no overlap this reduces to
/// the independent product.
pub fn assemble(j1: &JointDistribution, j2: &JointDistribution) -> Result<JointDistribution> {
    let k = overlap_len(&j1.edges, &j2.edges)?;
    let mut edges = j1.edges.clone();
    edges.extend_from_slice(&j2.edges[k..]);

    // Rest-of-j2 conditional tables keyed by overlap value.
    let mut by_prefix: HashMap<&[Cost], Vec<(&[Cost], f64)>> = HashMap::new();
    let mut prefix_mass: HashMap<&[Cost], f64> = HashMap::new();
    let mut rest_marginal: BTreeMap<&[Cost], f64> = BTreeMap::new();
    for (v, &p) in &j2.mass {
        let (head, rest) = v.split_at(k);
        by_prefix.entry(head).or_default().push((rest, p));
        *prefix_mass.entry(head).or_insert(0.0) += p;
        *rest_marginal.entry(rest).or_insert(0.0) += p;
    }

    let mut mass: BTreeMap<Vec<Cost>, f64> = BTreeMap::new();
    let n1 = j1.edges.len();
    for (v1, &p1) in &j1.mass {
        let o = &v1[n1 - k..];
        let mut push = |rest: &[Cost], w: f64| {
            let mut v = Vec::with_capacity(edges.len());
            v.extend_from_slice(v1);
            v.extend_from_slice(rest);
            *mass.entry(v).or_insert(0.0) += p1 * w;
        };
        match (by_prefix.get(o), prefix_mass.get(o)) {
            (Some(rows), Some(&m)) if m > 0.0 => {
                for &(rest, p2) in rows {
                    push(rest, p2 / m);
                }
            }
            _ => {
                for (&rest, &p2) in &rest_marginal {
                    push(rest, p2);
                }
            }
        }
    }
    let total: f64 = mass.values().sum();
    let deficit = (1.0 - total).abs();
    if deficit > ASSEMBLY_DEFICIT_TOLERANCE {
        return Err(Error::AssemblyDeficit(deficit));
    }
    for p in mass.values_mut() {
        *p /= total;
    }
    Ok(JointDistribution { edges, mass })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(pairs: &[(Cost, f64)]) -> CostDistribution {
        CostDistribution::new(pairs.iter().copied()).unwrap()
    }

    fn e(i: u32) -> EdgeId {
        EdgeId(i)
    }

    fn assert_close(a: &CostDistribution, b: &CostDistribution) {
        assert!(a.total_variation(b) < 1e-12, "{a:?} vs {b:?}");
    }

    /// Enumerates every pair of support points; independent of the dense
    /// accumulator used by `convolve`.
    fn convolve_by_enumeration(a: &CostDistribution, b: &CostDistribution) -> CostDistribution {
        let mut m: BTreeMap<Cost, f64> = BTreeMap::new();
        for &(x, p) in a.points() {
            for &(y, q) in b.points() {
                *m.entry(x + y).or_default() += p * q;
            }
        }
        CostDistribution::new(m).unwrap()
    }

    #[test]
    fn convolve_examples() {
        let a = d(&[(10, 0.8), (15, 0.2)]);
        let expected = convolve_by_enumeration(&a, &a);
        assert_close(&expected, &d(&[(20, 0.64), (25, 0.32), (30, 0.04)]));
        assert_close(&convolve(&a, &a), &expected);

        assert_close(&convolve(&CostDistribution::point(0), &a), &a);

        let b = d(&[(8, 0.9), (10, 0.1)]);
        assert_close(&convolve(&b, &CostDistribution::point(5)), &d(&[(13, 0.9), (15, 0.1)]));
    }

    #[test]
    fn rejects_bad_mass_and_large_support() {
        assert!(CostDistribution::new([(1, 0.5)]).is_err());
        assert!(CostDistribution::new([(1, -0.5), (2, 1.5)]).is_err());
        let wide = (0..20u32).map(|c| (c, 0.05));
        assert!(matches!(CostDistribution::with_cap(wide, 10), Err(Error::SupportTooLarge { size: 20, cap: 10 })));
    }

    #[test]
    fn total_cost_examples() {
        let j = JointDistribution::new(vec![e(1), e(2)], [(vec![10, 10], 0.8), (vec![15, 15], 0.2)]).unwrap();
        assert_eq!(total_cost(&j), d(&[(20, 0.8), (30, 0.2)]));

        let single = JointDistribution::new(vec![e(1)], [(vec![7], 1.0)]).unwrap();
        assert_eq!(total_cost(&single), CostDistribution::point(7));

        let collide = JointDistribution::new(vec![e(1), e(2)], [(vec![10, 15], 0.5), (vec![15, 10], 0.5)]).unwrap();
        assert_eq!(total_cost(&collide), CostDistribution::point(25));
    }

    #[test]
    fn marginalize_examples() {
        let j = JointDistribution::new(vec![e(1), e(2)], [(vec![10, 10], 0.8), (vec![15, 15], 0.2)]).unwrap();
        let m = marginalize(&j, &[e(2)]).unwrap();
        assert_eq!(m, JointDistribution::new(vec![e(2)], [(vec![10], 0.8), (vec![15], 0.2)]).unwrap());
        assert_eq!(marginalize(&j, &[e(1), e(2)]).unwrap(), j);
        assert!(matches!(marginalize(&j, &[e(2), e(1)]), Err(Error::NotSubPath)));
        assert!(matches!(marginalize(&j, &[e(3)]), Err(Error::NotSubPath)));
    }

    #[test]
    fn assemble_chain_keeps_correlation() {
        let j12 = JointDistribution::new(vec![e(1), e(2)], [(vec![10, 10], 0.8), (vec![15, 15], 0.2)]).unwrap();
        let j23 = JointDistribution::new(vec![e(2), e(3)], [(vec![10, 10], 0.8), (vec![15, 15], 0.2)]).unwrap();
        let out = assemble(&j12, &j23).unwrap();
        let expected = JointDistribution::new(vec![e(1), e(2), e(3)], [(vec![10, 10, 10], 0.8), (vec![15, 15, 15], 0.2)]).unwrap();
        assert_eq!(out.edges(), expected.edges());
        for ((va, pa), (vb, pb)) in out.vectors().zip(expected.vectors()) {
            assert_eq!(va, vb);
            assert!((pa - pb).abs() < 1e-12);
        }
    }

    #[test]
    fn assemble_matches_hand_evaluated_division() {
        // p1 over (e1,e4), p2 over (e4,e9), overlap on e4.
        let p1 = JointDistribution::new(vec![e(1), e(4)], [(vec![8, 8], 0.6), (vec![8, 10], 0.3), (vec![10, 10], 0.1)]).unwrap();
        let p2 = JointDistribution::new(vec![e(4), e(9)], [(vec![8, 5], 0.5), (vec![8, 7], 0.2), (vec![10, 9], 0.3)]).unwrap();
        // W_J(<e4>) taken from p2: {8: 0.7, 10: 0.3}.
        // (8,8,5): .6*.5/.7, (8,8,7): .6*.2/.7, (8,10,9): .3*.3/.3, (10,10,9): .1*.3/.3
        let expected_total = d(&[(21, 0.6 * 0.5 / 0.7), (23, 0.6 * 0.2 / 0.7), (27, 0.3), (29, 0.1)]);
        let out = assemble(&p1, &p2).unwrap();
        assert_close(&total_cost(&out), &expected_total);
    }

    #[test]
    fn assemble_without_overlap_is_independent() {
        let a = d(&[(3, 0.25), (4, 0.75)]);
        let b = d(&[(1, 0.5), (6, 0.5)]);
        let ja = JointDistribution::single(e(1), &a);
        let jb = JointDistribution::single(e(2), &b);
        let out = assemble(&ja, &jb).unwrap();
        assert_eq!(out.len(), 4);
        assert_close(&total_cost(&out), &convolve(&a, &b));
    }

    #[test]
    fn assemble_rejects_misaligned_sequences() {
        let ja = JointDistribution::new(vec![e(1), e(2)], [(vec![1, 1], 1.0)]).unwrap();
        let jb = JointDistribution::new(vec![e(3), e(1)], [(vec![1, 1], 1.0)]).unwrap();
        assert!(matches!(assemble(&ja, &jb), Err(Error::NotAssemblable(_))));
        let contained = JointDistribution::new(vec![e(2)], [(vec![1], 1.0)]).unwrap();
        assert!(matches!(assemble(&ja, &contained), Err(Error::NotAssemblable(_))));
    }

    #[test]
    fn dominance_examples() {
        let pa = d(&[(40, 0.5), (50, 0.2), (60, 0.2), (70, 0.1)]);
        let pb = d(&[(50, 0.8), (60, 0.2)]);
        assert!(!dominates(&pb, &pa));
        assert!(!dominates(&pa, &pb));
        assert!(dominates(&d(&[(20, 1.0)]), &d(&[(20, 0.8), (30, 0.2)])));
        assert!(!dominates(&pa, &pa));
        assert!(cdf_equal(&pa, &pa));
    }

    #[test]
    fn prob_within_examples() {
        let pa = d(&[(40, 0.5), (50, 0.2), (60, 0.2), (70, 0.1)]);
        let pb = d(&[(50, 0.8), (60, 0.2)]);
        assert!((prob_within(&pa, Budget(60)) - 0.9).abs() < 1e-12);
        assert_eq!(prob_within(&pb, Budget(60)), 1.0);
        assert_eq!(prob_within(&pb, Budget(0)), 0.0);
        assert_eq!(prob_within(&CostDistribution::point(0), Budget(0)), 1.0);
    }

    #[test]
    fn kl_examples() {
        let a = d(&[(20, 0.8), (30, 0.2)]);
        assert!(kl_divergence(&a, &a).unwrap() < 1e-10);
        let ln2 = kl_divergence(&d(&[(20, 1.0)]), &d(&[(20, 0.5), (30, 0.5)])).unwrap();
        assert!((ln2 - 2f64.ln()).abs() < 1e-5);
        let direct = 0.8 * 4f64.ln() + 0.2 * 0.25f64.ln();
        let k = kl_divergence(&a, &d(&[(20, 0.2), (30, 0.8)])).unwrap();
        assert!((k - direct).abs() < 1e-5);
        assert!((direct - 0.8318).abs() < 1e-4);
    }

    #[test]
    fn kl_without_smoothing_reports_support_mismatch() {
        let truth = d(&[(20, 0.5), (30, 0.5)]);
        let est = d(&[(20, 1.0)]);
        assert!(matches!(kl_divergence_smoothed(&truth, &est, 0.0), Err(Error::SupportMismatch(30))));
        assert!(kl_divergence(&truth, &est).unwrap() > 1.0);
    }
}
