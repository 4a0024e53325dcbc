//! Mixed-radix arithmetic for a bounded Vilenkin group truncated at a finite
//! resolution.
//!
//! A [`RadixSystem`] stores the radices `m_0..m_{A-1}` together with the
//! generalized number system `M_0 = 1`, `M_{k+1} = m_k M_k`. Grid index `i`
//! of a function stored at resolution `A` corresponds to the group point whose
//! coordinates are the digits of `i`, with `x_0` varying fastest.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Result, VilenkinError};

/// The radix sequence of a bounded Vilenkin group, truncated to `A` factors.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RadixSystem {
    radices: Vec<u32>,
    cumulative: Vec<u64>,
    /// Repeating pattern the radices were generated from; used to extend the
    /// system past its resolution.
    pattern: Vec<u32>,
}

impl RadixSystem {
    /// Builds a system from an explicit list of radices.
    pub fn new(radices: Vec<u32>) -> Result<Self> {
        let pattern = radices.clone();
        Self::build(radices, pattern)
    }

    /// Repeats `pattern` cyclically until `resolution` radices are stored.
    pub fn from_cycle(pattern: &[u32], resolution: usize) -> Result<Self> {
        if pattern.is_empty() {
            return Err(VilenkinError::RadixSpec {
                spec: String::new(),
                reason: "empty radix pattern".into(),
            });
        }
        let radices = pattern.iter().copied().cycle().take(resolution).collect();
        Self::build(radices, pattern.to_vec())
    }

    /// The Walsh-Paley case `m ≡ 2`.
    pub fn dyadic(resolution: usize) -> Result<Self> {
        Self::from_cycle(&[2], resolution)
    }

    /// Parses `"2"` (constant) or `"2,3,4"` (repeating cycle).
    pub fn parse(spec: &str, resolution: usize) -> Result<Self> {
        let pattern = spec
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<u32>()
                    .map_err(|e| VilenkinError::RadixSpec {
                        spec: spec.to_string(),
                        reason: e.to_string(),
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_cycle(&pattern, resolution)
    }

    fn build(radices: Vec<u32>, pattern: Vec<u32>) -> Result<Self> {
        for (position, &radix) in pattern.iter().chain(radices.iter()).enumerate() {
            if radix < 2 {
                return Err(VilenkinError::RadixTooSmall {
                    position: position % pattern.len().max(1),
                    radix: radix as u64,
                });
            }
        }
        let mut cumulative = Vec::with_capacity(radices.len() + 1);
        cumulative.push(1u64);
        for (k, &m) in radices.iter().enumerate() {
            let next = cumulative[k]
                .checked_mul(m as u64)
                .ok_or(VilenkinError::GridTooLarge {
                    resolution: k + 1,
                    cap: u64::MAX,
                })?;
            cumulative.push(next);
        }
        Ok(Self {
            radices,
            cumulative,
            pattern,
        })
    }

    /// Same radix pattern at a different resolution.
    pub fn with_resolution(&self, resolution: usize) -> Result<Self> {
        Self::from_cycle(&self.pattern, resolution)
    }

    /// Resolution `A`: number of stored radices.
    pub fn resolution(&self) -> usize {
        self.radices.len()
    }

    /// `M_A`, the number of grid points.
    pub fn size(&self) -> u64 {
        self.cumulative[self.radices.len()]
    }

    /// `M_A` as an index bound.
    pub fn len(&self) -> usize {
        self.size() as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn radix(&self, k: usize) -> u32 {
        self.radices[k]
    }

    pub fn radices(&self) -> &[u32] {
        &self.radices
    }

    pub fn pattern(&self) -> &[u32] {
        &self.pattern
    }

    /// `M_k` for `0 <= k <= A`.
    pub fn m_pow(&self, k: usize) -> u64 {
        self.cumulative[k]
    }

    pub fn cumulative(&self) -> &[u64] {
        &self.cumulative
    }

    /// `M = max m_k` over the stored prefix (or the pattern when `A = 0`).
    pub fn bound(&self) -> u32 {
        self.radices
            .iter()
            .chain(self.pattern.iter())
            .copied()
            .max()
            .unwrap_or(2)
    }

    /// Least common multiple of the radices.
    pub fn lcm(&self) -> u64 {
        self.pattern
            .iter()
            .chain(self.radices.iter())
            .fold(1u64, |acc, &m| lcm(acc, m as u64))
    }

    /// Digit `x_j` of grid index `i`.
    #[inline]
    pub fn digit(&self, i: u64, j: usize) -> u32 {
        ((i / self.cumulative[j]) % self.radices[j] as u64) as u32
    }

    pub fn decompose(&self, value: u64) -> Result<VIndex> {
        VIndex::new(value, self)
    }

    pub fn point(&self, index: u64) -> Result<GroupPoint> {
        GroupPoint::from_index(index, self)
    }

    /// Cardinality of `{n : M_k <= n <= M_{k+1}, n ∈ N_{n0}}`, by enumeration.
    pub fn count_n0_band(&self, k: usize) -> Result<u64> {
        Ok(self.n0_band_members(k)?.len() as u64)
    }

    /// Members of `N_{n0}` in the band `[M_k, M_{k+1}]`, in increasing order.
    pub fn n0_band_members(&self, k: usize) -> Result<Vec<u64>> {
        if k == 0 || k >= self.resolution() {
            return Err(VilenkinError::Precondition(format!(
                "band rank must satisfy 1 <= k < A = {}, got {k}",
                self.resolution()
            )));
        }
        let lo = self.m_pow(k);
        let hi = self.m_pow(k + 1);
        // `hi` itself is `1` followed by zeros and never qualifies, so the
        // enumeration stays below M_A.
        let mut members = Vec::new();
        for n in lo..hi {
            if self.decompose(n)?.is_n0_member() {
                members.push(n);
            }
        }
        Ok(members)
    }

    /// Lower bound constant `c = 1/(m_0 m_k)` for the band count.
    pub fn n0_band_constant(&self, k: usize) -> f64 {
        1.0 / (self.radices[0] as f64 * self.radices[k] as f64)
    }
}

impl fmt::Display for RadixSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pattern: Vec<String> = self.pattern.iter().map(|m| m.to_string()).collect();
        write!(f, "m=({})^, A={}", pattern.join(","), self.resolution())
    }
}

pub(crate) fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

pub(crate) fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

/// A natural number `n < M_A` together with its digit expansion.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VIndex {
    value: u64,
    digits: Vec<u32>,
    /// `|n|`; `None` stands for the order of zero.
    order: Option<usize>,
}

impl VIndex {
    pub fn new(value: u64, sys: &RadixSystem) -> Result<Self> {
        if value >= sys.size() {
            return Err(VilenkinError::OutOfRange {
                value,
                limit: sys.size(),
            });
        }
        let mut rest = value;
        let digits: Vec<u32> = sys
            .radices()
            .iter()
            .map(|&m| {
                let d = (rest % m as u64) as u32;
                rest /= m as u64;
                d
            })
            .collect();
        let order = digits.iter().rposition(|&d| d != 0);
        Ok(Self {
            value,
            digits,
            order,
        })
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn digits(&self) -> &[u32] {
        &self.digits
    }

    pub fn digit(&self, j: usize) -> u32 {
        self.digits.get(j).copied().unwrap_or(0)
    }

    pub fn order(&self) -> Option<usize> {
        self.order
    }

    pub fn recompose(&self, sys: &RadixSystem) -> u64 {
        self.digits
            .iter()
            .enumerate()
            .map(|(j, &d)| d as u64 * sys.m_pow(j))
            .sum()
    }

    /// `n ∈ N_{n0}`: the lowest and the highest nonzero-position digits both
    /// equal one. Zero is never a member.
    pub fn is_n0_member(&self) -> bool {
        match self.order {
            Some(top) => self.digits[0] == 1 && self.digits[top] == 1,
            None => false,
        }
    }
}

/// A point of the group at resolution `A`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupPoint {
    coords: Vec<u32>,
}

impl GroupPoint {
    pub fn new(coords: Vec<u32>, sys: &RadixSystem) -> Result<Self> {
        if coords.len() != sys.resolution() {
            return Err(VilenkinError::LengthMismatch {
                expected: sys.resolution(),
                got: coords.len(),
            });
        }
        for (j, &x) in coords.iter().enumerate() {
            if x >= sys.radix(j) {
                return Err(VilenkinError::OutOfRange {
                    value: x as u64,
                    limit: sys.radix(j) as u64,
                });
            }
        }
        Ok(Self { coords })
    }

    pub fn zero(sys: &RadixSystem) -> Self {
        Self {
            coords: vec![0; sys.resolution()],
        }
    }

    pub fn from_index(index: u64, sys: &RadixSystem) -> Result<Self> {
        let n = VIndex::new(index, sys)?;
        Ok(Self { coords: n.digits })
    }

    pub fn coords(&self) -> &[u32] {
        &self.coords
    }

    pub fn coord(&self, j: usize) -> u32 {
        self.coords[j]
    }

    /// Grid index of this point.
    pub fn index(&self, sys: &RadixSystem) -> u64 {
        self.coords
            .iter()
            .enumerate()
            .map(|(j, &x)| x as u64 * sys.m_pow(j))
            .sum()
    }

    /// Largest `n <= A` with `x ∈ I_n`, i.e. the number of leading zero
    /// coordinates.
    pub fn level(&self) -> usize {
        self.coords
            .iter()
            .position(|&x| x != 0)
            .unwrap_or(self.coords.len())
    }
}

/// The rank-`n` coset `I_n(x)`: points agreeing with the anchor on the first
/// `n` coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coset {
    rank: usize,
    anchor: GroupPoint,
}

impl Coset {
    pub fn new(rank: usize, anchor: GroupPoint, sys: &RadixSystem) -> Result<Self> {
        if rank > sys.resolution() {
            return Err(VilenkinError::RankOutOfRange {
                rank,
                resolution: sys.resolution(),
            });
        }
        Ok(Self { rank, anchor })
    }

    /// `I_n = I_n(0)`.
    pub fn at_origin(rank: usize, sys: &RadixSystem) -> Result<Self> {
        Self::new(rank, GroupPoint::zero(sys), sys)
    }

    /// The whole group `I_0 = G_m`.
    pub fn whole(sys: &RadixSystem) -> Self {
        Self {
            rank: 0,
            anchor: GroupPoint::zero(sys),
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn anchor(&self) -> &GroupPoint {
        &self.anchor
    }

    /// Haar measure `1/M_n`.
    pub fn measure(&self, sys: &RadixSystem) -> f64 {
        1.0 / sys.m_pow(self.rank) as f64
    }

    /// Residue class `i mod M_n` shared by every grid index in the coset.
    pub fn residue(&self, sys: &RadixSystem) -> u64 {
        self.anchor.index(sys) % sys.m_pow(self.rank)
    }

    pub fn contains_index(&self, index: u64, sys: &RadixSystem) -> bool {
        let modulus = sys.m_pow(self.rank);
        index % modulus == self.residue(sys)
    }

    pub fn contains(&self, x: &GroupPoint) -> bool {
        self.anchor.coords[..self.rank] == x.coords[..self.rank]
    }

    /// Grid indices of the coset, increasing.
    pub fn indices(&self, sys: &RadixSystem) -> impl Iterator<Item = u64> {
        let step = sys.m_pow(self.rank);
        let start = self.residue(sys);
        (start..sys.size()).step_by(step as usize)
    }

    pub fn enumerate_points(&self, sys: &RadixSystem) -> Vec<GroupPoint> {
        self.indices(sys)
            .map(|i| GroupPoint::from_index(i, sys).expect("coset index is inside the grid"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cumulative_products() {
        let sys = RadixSystem::parse("2,3,4", 5).unwrap();
        assert_eq!(sys.radices(), &[2, 3, 4, 2, 3]);
        assert_eq!(sys.cumulative(), &[1, 2, 6, 24, 48, 144]);
        assert_eq!(sys.bound(), 4);
        assert_eq!(sys.lcm(), 12);
    }

    #[test]
    fn rejects_small_radix() {
        assert!(matches!(
            RadixSystem::parse("2,1", 4),
            Err(VilenkinError::RadixTooSmall { .. })
        ));
        assert!(RadixSystem::parse("2,x", 4).is_err());
        assert!(RadixSystem::new(vec![3, 0]).is_err());
    }

    #[test]
    fn decompose_examples() {
        let sys = RadixSystem::new(vec![2, 3, 4]).unwrap();
        let n = sys.decompose(11).unwrap();
        assert_eq!(n.digits(), &[1, 2, 1]);
        assert_eq!(n.order(), Some(2));

        let zero = sys.decompose(0).unwrap();
        assert!(zero.digits().iter().all(|&d| d == 0));
        assert_eq!(zero.order(), None);

        let bin = RadixSystem::dyadic(3).unwrap();
        let seven = bin.decompose(7).unwrap();
        assert_eq!(seven.digits(), &[1, 1, 1]);
        assert_eq!(seven.order(), Some(2));

        assert!(matches!(
            sys.decompose(24),
            Err(VilenkinError::OutOfRange {
                value: 24,
                limit: 24
            })
        ));
    }

    #[test]
    fn n0_membership() {
        let bin = RadixSystem::dyadic(4).unwrap();
        assert!(bin.decompose(7).unwrap().is_n0_member());
        assert!(!bin.decompose(6).unwrap().is_n0_member());
        assert!(bin.decompose(1).unwrap().is_n0_member());
        assert!(!bin.decompose(0).unwrap().is_n0_member());
        let sys = RadixSystem::new(vec![3, 3, 3]).unwrap();
        // digits (1,0,2): top digit is 2
        assert!(!sys.decompose(19).unwrap().is_n0_member());
        // digits (1,2,1)
        assert!(sys.decompose(16).unwrap().is_n0_member());
    }

    #[test]
    fn band_counts_dyadic() {
        let bin = RadixSystem::dyadic(6).unwrap();
        assert_eq!(bin.n0_band_members(3).unwrap(), vec![9, 11, 13, 15]);
        assert_eq!(bin.count_n0_band(1).unwrap(), 1);
        assert_eq!(bin.n0_band_members(1).unwrap(), vec![3]);
        assert!(bin.count_n0_band(0).is_err());
        assert!(bin.count_n0_band(6).is_err());
    }

    #[test]
    fn band_count_lower_bound_and_product_form() {
        for spec in ["2", "3", "2,3,4", "5,2,3"] {
            let sys = RadixSystem::parse(spec, 6).unwrap();
            for k in 1..sys.resolution() {
                let count = sys.count_n0_band(k).unwrap();
                let product: u64 = (1..k).map(|j| sys.radix(j) as u64).product();
                assert_eq!(count, product, "{spec} k={k}");
                let m0 = sys.radix(0) as u64;
                assert!(count * m0 * sys.radix(k) as u64 >= sys.m_pow(k));
            }
        }
    }

    #[test]
    fn coset_enumeration() {
        let sys = RadixSystem::new(vec![2, 3]).unwrap();
        let anchor = GroupPoint::new(vec![1, 0], &sys).unwrap();
        let coset = Coset::new(1, anchor.clone(), &sys).unwrap();
        let pts = coset.enumerate_points(&sys);
        assert_eq!(pts.len(), 3);
        assert!(pts.iter().all(|x| x.coord(0) == 1));

        let full = Coset::new(2, anchor.clone(), &sys).unwrap();
        assert_eq!(full.enumerate_points(&sys), vec![anchor.clone()]);

        let whole = Coset::new(0, anchor, &sys).unwrap();
        assert_eq!(whole.enumerate_points(&sys).len(), 6);
        assert!(Coset::at_origin(3, &sys).is_err());
    }

    #[test]
    fn cosets_partition_grid() {
        let sys = RadixSystem::parse("2,3,4", 4).unwrap();
        for n in 0..=sys.resolution() {
            let mut seen = vec![0u32; sys.len()];
            let mut total_measure = 0.0;
            for r in 0..sys.m_pow(n) {
                let coset = Coset::new(n, sys.point(r).unwrap(), &sys).unwrap();
                let members: Vec<u64> = coset.indices(&sys).collect();
                assert_eq!(members.len() as u64, sys.size() / sys.m_pow(n));
                for i in members {
                    seen[i as usize] += 1;
                }
                total_measure += coset.measure(&sys);
            }
            assert!(seen.iter().all(|&c| c == 1));
            assert!((total_measure - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn point_level() {
        let sys = RadixSystem::dyadic(4).unwrap();
        assert_eq!(sys.point(0).unwrap().level(), 4);
        assert_eq!(sys.point(1).unwrap().level(), 0);
        assert_eq!(sys.point(4).unwrap().level(), 2);
    }

    proptest! {
        #[test]
        fn decompose_round_trip(pattern in prop::collection::vec(2u32..6, 1..4), a in 1usize..7, seed in any::<u64>()) {
            let sys = RadixSystem::from_cycle(&pattern, a).unwrap();
            let v = seed % sys.size();
            let n = sys.decompose(v).unwrap();
            prop_assert_eq!(n.recompose(&sys), v);
            for (j, &d) in n.digits().iter().enumerate() {
                prop_assert!(d < sys.radix(j));
            }
            let point = sys.point(v).unwrap();
            prop_assert_eq!(point.index(&sys), v);
        }
    }
}
