//! Dirichlet kernels, partial sums and conditional expectations.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Result, VilenkinError};
use crate::radix::RadixSystem;
use crate::transform::{
    character, fast_transform, inverse_transform, rademacher, CharacterSweep, GridFunction,
    Spectrum,
};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Running sums `D_0 ≡ 0, D_1, D_2, ..., D_{M_A}` over the grid.
pub struct DirichletSweep {
    chars: CharacterSweep,
    kernel: Vec<Complex64>,
    next: u64,
    size: u64,
}

impl DirichletSweep {
    pub fn new(sys: Arc<RadixSystem>) -> Self {
        let size = sys.size();
        Self {
            kernel: vec![ZERO; sys.len()],
            chars: CharacterSweep::new(sys),
            next: 0,
            size,
        }
    }

    /// Yields `(n, D_n)` for `n = 0, 1, ..., M_A`.
    pub fn advance(&mut self) -> Option<(u64, &[Complex64])> {
        let n = self.next;
        if n > self.size {
            return None;
        }
        if n > 0 {
            let table = self.chars.table().clone();
            let (_, phases) = self.chars.advance().expect("character for n - 1 < M_A");
            for (d, &ph) in self.kernel.iter_mut().zip(phases) {
                *d += table.root(ph);
            }
        }
        self.next += 1;
        Some((n, &self.kernel))
    }
}

/// `D_n = Σ_{k<n} ψ_k` by direct summation, with `D_0 ≡ 0`.
pub fn dirichlet_kernel(sys: Arc<RadixSystem>, n: u64) -> Result<GridFunction> {
    if n > sys.size() {
        return Err(VilenkinError::OutOfRange {
            value: n,
            limit: sys.size() + 1,
        });
    }
    let mut sweep = DirichletSweep::new(sys.clone());
    loop {
        let (k, kernel) = sweep.advance().expect("n <= M_A is reached");
        if k == n {
            return GridFunction::new(sys, kernel.to_vec());
        }
    }
}

/// `D_{M_n} = M_n · 1_{I_n}`.
pub fn dirichlet_closed_form_mn(sys: Arc<RadixSystem>, n: usize) -> Result<GridFunction> {
    if n > sys.resolution() {
        return Err(VilenkinError::RankOutOfRange {
            rank: n,
            resolution: sys.resolution(),
        });
    }
    let modulus = sys.m_pow(n);
    let height = Complex64::new(modulus as f64, 0.0);
    Ok(GridFunction::from_fn(sys, |i| {
        if i % modulus == 0 {
            height
        } else {
            ZERO
        }
    }))
}

/// Right-hand side of `D_n = ψ_n Σ_j D_{M_j} Σ_{u=m_j-n_j}^{m_j-1} r_j^u`,
/// evaluated pointwise. Positions with `n_j = 0` contribute an empty inner sum.
pub fn dirichlet_factorization(sys: Arc<RadixSystem>, n: u64) -> Result<GridFunction> {
    if n == 0 || n > sys.size() {
        return Err(VilenkinError::Precondition(format!(
            "factorization needs 1 <= n <= M_A = {}, got {n}",
            sys.size()
        )));
    }
    if n == sys.size() {
        // Only the j = A term survives and ψ_{M_A} r_A^{m_A - 1} = r_A^{m_A} = 1.
        let a = sys.resolution();
        return dirichlet_closed_form_mn(sys, a);
    }
    let idx = sys.decompose(n)?;
    let top = idx.order().expect("n >= 1 has an order");
    let values = (0..sys.size())
        .map(|i| {
            let x = sys.point(i).expect("grid index");
            let level = x.level();
            let mut bracket = ZERO;
            for j in 0..=top.min(level) {
                // D_{M_j}(x) = M_j on I_j, and x ∈ I_j iff j <= level(x)
                let digit = idx.digit(j);
                let m = sys.radix(j);
                let r = rademacher(&sys, j, &x);
                let inner: Complex64 = ((m - digit)..m).map(|u| r.powu(u)).sum();
                bracket += inner * sys.m_pow(j) as f64;
            }
            character(&sys, &idx, &x) * bracket
        })
        .collect();
    GridFunction::new(sys, values)
}

/// Checks `D_{j+M_k} = D_{M_k} + ψ_{M_k} D_j` pointwise to `1e-10`.
pub fn kernel_shift_identity_check(sys: Arc<RadixSystem>, j: u64, k: usize) -> Result<bool> {
    if k > sys.resolution() {
        return Err(VilenkinError::RankOutOfRange {
            rank: k,
            resolution: sys.resolution(),
        });
    }
    let mk = sys.m_pow(k);
    if j >= mk || j + mk > sys.size() {
        return Err(VilenkinError::Precondition(format!(
            "shift identity needs j < M_k and j + M_k <= M_A (j={j}, M_k={mk})"
        )));
    }
    let lhs = dirichlet_kernel(sys.clone(), j + mk)?;
    let mut rhs = dirichlet_kernel(sys.clone(), mk)?;
    if j > 0 {
        let shifted = GridFunction::character(sys.clone(), mk)?.mul(&dirichlet_kernel(sys, j)?)?;
        rhs = rhs.add(&shifted)?;
    }
    Ok(lhs.max_distance(&rhs)? <= 1e-10)
}

/// `S_n f = Σ_{k<n} f̂(k) ψ_k`, via spectrum truncation.
pub fn partial_sum(f: &GridFunction, n: u64) -> Result<GridFunction> {
    partial_sum_of_spectrum(&fast_transform(f), n)
}

pub fn partial_sum_of_spectrum(s: &Spectrum, n: u64) -> Result<GridFunction> {
    let size = s.system().size();
    if n > size {
        return Err(VilenkinError::OutOfRange {
            value: n,
            limit: size + 1,
        });
    }
    Ok(inverse_transform(&s.truncate(n)))
}

/// `E_n f`: the average of `f` over the rank-`n` coset of each point.
pub fn conditional_expectation(f: &GridFunction, n: usize) -> Result<GridFunction> {
    let sys = f.system_arc().clone();
    if n > sys.resolution() {
        return Err(VilenkinError::RankOutOfRange {
            rank: n,
            resolution: sys.resolution(),
        });
    }
    let averages = coset_averages(f.values(), &sys, n);
    let modulus = averages.len() as u64;
    Ok(GridFunction::from_fn(sys, |i| {
        averages[(i % modulus) as usize]
    }))
}

/// Averages of `values` over rank-`n` cosets, indexed by residue `i mod M_n`.
pub(crate) fn coset_averages(values: &[Complex64], sys: &RadixSystem, n: usize) -> Vec<Complex64> {
    let modulus = sys.m_pow(n) as usize;
    let mut sums = vec![ZERO; modulus];
    for (i, v) in values.iter().enumerate() {
        sums[i % modulus] += v;
    }
    let count = (values.len() / modulus) as f64;
    for s in sums.iter_mut() {
        *s /= count;
    }
    sums
}

/// Running partial sums `S_0 f, S_1 f, ..., S_{M_A} f`.
pub struct PartialSumSweep {
    spectrum: Spectrum,
    chars: CharacterSweep,
    current: Vec<Complex64>,
    next: u64,
}

impl PartialSumSweep {
    pub fn new(spectrum: Spectrum) -> Self {
        let sys = spectrum.system_arc().clone();
        Self {
            current: vec![ZERO; sys.len()],
            chars: CharacterSweep::new(sys),
            spectrum,
            next: 0,
        }
    }

    pub fn from_function(f: &GridFunction) -> Self {
        Self::new(fast_transform(f))
    }

    pub fn advance(&mut self) -> Option<(u64, &[Complex64])> {
        let n = self.next;
        if n > self.spectrum.system().size() {
            return None;
        }
        if n > 0 {
            let table = self.chars.table().clone();
            let (k, phases) = self.chars.advance().expect("k < M_A");
            let c = self.spectrum.coeff(k);
            if c != ZERO {
                for (s, &ph) in self.current.iter_mut().zip(phases) {
                    *s += c * table.root(ph);
                }
            }
        }
        self.next += 1;
        Some((n, &self.current))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sys(spec: &str, a: usize) -> Arc<RadixSystem> {
        Arc::new(RadixSystem::parse(spec, a).unwrap())
    }

    #[test]
    fn d1_is_one_and_d0_is_zero() {
        let s = sys("2,3", 3);
        let d1 = dirichlet_kernel(s.clone(), 1).unwrap();
        assert!(d1.values().iter().all(|&v| v == Complex64::new(1.0, 0.0)));
        let d0 = dirichlet_kernel(s.clone(), 0).unwrap();
        assert!(d0.values().iter().all(|&v| v == ZERO));
        assert!(dirichlet_kernel(s.clone(), s.size() + 1).is_err());
    }

    #[test]
    fn dm2_on_two_three() {
        let s = Arc::new(RadixSystem::new(vec![2, 3]).unwrap());
        let d6 = dirichlet_kernel(s.clone(), 6).unwrap();
        assert!((d6.values()[0] - 6.0).norm() < 1e-12);
        assert!(d6.values()[1..].iter().all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn d3_dyadic_by_hand() {
        let s = sys("2", 3);
        let d3 = dirichlet_kernel(s.clone(), 3).unwrap();
        // ψ_0 + ψ_1 + ψ_2 = 1 + r_0 + r_1
        for i in 0..8u64 {
            let r0 = if i & 1 == 0 { 1.0 } else { -1.0 };
            let r1 = if i & 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(d3.values()[i as usize], Complex64::new(1.0 + r0 + r1, 0.0));
        }
    }

    #[test]
    fn closed_form_matches_summation() {
        let s = sys("2,3,4", 3);
        for n in 0..=s.resolution() {
            let closed = dirichlet_closed_form_mn(s.clone(), n).unwrap();
            let summed = dirichlet_kernel(s.clone(), s.m_pow(n)).unwrap();
            assert!(closed.max_distance(&summed).unwrap() < 1e-10, "n={n}");
        }
        let one = dirichlet_closed_form_mn(s.clone(), 0).unwrap();
        assert!(one.values().iter().all(|&v| v == Complex64::new(1.0, 0.0)));
        let bin = sys("2", 4);
        let d4 = dirichlet_closed_form_mn(bin, 2).unwrap();
        for (i, v) in d4.values().iter().enumerate() {
            let target = if i % 4 == 0 { 4.0 } else { 0.0 };
            assert_eq!(*v, Complex64::new(target, 0.0));
        }
    }

    #[test]
    fn factorization_examples() {
        let bin = sys("2", 4);
        let lhs = dirichlet_factorization(bin.clone(), 3).unwrap();
        let rhs = dirichlet_kernel(bin.clone(), 3).unwrap();
        assert!(lhs.max_distance(&rhs).unwrap() < 1e-10);
        let s = Arc::new(RadixSystem::new(vec![2, 3, 4]).unwrap());
        let lhs = dirichlet_factorization(s.clone(), 7).unwrap();
        let rhs = dirichlet_kernel(s.clone(), 7).unwrap();
        assert!(lhs.max_distance(&rhs).unwrap() < 1e-10);
        for k in 0..=3 {
            let lhs = dirichlet_factorization(s.clone(), s.m_pow(k)).unwrap();
            let rhs = dirichlet_closed_form_mn(s.clone(), k).unwrap();
            assert!(lhs.max_distance(&rhs).unwrap() < 1e-10, "k={k}");
        }
        assert!(dirichlet_factorization(s.clone(), 0).is_err());
    }

    #[test]
    fn factorization_all_n_small() {
        let s = sys("3,2", 4);
        let mut sweep = DirichletSweep::new(s.clone());
        while let Some((n, kernel)) = sweep.advance() {
            if n == 0 {
                continue;
            }
            let expected = GridFunction::new(s.clone(), kernel.to_vec()).unwrap();
            let got = dirichlet_factorization(s.clone(), n).unwrap();
            assert!(got.max_distance(&expected).unwrap() < 1e-10, "n={n}");
        }
    }

    #[test]
    fn shift_identity() {
        let bin = sys("2", 4);
        assert!(kernel_shift_identity_check(bin.clone(), 1, 2).unwrap());
        assert!(kernel_shift_identity_check(bin.clone(), 0, 3).unwrap());
        assert!(kernel_shift_identity_check(bin.clone(), 4, 2).is_err());

        let s = sys("2,3,2,3", 4);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let k = rng.gen_range(0..s.resolution());
            let j = rng.gen_range(0..s.m_pow(k));
            assert!(
                kernel_shift_identity_check(s.clone(), j, k).unwrap(),
                "j={j} k={k}"
            );
        }
    }

    #[test]
    fn partial_sum_properties() {
        let s = sys("2,3", 4);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let f = GridFunction::from_fn(s.clone(), |_| Complex64::new(rng.gen(), rng.gen()));
        let full = partial_sum(&f, s.size()).unwrap();
        assert!(full.max_distance(&f).unwrap() < 1e-10);
        let zero = partial_sum(&f, 0).unwrap();
        assert!(zero.max_abs() < 1e-14);
        assert!(partial_sum(&f, s.size() + 1).is_err());
        for n in 0..=s.resolution() {
            let sn = partial_sum(&f, s.m_pow(n)).unwrap();
            let en = conditional_expectation(&f, n).unwrap();
            assert!(sn.max_distance(&en).unwrap() < 1e-10, "n={n}");
        }
    }

    #[test]
    fn partial_sum_fixes_coarse_functions() {
        let bin = sys("2", 4);
        let f = GridFunction::from_fn(bin, |i| {
            Complex64::new(if i % 2 == 0 { 3.0 } else { -1.0 }, 0.0)
        });
        let s2 = partial_sum(&f, 2).unwrap();
        assert!(s2.max_distance(&f).unwrap() < 1e-12);
    }

    #[test]
    fn sweep_matches_truncation() {
        let s = sys("2,3,4", 3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = GridFunction::from_fn(s.clone(), |_| Complex64::new(rng.gen(), rng.gen()));
        let mut sweep = PartialSumSweep::from_function(&f);
        while let Some((n, values)) = sweep.advance() {
            let direct = partial_sum(&f, n).unwrap();
            let swept = GridFunction::new(s.clone(), values.to_vec()).unwrap();
            assert!(direct.max_distance(&swept).unwrap() < 1e-10);
        }
    }
}
