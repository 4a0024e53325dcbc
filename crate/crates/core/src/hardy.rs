//! Martingale Hardy spaces at finite resolution.
//!
//! A grid function `f` at resolution `A` determines the martingale
//! `f^{(n)} = S_{M_n} f = E_n f`, `0 <= n <= A`. Its maximal function is the
//! pointwise maximum of `|f^{(n)}|`, which is exact for `F_A`-measurable
//! functions, and `‖f‖_{H_p} = ‖f*‖_p`.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VilenkinError};
use crate::kernels::coset_averages;
use crate::radix::{Coset, RadixSystem};
use crate::transform::{GridFunction, PhaseTable};

/// Relative tolerance used by atom checks.
pub const ATOM_TOLERANCE: f64 = 1e-10;

/// Averages below this fraction of `max|f|` are treated as exact zeros.
pub const ROUNDING_FLOOR: f64 = 1e-13;

fn check_exponent(p: f64) -> Result<()> {
    if p > 0.0 && p.is_finite() {
        Ok(())
    } else {
        Err(VilenkinError::Exponent {
            p,
            range: "(0, inf)",
        })
    }
}

/// The martingale `(S_{M_n} f : 0 <= n <= A)` of a grid function.
#[derive(Clone, Debug)]
pub struct MartingaleView {
    base: GridFunction,
    /// `levels[n][r]` is the value of `f^{(n)}` on the coset with residue
    /// `r mod M_n`.
    levels: Vec<Vec<Complex64>>,
}

impl MartingaleView {
    pub fn new(base: GridFunction) -> Self {
        let sys = base.system_arc().clone();
        let a = sys.resolution();
        let mut levels = vec![Vec::new(); a + 1];
        levels[a] = base.values().to_vec();
        for n in (0..a).rev() {
            // fold the m_n children of each rank-n coset
            let m = sys.radix(n) as usize;
            let modulus = sys.m_pow(n) as usize;
            let finer = &levels[n + 1];
            let coarse: Vec<Complex64> = (0..modulus)
                .map(|r| (0..m).map(|t| finer[r + t * modulus]).sum::<Complex64>() / m as f64)
                .collect();
            levels[n] = coarse;
        }
        // Cancellation inside mean-zero cosets leaves residue near ulp(max|f|),
        // which |.|^p with p < 1 would blow up; flush it.
        let floor = ROUNDING_FLOOR * levels[a].iter().map(|v| v.norm()).fold(0.0, f64::max);
        for level in &mut levels[..a] {
            for v in level.iter_mut() {
                if v.norm() <= floor {
                    *v = Complex64::new(0.0, 0.0);
                }
            }
        }
        Self { base, levels }
    }

    pub fn base(&self) -> &GridFunction {
        &self.base
    }

    pub fn system(&self) -> &Arc<RadixSystem> {
        self.base.system_arc()
    }

    pub fn resolution(&self) -> usize {
        self.levels.len() - 1
    }

    /// `f^{(n)}` on its own rank-`n` residues (length `M_n`).
    pub fn level_compact(&self, n: usize) -> &[Complex64] {
        &self.levels[n]
    }

    /// `f^{(n)}` expanded to the full grid.
    pub fn level(&self, n: usize) -> Result<GridFunction> {
        let a = self.resolution();
        if n > a {
            return Err(VilenkinError::RankOutOfRange {
                rank: n,
                resolution: a,
            });
        }
        let compact = &self.levels[n];
        let modulus = compact.len() as u64;
        Ok(GridFunction::from_fn(self.system().clone(), |i| {
            compact[(i % modulus) as usize]
        }))
    }

    /// `f*(x) = max_n |f^{(n)}(x)|`.
    pub fn maximal_function(&self) -> GridFunction {
        let sys = self.system().clone();
        let mut star = vec![0.0f64; sys.len()];
        for level in &self.levels {
            let modulus = level.len();
            for (i, s) in star.iter_mut().enumerate() {
                let v = level[i % modulus].norm();
                if v > *s {
                    *s = v;
                }
            }
        }
        GridFunction::from_real(sys, &star).expect("grid sized")
    }

    /// `∫ f^{(n)} conj(ψ_i) dμ`.
    pub fn martingale_coefficient_at(&self, i: u64, n: usize) -> Result<Complex64> {
        let sys = self.system();
        if i >= sys.size() {
            return Err(VilenkinError::OutOfRange {
                value: i,
                limit: sys.size(),
            });
        }
        let level = self.level(n)?;
        let table = PhaseTable::new(sys);
        let acc: Complex64 = level
            .values()
            .iter()
            .enumerate()
            .map(|(x, v)| v * table.root(table.phase(sys, i, x as u64)).conj())
            .sum();
        Ok(acc / sys.size() as f64)
    }

    /// Coefficient of the martingale: the integral above at the smallest
    /// level `n` with `M_n > i`; every finer level gives the same value.
    pub fn martingale_coefficient(&self, i: u64) -> Result<Complex64> {
        let sys = self.system();
        let n = (0..=sys.resolution()).find(|&n| sys.m_pow(n) > i).ok_or(
            VilenkinError::OutOfRange {
                value: i,
                limit: sys.size(),
            },
        )?;
        self.martingale_coefficient_at(i, n)
    }
}

/// `‖f‖_p = ((1/M_A) Σ |f|^p)^{1/p}`.
pub fn lp_norm(f: &GridFunction, p: f64) -> Result<f64> {
    check_exponent(p)?;
    let mean = f.values().iter().map(|v| v.norm().powf(p)).sum::<f64>() / f.values().len() as f64;
    Ok(mean.powf(1.0 / p))
}

/// `sup_λ λ μ(|f| > λ)^{1/p}`, evaluated at the jumps of the distribution
/// function.
pub fn weak_lp_norm(f: &GridFunction, p: f64) -> Result<f64> {
    check_exponent(p)?;
    let weight = 1.0 / f.values().len() as f64;
    let dist: Vec<(f64, f64)> = f.values().iter().map(|v| (v.norm(), weight)).collect();
    Ok(weak_norm_of_distribution(dist, p))
}

/// Weak quasinorm of a finitely-valued function given as `(|value|, measure)`
/// pairs. Just below each distinct value `v` the level set `{|f| > λ}` has
/// measure `μ(|f| >= v)`, which is where the supremum is attained.
pub fn weak_norm_of_distribution(mut dist: Vec<(f64, f64)>, p: f64) -> f64 {
    dist.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = 0.0f64;
    let mut mass = 0.0;
    let mut i = 0;
    while i < dist.len() {
        let v = dist[i].0;
        while i < dist.len() && dist[i].0 == v {
            mass += dist[i].1;
            i += 1;
        }
        if v > 0.0 {
            best = best.max(v * mass.powf(1.0 / p));
        }
    }
    best
}

/// `‖f‖_{H_p} = ‖f*‖_p`.
pub fn hardy_quasinorm(mv: &MartingaleView, p: f64) -> Result<f64> {
    lp_norm(&mv.maximal_function(), p)
}

/// Outcome of checking the three p-atom conditions on a coset `I`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomCertificate {
    pub p: f64,
    pub rank: usize,
    pub anchor_index: u64,
    /// `|∫_I a dμ|`
    pub mean_abs: f64,
    /// `‖a‖_∞`
    pub sup: f64,
    /// `μ(I)^{-1/p}`
    pub sup_bound: f64,
    /// `sup / sup_bound`
    pub sup_ratio: f64,
    /// largest `|a|` outside `I`
    pub outside_sup: f64,
    pub mean_zero: bool,
    pub sup_ok: bool,
    pub support_ok: bool,
}

impl AtomCertificate {
    pub fn is_valid(&self) -> bool {
        self.mean_zero && self.sup_ok && self.support_ok
    }

    /// `1 - sup/sup_bound`; positive when condition b) holds strictly.
    pub fn sup_slack(&self) -> f64 {
        1.0 - self.sup_ratio
    }
}

/// Checks a) `∫_I a dμ = 0`, b) `‖a‖_∞ <= μ(I)^{-1/p}`, c) `supp a ⊂ I`.
pub fn verify_atom(a: &GridFunction, interval: &Coset, p: f64) -> Result<AtomCertificate> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(VilenkinError::Exponent { p, range: "(0, 1]" });
    }
    let sys = a.system();
    let size = sys.size() as f64;
    let mut inside_sum = Complex64::new(0.0, 0.0);
    let mut outside_sup = 0.0f64;
    for (i, v) in a.values().iter().enumerate() {
        if interval.contains_index(i as u64, sys) {
            inside_sum += v;
        } else {
            outside_sup = outside_sup.max(v.norm());
        }
    }
    let sup = a.max_abs();
    let measure = interval.measure(sys);
    let sup_bound = measure.powf(-1.0 / p);
    let mean_abs = inside_sum.norm() / size;
    let scale = (sup * measure).max(1.0);
    Ok(AtomCertificate {
        p,
        rank: interval.rank(),
        anchor_index: interval.anchor().index(sys),
        mean_abs,
        sup,
        sup_bound,
        sup_ratio: sup / sup_bound,
        outside_sup,
        mean_zero: mean_abs <= ATOM_TOLERANCE * scale,
        sup_ok: sup <= sup_bound * (1.0 + ATOM_TOLERANCE),
        support_ok: outside_sup <= ATOM_TOLERANCE * sup.max(1.0),
    })
}

/// A weighted atom `(μ_k, a_k, I_k)`.
#[derive(Clone, Debug)]
pub struct WeightedAtom {
    pub weight: f64,
    pub atom: GridFunction,
    pub interval: Coset,
}

/// Result of assembling `f^{(n)} = Σ_k μ_k S_{M_n} a_k`.
#[derive(Clone, Debug)]
pub struct AtomicBound {
    /// `(Σ |μ_k|^p)^{1/p}`
    pub weight_norm: f64,
    /// `‖f‖_{H_p}` of the assembled martingale
    pub quasinorm: f64,
    /// `quasinorm / weight_norm` (0 for the empty decomposition)
    pub ratio: f64,
    /// largest pointwise gap between `Σ μ_k E_n a_k` and `E_n` of the sum
    pub assembly_defect: f64,
    pub certificates: Vec<AtomCertificate>,
    pub martingale: MartingaleView,
}

/// Assembles the martingale of an atomic decomposition and returns the
/// weight norm next to its Hardy quasinorm.
pub fn atomic_upper_bound(
    sys: Arc<RadixSystem>,
    atoms: &[WeightedAtom],
    p: f64,
) -> Result<AtomicBound> {
    let mut certificates = Vec::with_capacity(atoms.len());
    for (index, wa) in atoms.iter().enumerate() {
        let cert = verify_atom(&wa.atom, &wa.interval, p)?;
        if !cert.is_valid() {
            return Err(VilenkinError::InvalidAtom {
                index,
                certificate: Box::new(cert),
            });
        }
        certificates.push(cert);
    }
    let mut f = GridFunction::zeros(sys.clone());
    for wa in atoms {
        f.axpy(Complex64::new(wa.weight, 0.0), &wa.atom)?;
    }
    let martingale = MartingaleView::new(f);
    let mut assembly_defect = 0.0f64;
    for n in 0..=sys.resolution() {
        let mut level = vec![Complex64::new(0.0, 0.0); sys.m_pow(n) as usize];
        for wa in atoms {
            for (acc, v) in level
                .iter_mut()
                .zip(coset_averages(wa.atom.values(), &sys, n))
            {
                *acc += wa.weight * v;
            }
        }
        for (a, b) in level.iter().zip(martingale.level_compact(n)) {
            assembly_defect = assembly_defect.max((a - b).norm());
        }
    }
    let weight_norm = atoms
        .iter()
        .map(|wa| wa.weight.abs().powf(p))
        .sum::<f64>()
        .powf(1.0 / p);
    let quasinorm = hardy_quasinorm(&martingale, p)?;
    let ratio = if weight_norm > 0.0 {
        quasinorm / weight_norm
    } else {
        0.0
    };
    Ok(AtomicBound {
        weight_norm,
        quasinorm,
        ratio,
        assembly_defect,
        certificates,
        martingale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{conditional_expectation, dirichlet_closed_form_mn, partial_sum};
    use crate::transform::naive_transform;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sys(spec: &str, a: usize) -> Arc<RadixSystem> {
        Arc::new(RadixSystem::parse(spec, a).unwrap())
    }

    fn random_function(s: &Arc<RadixSystem>, rng: &mut ChaCha8Rng) -> GridFunction {
        GridFunction::from_fn(s.clone(), |_| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    /// Random atom on a random rank-`n` coset, normalized to the sup bound.
    fn random_atom(s: &Arc<RadixSystem>, p: f64, rng: &mut ChaCha8Rng) -> (GridFunction, Coset) {
        let n = rng.gen_range(0..s.resolution());
        let anchor = s.point(rng.gen_range(0..s.size())).unwrap();
        let coset = Coset::new(n, anchor, s).unwrap();
        let raw = GridFunction::from_fn(s.clone(), |i| {
            if coset.contains_index(i, s) {
                Complex64::new(rng.gen_range(-1.0..1.0), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let mean = raw.integral() / coset.measure(s);
        let centred = GridFunction::from_fn(s.clone(), |i| {
            if coset.contains_index(i, s) {
                raw.values()[i as usize] - mean
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let bound = coset.measure(s).powf(-1.0 / p);
        let atom = centred.scale(Complex64::new(bound / centred.max_abs(), 0.0));
        (atom, coset)
    }

    #[test]
    fn levels_are_partial_sums_and_martingale() {
        let s = sys("2,3", 4);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = random_function(&s, &mut rng);
        let mv = MartingaleView::new(f.clone());
        assert_eq!(mv.level(4).unwrap(), f);
        for n in 0..=4 {
            let level = mv.level(n).unwrap();
            let sn = partial_sum(&f, s.m_pow(n)).unwrap();
            assert!(level.max_distance(&sn).unwrap() < 1e-10);
            for m in n..=4 {
                let e = conditional_expectation(&mv.level(m).unwrap(), n).unwrap();
                assert!(e.max_distance(&level).unwrap() < 1e-10);
            }
        }
    }

    #[test]
    fn maximal_function_examples() {
        let s = sys("2", 4);
        let c = Complex64::new(-2.0, 1.0);
        let mv = MartingaleView::new(GridFunction::constant(s.clone(), c));
        assert!(mv
            .maximal_function()
            .values()
            .iter()
            .all(|v| (v.re - c.norm()).abs() < 1e-12));

        let r0 = GridFunction::character(s.clone(), 1).unwrap();
        let mv = MartingaleView::new(r0.clone());
        assert_eq!(mv.level_compact(0), &[Complex64::new(0.0, 0.0)]);
        assert!(mv
            .maximal_function()
            .values()
            .iter()
            .all(|v| *v == Complex64::new(1.0, 0.0)));

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = random_function(&s, &mut rng);
        let rotated = f.scale(Complex64::from_polar(1.0, 0.7));
        let a = MartingaleView::new(f).maximal_function();
        let b = MartingaleView::new(rotated).maximal_function();
        assert!(a.max_distance(&b).unwrap() < 1e-12);
    }

    #[test]
    fn norm_examples() {
        let s = sys("2,3", 4);
        let one = GridFunction::constant(s.clone(), Complex64::new(1.0, 0.0));
        for p in [0.25, 0.5, 1.0, 2.0] {
            assert!((lp_norm(&one, p).unwrap() - 1.0).abs() < 1e-12);
            let psi = GridFunction::character(s.clone(), 17).unwrap();
            assert!((lp_norm(&psi, p).unwrap() - 1.0).abs() < 1e-12);
            for n in 0..=4 {
                let d = dirichlet_closed_form_mn(s.clone(), n).unwrap();
                let expected = (s.m_pow(n) as f64).powf(1.0 - 1.0 / p);
                assert!((lp_norm(&d, p).unwrap() - expected).abs() < 1e-10 * expected);
            }
        }
        assert!(lp_norm(&one, 0.0).is_err());
        assert!(weak_lp_norm(&one, -1.0).is_err());
    }

    #[test]
    fn weak_norm_examples() {
        let s = sys("2", 4);
        let c = GridFunction::constant(s.clone(), Complex64::new(0.0, -3.0));
        assert!((weak_lp_norm(&c, 0.5).unwrap() - 3.0).abs() < 1e-12);
        let ind = GridFunction::from_fn(s.clone(), |i| {
            Complex64::new(if i % 2 == 0 { 1.0 } else { 0.0 }, 0.0)
        });
        assert!((weak_lp_norm(&ind, 1.0).unwrap() - 0.5).abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let f = random_function(&s, &mut rng);
            let p = rng.gen_range(0.1..3.0);
            assert!(weak_lp_norm(&f, p).unwrap() <= lp_norm(&f, p).unwrap() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn weak_norm_brute_force_lambda_scan() {
        // scan λ on a fine grid; the exact value must dominate and be approached
        let s = sys("3,2", 3);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let f = random_function(&s, &mut rng);
        let p = 0.7;
        let exact = weak_lp_norm(&f, p).unwrap();
        let mut scanned = 0.0f64;
        let top = f.max_abs();
        for t in 1..20000 {
            let lambda = top * t as f64 / 20000.0;
            let mass =
                f.values().iter().filter(|v| v.norm() > lambda).count() as f64 / s.size() as f64;
            scanned = scanned.max(lambda * mass.powf(1.0 / p));
        }
        assert!(scanned <= exact * (1.0 + 1e-12));
        assert!(scanned >= exact * (1.0 - 1e-3));
    }

    #[test]
    fn hardy_dominates_lp() {
        let s = sys("2,3,2", 5);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let f = random_function(&s, &mut rng);
            let mv = MartingaleView::new(f.clone());
            for p in [0.3, 0.5, 1.0] {
                let h = hardy_quasinorm(&mv, p).unwrap();
                assert!(lp_norm(&f, p).unwrap() <= h * (1.0 + 1e-12));
                for n in 0..=mv.resolution() {
                    assert!(lp_norm(&mv.level(n).unwrap(), p).unwrap() <= h * (1.0 + 1e-12));
                }
            }
        }
        let one = MartingaleView::new(GridFunction::constant(s.clone(), Complex64::new(1.0, 0.0)));
        assert!((hardy_quasinorm(&one, 0.5).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn atom_checks() {
        let s = sys("2", 4);
        let r0 = GridFunction::character(s.clone(), 1).unwrap();
        let cert = verify_atom(&r0, &Coset::whole(&s), 1.0).unwrap();
        assert!(cert.is_valid());
        let one = GridFunction::constant(s.clone(), Complex64::new(1.0, 0.0));
        let cert = verify_atom(&one, &Coset::whole(&s), 1.0).unwrap();
        assert!(!cert.mean_zero);
        assert!(!cert.is_valid());
        // r_0 restricted to I_1 is constant there, not mean zero, and leaks support
        let cert = verify_atom(&r0, &Coset::at_origin(1, &s).unwrap(), 1.0).unwrap();
        assert!(!cert.support_ok);
        assert!(verify_atom(&r0, &Coset::whole(&s), 1.5).is_err());
        // oversize
        let big = r0.scale(Complex64::new(2.0, 0.0));
        assert!(!verify_atom(&big, &Coset::whole(&s), 1.0).unwrap().sup_ok);
        let json = serde_json::to_string(&cert).unwrap();
        let back: AtomCertificate = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cert);
    }

    #[test]
    fn atomic_bound_examples() {
        let s = sys("2,3", 4);
        let empty = atomic_upper_bound(s.clone(), &[], 0.5).unwrap();
        assert_eq!(empty.weight_norm, 0.0);
        assert_eq!(empty.quasinorm, 0.0);

        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let (atom, interval) = random_atom(&s, 1.0, &mut rng);
        let single = atomic_upper_bound(
            s.clone(),
            &[WeightedAtom {
                weight: 1.0,
                atom,
                interval,
            }],
            1.0,
        )
        .unwrap();
        assert!((single.weight_norm - 1.0).abs() < 1e-12);
        assert!(single.quasinorm <= 4.0);

        let one = GridFunction::constant(s.clone(), Complex64::new(1.0, 0.0));
        let bad = atomic_upper_bound(
            s.clone(),
            &[WeightedAtom {
                weight: 1.0,
                atom: one,
                interval: Coset::whole(&s),
            }],
            1.0,
        );
        assert!(matches!(
            bad,
            Err(VilenkinError::InvalidAtom { index: 0, .. })
        ));
    }

    #[test]
    fn atomic_ratio_does_not_grow_with_atom_count() {
        let s = sys("2,3,2", 6);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for p in [0.5, 1.0] {
            let mut max_by_count = Vec::new();
            for count in [1usize, 4, 16] {
                let mut worst = 0.0f64;
                for _ in 0..25 {
                    let atoms: Vec<WeightedAtom> = (0..count)
                        .map(|k| {
                            let (atom, interval) = random_atom(&s, p, &mut rng);
                            WeightedAtom {
                                weight: 0.8f64.powi(k as i32),
                                atom,
                                interval,
                            }
                        })
                        .collect();
                    let bound = atomic_upper_bound(s.clone(), &atoms, p).unwrap();
                    assert!(bound.assembly_defect < 1e-9);
                    worst = worst.max(bound.ratio);
                }
                max_by_count.push(worst);
            }
            // p <= 1 subadditivity caps the ratio by the single-atom H_p size;
            // rounding residue off the support enters as |ε|^p
            assert!(
                max_by_count.iter().all(|&r| r <= 1.0 + 1e-6),
                "{max_by_count:?}"
            );
        }
    }

    #[test]
    fn coefficients_are_stable_across_levels() {
        let s = sys("2,3", 4);
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let f = random_function(&s, &mut rng);
        let mv = MartingaleView::new(f.clone());
        let spectrum = naive_transform(&f);
        for i in [0u64, 1, 5, 11, 35] {
            let c = mv.martingale_coefficient(i).unwrap();
            assert!((c - spectrum.coeff(i)).norm() < 1e-12);
            for n in 0..=4 {
                let at = mv.martingale_coefficient_at(i, n).unwrap();
                if s.m_pow(n) > i {
                    assert!((at - c).norm() < 1e-12);
                } else {
                    assert!(at.norm() < 1e-12);
                }
            }
        }
        assert!(mv.martingale_coefficient(s.size()).is_err());
    }
}
