//! Generalized Rademacher functions, Vilenkin characters and the
//! Vilenkin-Fourier transform.
//!
//! Coefficients carry the Haar factor: `f̂(k) = (1/M_A) Σ_x f(x) conj(ψ_k(x))`,
//! and the inverse transform carries none.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Result, VilenkinError};
use crate::radix::{GroupPoint, RadixSystem, VIndex};

/// `exp(2πi t / l)`, exact at the quarter turns.
fn root_of_unity(t: u64, l: u64) -> Complex64 {
    let t = t % l;
    if (4 * t).is_multiple_of(l) {
        return match 4 * t / l {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
    }
    Complex64::from_polar(1.0, 2.0 * PI * t as f64 / l as f64)
}

/// `r_k(x) = exp(2πi x_k / m_k)`.
pub fn rademacher(sys: &RadixSystem, k: usize, x: &GroupPoint) -> Complex64 {
    root_of_unity(x.coord(k) as u64, sys.radix(k) as u64)
}

/// `ψ_n(x) = Π_k r_k(x)^{n_k}`, evaluated as a literal product of powers.
pub fn character(sys: &RadixSystem, n: &VIndex, x: &GroupPoint) -> Complex64 {
    (0..sys.resolution())
        .map(|k| rademacher(sys, k, x).powu(n.digit(k)))
        .product()
}

/// Roots of unity of order `lcm(m_j)`; every character value is one of them.
#[derive(Clone, Debug)]
pub struct PhaseTable {
    order: u64,
    roots: Vec<Complex64>,
}

impl PhaseTable {
    pub fn new(sys: &RadixSystem) -> Self {
        let order = sys.lcm();
        let roots = (0..order).map(|t| root_of_unity(t, order)).collect();
        Self { order, roots }
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    #[inline]
    pub fn root(&self, phase: u32) -> Complex64 {
        self.roots[phase as usize]
    }

    /// Phase index of `ψ_n` at grid index `i`: `Σ_j n_j x_j (L/m_j) mod L`.
    pub fn phase(&self, sys: &RadixSystem, n: u64, i: u64) -> u32 {
        let mut acc = 0u64;
        for j in 0..sys.resolution() {
            let step = self.order / sys.radix(j) as u64;
            acc += sys.digit(n, j) as u64 * sys.digit(i, j) as u64 * step;
        }
        (acc % self.order) as u32
    }
}

/// Walks `ψ_0, ψ_1, ψ_2, ...` over the whole grid, one O(M_A) step each.
///
/// Going from `k` to `k + 1` with carry into digit `c` multiplies the
/// character by `r_0 r_1 ... r_c`, so only integer phases are updated.
pub struct CharacterSweep {
    sys: Arc<RadixSystem>,
    table: PhaseTable,
    /// `prefix[c][i] = Σ_{j<=c} x_j L/m_j mod L` at grid index `i`.
    prefix: Vec<Vec<u32>>,
    phases: Vec<u32>,
    next: u64,
}

impl CharacterSweep {
    pub fn new(sys: Arc<RadixSystem>) -> Self {
        let table = PhaseTable::new(&sys);
        let l = table.order();
        let size = sys.len();
        let mut prefix: Vec<Vec<u32>> = Vec::with_capacity(sys.resolution());
        for c in 0..sys.resolution() {
            let step = l / sys.radix(c) as u64;
            let row: Vec<u32> = (0..size as u64)
                .map(|i| {
                    let below = if c == 0 {
                        0
                    } else {
                        prefix[c - 1][i as usize] as u64
                    };
                    ((below + sys.digit(i, c) as u64 * step) % l) as u32
                })
                .collect();
            prefix.push(row);
        }
        Self {
            sys,
            table,
            prefix,
            phases: vec![0; size],
            next: 0,
        }
    }

    /// Index of the character returned by the next call to [`advance`].
    ///
    /// [`advance`]: CharacterSweep::advance
    pub fn position(&self) -> u64 {
        self.next
    }

    /// Returns the phases of `ψ_k` for the current `k` and moves to `k + 1`.
    /// `None` once every `k < M_A` has been produced.
    pub fn advance(&mut self) -> Option<(u64, &[u32])> {
        let k = self.next;
        if k >= self.sys.size() {
            return None;
        }
        if k > 0 {
            // carry position for (k-1) -> k: lowest nonzero digit of k
            let mut c = 0;
            while self.sys.digit(k, c) == 0 {
                c += 1;
            }
            let l = self.table.order() as u32;
            for (ph, inc) in self.phases.iter_mut().zip(&self.prefix[c]) {
                let s = *ph + *inc;
                *ph = if s >= l { s - l } else { s };
            }
        }
        self.next += 1;
        Some((k, &self.phases))
    }

    pub fn table(&self) -> &PhaseTable {
        &self.table
    }
}

/// Complex function on the group, constant on rank-`A` cosets.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    sys: Arc<RadixSystem>,
    values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(sys: Arc<RadixSystem>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != sys.len() {
            return Err(VilenkinError::LengthMismatch {
                expected: sys.len(),
                got: values.len(),
            });
        }
        Ok(Self { sys, values })
    }

    pub fn from_fn(sys: Arc<RadixSystem>, f: impl FnMut(u64) -> Complex64) -> Self {
        let values = (0..sys.size()).map(f).collect();
        Self { sys, values }
    }

    pub fn from_real(sys: Arc<RadixSystem>, values: &[f64]) -> Result<Self> {
        Self::new(
            sys,
            values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
    }

    pub fn zeros(sys: Arc<RadixSystem>) -> Self {
        let values = vec![Complex64::new(0.0, 0.0); sys.len()];
        Self { sys, values }
    }

    pub fn constant(sys: Arc<RadixSystem>, c: Complex64) -> Self {
        let values = vec![c; sys.len()];
        Self { sys, values }
    }

    /// `ψ_n` sampled on the grid.
    pub fn character(sys: Arc<RadixSystem>, n: u64) -> Result<Self> {
        if n >= sys.size() {
            return Err(VilenkinError::OutOfRange {
                value: n,
                limit: sys.size(),
            });
        }
        let table = PhaseTable::new(&sys);
        let values = (0..sys.size())
            .map(|i| table.root(table.phase(&sys, n, i)))
            .collect();
        Ok(Self { sys, values })
    }

    pub fn system(&self) -> &RadixSystem {
        &self.sys
    }

    pub fn system_arc(&self) -> &Arc<RadixSystem> {
        &self.sys
    }

    pub fn resolution(&self) -> usize {
        self.sys.resolution()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn value_at(&self, x: &GroupPoint) -> Complex64 {
        self.values[x.index(&self.sys) as usize]
    }

    /// `∫ f dμ`.
    pub fn integral(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() / self.sys.size() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `max_x |f(x) - g(x)|`.
    pub fn max_distance(&self, other: &GridFunction) -> Result<f64> {
        self.check_same(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            sys: self.sys.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    pub fn add(&self, other: &GridFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &GridFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &GridFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    /// `self += c * other`.
    pub fn axpy(&mut self, c: Complex64, other: &GridFunction) -> Result<()> {
        self.check_same(other)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
        Ok(())
    }

    fn zip_with(
        &self,
        other: &GridFunction,
        op: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Self> {
        self.check_same(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| op(a, b))
            .collect();
        Ok(Self {
            sys: self.sys.clone(),
            values,
        })
    }

    fn check_same(&self, other: &GridFunction) -> Result<()> {
        if Arc::ptr_eq(&self.sys, &other.sys) || *self.sys == *other.sys {
            Ok(())
        } else {
            Err(VilenkinError::SystemMismatch)
        }
    }

    /// CSV with header `index,real,imag`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_complex_csv(out, &self.values)
    }
}

/// Vilenkin-Fourier coefficients `f̂(0..M_A)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    sys: Arc<RadixSystem>,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(sys: Arc<RadixSystem>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != sys.len() {
            return Err(VilenkinError::LengthMismatch {
                expected: sys.len(),
                got: coeffs.len(),
            });
        }
        Ok(Self { sys, coeffs })
    }

    pub fn zeros(sys: Arc<RadixSystem>) -> Self {
        let coeffs = vec![Complex64::new(0.0, 0.0); sys.len()];
        Self { sys, coeffs }
    }

    /// Unit spike at `k`.
    pub fn delta(sys: Arc<RadixSystem>, k: u64) -> Result<Self> {
        let mut s = Self::zeros(sys);
        let n = s.coeffs.len() as u64;
        *s.coeffs
            .get_mut(k as usize)
            .ok_or(VilenkinError::OutOfRange { value: k, limit: n })? = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    pub fn system(&self) -> &RadixSystem {
        &self.sys
    }

    pub fn system_arc(&self) -> &Arc<RadixSystem> {
        &self.sys
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn coeff(&self, k: u64) -> Complex64 {
        self.coeffs[k as usize]
    }

    /// Zeroes every coefficient with index `>= n`.
    pub fn truncate(&self, n: u64) -> Self {
        let mut out = self.clone();
        for c in out.coeffs.iter_mut().skip(n as usize) {
            *c = Complex64::new(0.0, 0.0);
        }
        out
    }

    /// `Σ_k |f̂(k)|²`.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn max_distance(&self, other: &Spectrum) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_complex_csv(out, &self.coeffs)
    }
}

fn write_complex_csv<W: Write>(mut out: W, values: &[Complex64]) -> Result<()> {
    writeln!(out, "index,real,imag")?;
    for (i, v) in values.iter().enumerate() {
        writeln!(out, "{i},{},{}", v.re, v.im)?;
    }
    Ok(())
}

/// `f̂(k) = (1/M_A) Σ_x f(x) conj(ψ_k(x))` straight from the definition.
/// O(M_A²); the reference the fast transform is checked against.
pub fn naive_transform(f: &GridFunction) -> Spectrum {
    let sys = f.sys.clone();
    let scale = 1.0 / sys.size() as f64;
    let mut sweep = CharacterSweep::new(sys.clone());
    let table = sweep.table().clone();
    let mut coeffs = Vec::with_capacity(sys.len());
    while let Some((_, phases)) = sweep.advance() {
        let acc: Complex64 = f
            .values
            .iter()
            .zip(phases)
            .map(|(v, &ph)| v * table.root(ph).conj())
            .sum();
        coeffs.push(acc * scale);
    }
    Spectrum { sys, coeffs }
}

/// Per-radix DFT matrices `w[k][d] = exp(sign·2πi k d / m)`.
struct StageKernels {
    matrices: Vec<(u32, Vec<Complex64>)>,
}

impl StageKernels {
    fn new(sys: &RadixSystem, inverse: bool) -> Self {
        let mut matrices: Vec<(u32, Vec<Complex64>)> = Vec::new();
        for &m in sys.radices() {
            if matrices.iter().any(|(r, _)| *r == m) {
                continue;
            }
            let m64 = m as u64;
            let mut w = Vec::with_capacity((m * m) as usize);
            for k in 0..m64 {
                for d in 0..m64 {
                    let t = (k * d) % m64;
                    let t = if inverse { t } else { (m64 - t) % m64 };
                    w.push(root_of_unity(t, m64));
                }
            }
            matrices.push((m, w));
        }
        Self { matrices }
    }

    fn get(&self, m: u32) -> &[Complex64] {
        &self
            .matrices
            .iter()
            .find(|(r, _)| *r == m)
            .expect("kernel built for every radix")
            .1
    }
}

/// Applies an `m_j`-point DFT along every digit axis in place.
fn digit_dft(sys: &RadixSystem, data: &mut [Complex64], inverse: bool) {
    let kernels = StageKernels::new(sys, inverse);
    let size = data.len();
    let mut gather = Vec::new();
    for j in 0..sys.resolution() {
        let m = sys.radix(j) as usize;
        let stride = sys.m_pow(j) as usize;
        let span = stride * m;
        if m == 2 {
            for base in (0..size).step_by(span) {
                for lo in base..base + stride {
                    let a = data[lo];
                    let b = data[lo + stride];
                    data[lo] = a + b;
                    data[lo + stride] = a - b;
                }
            }
            continue;
        }
        let w = kernels.get(m as u32);
        gather.resize(m, Complex64::new(0.0, 0.0));
        for base in (0..size).step_by(span) {
            for lo in base..base + stride {
                for (d, g) in gather.iter_mut().enumerate() {
                    *g = data[lo + d * stride];
                }
                for k in 0..m {
                    let row = &w[k * m..(k + 1) * m];
                    data[lo + k * stride] = row.iter().zip(&gather).map(|(a, b)| a * b).sum();
                }
            }
        }
    }
}

/// Mixed-radix decimation over digit positions; O(M_A Σ_j m_j).
pub fn fast_transform(f: &GridFunction) -> Spectrum {
    let mut coeffs = f.values.clone();
    digit_dft(&f.sys, &mut coeffs, false);
    let scale = 1.0 / f.sys.size() as f64;
    for c in coeffs.iter_mut() {
        *c *= scale;
    }
    Spectrum {
        sys: f.sys.clone(),
        coeffs,
    }
}

/// `f(x) = Σ_k f̂(k) ψ_k(x)`.
pub fn inverse_transform(s: &Spectrum) -> GridFunction {
    let mut values = s.coeffs.clone();
    digit_dft(&s.sys, &mut values, true);
    GridFunction {
        sys: s.sys.clone(),
        values,
    }
}
