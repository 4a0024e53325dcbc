//! Experiment drivers: inequality sweeps over random test functions, the
//! sharpness construction, identity checks and transform timings.
//!
//! Every report embeds its [`ExperimentConfig`], and all randomness flows
//! from one seeded ChaCha stream, so equal configs give byte-equal output.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::counterexample::{
    divergence_sums, select_alphas, verify_construction, ConstructionChecks, DivergenceReport,
    GrowthCheck, SelectionRule, WeightSequence,
};
use crate::error::{Result, VilenkinError};
use crate::hardy::{hardy_quasinorm, MartingaleView};
use crate::kernels::{
    dirichlet_closed_form_mn, dirichlet_factorization, kernel_shift_identity_check, DirichletSweep,
    PartialSumSweep,
};
use crate::radix::RadixSystem;
use crate::transform::{
    fast_transform, inverse_transform, naive_transform, CharacterSweep, GridFunction, Spectrum,
};

pub const DEFAULT_GRID_CAP: u64 = 1 << 20;

/// Tolerance of the identity checks, relative to the magnitude compared.
pub const IDENTITY_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Hardy,
    Paley,
    Strong,
    Counterexample,
    Identities,
    Bench,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::Hardy => "hardy",
            Self::Paley => "paley",
            Self::Strong => "strong",
            Self::Counterexample => "counterexample",
            Self::Identities => "identities",
            Self::Bench => "bench",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub radix: String,
    pub resolution: usize,
    pub p: f64,
    pub phi: String,
    pub trials: usize,
    pub seed: u64,
    pub out: Option<String>,
    pub grid_cap: u64,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment, radix: &str, resolution: usize, p: f64) -> Self {
        Self {
            experiment,
            radix: radix.into(),
            resolution,
            p,
            phi: "log".into(),
            trials: 200,
            seed: 0,
            out: None,
            grid_cap: DEFAULT_GRID_CAP,
        }
    }

    pub fn with_trials(mut self, trials: usize) -> Self {
        self.trials = trials;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_phi(mut self, phi: &str) -> Self {
        self.phi = phi.into();
        self
    }

    /// Parses the radix spec and enforces the grid cap.
    pub fn system(&self) -> Result<Arc<RadixSystem>> {
        let sys = RadixSystem::parse(&self.radix, self.resolution)?;
        if sys.size() > self.grid_cap {
            return Err(VilenkinError::GridTooLarge {
                resolution: self.resolution,
                cap: self.grid_cap,
            });
        }
        Ok(Arc::new(sys))
    }

    fn require_p(&self, lo_open: f64, hi: f64, hi_closed: bool, range: &'static str) -> Result<()> {
        let ok = self.p > lo_open && if hi_closed { self.p <= hi } else { self.p < hi };
        if ok {
            Ok(())
        } else {
            Err(VilenkinError::Exponent { p: self.p, range })
        }
    }
}

/// Random test-function families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// unit-modulus coefficients with random phases on a random band
    UnitSpectrum,
    /// a few random p-atoms with geometric weights
    AtomMixture,
    /// `1_I - 1_J` for random cosets `I ≠ J`
    IndicatorDifference,
    /// one `F_{r+1}`-measurable atom per rank `r`, weights `2^{-r}`
    RankAtoms,
}

impl Family {
    pub const MIXED: [Family; 3] = [
        Family::UnitSpectrum,
        Family::AtomMixture,
        Family::IndicatorDifference,
    ];
}

fn random_phase(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * rng.gen::<f64>())
}

/// A mean-zero function on a random rank-`rank` coset, constant on the
/// rank-`depth` cosets below it, with sup norm `M_rank^{1/p}`.
fn random_atom(
    rng: &mut ChaCha8Rng,
    sys: &Arc<RadixSystem>,
    rank: usize,
    depth: usize,
    p: f64,
) -> GridFunction {
    let residue = rng.gen_range(0..sys.m_pow(rank));
    let fine = sys.m_pow(depth);
    let children = (fine / sys.m_pow(rank)) as usize;
    let mut cells: Vec<Complex64> = (0..children)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let mean = cells.iter().sum::<Complex64>() / children as f64;
    cells.iter_mut().for_each(|c| *c -= mean);
    let sup = cells.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let height = (sys.m_pow(rank) as f64).powf(1.0 / p);
    let scale = if sup > 0.0 { height / sup } else { 0.0 };
    let mr = sys.m_pow(rank);
    GridFunction::from_fn(sys.clone(), |i| {
        if i % mr == residue {
            // index of the rank-depth cell inside the coset
            let cell = ((i % fine) / mr) as usize;
            cells[cell] * scale
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Draws one test function of the given family (possibly zero).
pub fn sample_function(
    family: Family,
    sys: &Arc<RadixSystem>,
    p: f64,
    rng: &mut ChaCha8Rng,
) -> GridFunction {
    let a = sys.resolution();
    let size = sys.size();
    match family {
        Family::UnitSpectrum => {
            if size < 2 {
                return GridFunction::zeros(sys.clone());
            }
            let lo = rng.gen_range(1..size);
            let hi = rng.gen_range(lo + 1..=size);
            let mut coeffs = vec![Complex64::new(0.0, 0.0); size as usize];
            for c in &mut coeffs[lo as usize..hi as usize] {
                *c = random_phase(rng);
            }
            inverse_transform(&Spectrum::new(sys.clone(), coeffs).expect("sized"))
        }
        Family::AtomMixture => {
            let mut f = GridFunction::zeros(sys.clone());
            if a == 0 {
                return f;
            }
            let count = rng.gen_range(1..=4);
            for t in 0..count {
                let rank = rng.gen_range(0..a);
                let atom = random_atom(rng, sys, rank, a, p.min(1.0));
                f.axpy(Complex64::new(0.5f64.powi(t), 0.0), &atom)
                    .expect("same system");
            }
            f
        }
        Family::IndicatorDifference => {
            let r1 = rng.gen_range(0..=a);
            let r2 = rng.gen_range(0..=a);
            let c1 = rng.gen_range(0..sys.m_pow(r1));
            let c2 = rng.gen_range(0..sys.m_pow(r2));
            let (m1, m2) = (sys.m_pow(r1), sys.m_pow(r2));
            GridFunction::from_fn(sys.clone(), |i| {
                let v = (i % m1 == c1) as i32 - (i % m2 == c2) as i32;
                Complex64::new(v as f64, 0.0)
            })
        }
        Family::RankAtoms => {
            let mut f = GridFunction::zeros(sys.clone());
            for rank in 0..a {
                let atom = random_atom(rng, sys, rank, rank + 1, 1.0);
                f.axpy(Complex64::new(0.5f64.powi(rank as i32), 0.0), &atom)
                    .expect("same system");
            }
            f
        }
    }
}

/// Draws until a nonzero function appears, then scales it to `‖f‖_{H_p} = 1`.
fn normalized_sample(
    family: Family,
    sys: &Arc<RadixSystem>,
    p: f64,
    rng: &mut ChaCha8Rng,
) -> Result<MartingaleView> {
    for _ in 0..64 {
        let f = sample_function(family, sys, p, rng);
        let h = hardy_quasinorm(&MartingaleView::new(f.clone()), p)?;
        if h > 1e-12 {
            return Ok(MartingaleView::new(f.scale(Complex64::new(1.0 / h, 0.0))));
        }
    }
    Err(VilenkinError::Precondition(format!(
        "family {family:?} kept producing zero functions"
    )))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRatio {
    pub trial: usize,
    pub family: Family,
    pub lhs: f64,
    /// `‖f‖_{H_p}` (1 after normalization)
    pub hardy_norm: f64,
    /// `lhs / ‖f‖_{H_p}`
    pub ratio: f64,
    /// `lhs / ‖f‖_{H_p}^p`
    pub ratio_pth: f64,
}

/// `(1/log n) Σ_{k<=n} ‖S_k f - f‖_1 / k` at `n = M_1, ..., M_A`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogAverageTrace {
    pub trial: usize,
    pub points: Vec<(u64, f64)>,
}

impl LogAverageTrace {
    /// Decreasing steps and total steps over points with `n` in `[lo, hi]`.
    pub fn decreasing_steps(&self, lo: u64, hi: u64) -> (usize, usize) {
        let window: Vec<f64> = self
            .points
            .iter()
            .filter(|(n, _)| *n >= lo && *n <= hi)
            .map(|(_, v)| *v)
            .collect();
        let down = window.windows(2).filter(|w| w[1] < w[0]).count();
        (down, window.len().saturating_sub(1))
    }

    pub fn value_at(&self, n: u64) -> Option<f64> {
        self.points.iter().find(|(m, _)| *m == n).map(|(_, v)| *v)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub config: ExperimentConfig,
    pub lhs_label: String,
    pub trials: Vec<TrialRatio>,
    pub max_ratio: f64,
    pub mean_ratio: f64,
    pub max_ratio_pth: f64,
    pub mean_ratio_pth: f64,
    pub log_averages: Vec<LogAverageTrace>,
}

impl RatioReport {
    fn from_trials(
        config: ExperimentConfig,
        lhs_label: &str,
        trials: Vec<TrialRatio>,
        log_averages: Vec<LogAverageTrace>,
    ) -> Self {
        let n = trials.len().max(1) as f64;
        let max = |g: fn(&TrialRatio) -> f64| trials.iter().map(g).fold(0.0, f64::max);
        let mean = |g: fn(&TrialRatio) -> f64| trials.iter().map(g).sum::<f64>() / n;
        Self {
            max_ratio: max(|t| t.ratio),
            mean_ratio: mean(|t| t.ratio),
            max_ratio_pth: max(|t| t.ratio_pth),
            mean_ratio_pth: mean(|t| t.ratio_pth),
            config,
            lhs_label: lhs_label.into(),
            trials,
            log_averages,
        }
    }

    /// First trial with a NaN, infinite or negative entry.
    pub fn first_invalid(&self) -> Option<&TrialRatio> {
        self.trials.iter().find(|t| {
            [t.lhs, t.hardy_norm, t.ratio, t.ratio_pth]
                .iter()
                .any(|v| !v.is_finite() || *v < 0.0)
        })
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "trial,family,lhs,hardy_norm,ratio,ratio_pth")?;
        for t in &self.trials {
            let family = serde_json::to_value(t.family)?;
            writeln!(
                out,
                "{},{},{},{},{},{}",
                t.trial,
                family.as_str().unwrap_or_default(),
                t.lhs,
                t.hardy_norm,
                t.ratio,
                t.ratio_pth
            )?;
        }
        Ok(())
    }
}

/// `Σ_{k=1}^{M_A-1} |f̂(k)|^p / k^{2-p}`.
pub fn hardy_littlewood_lhs(spectrum: &Spectrum, p: f64) -> f64 {
    spectrum
        .coeffs()
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| c.norm().powf(p) / (k as f64).powf(2.0 - p))
        .sum()
}

/// `(Σ_{k=1}^{A-1} M_k^{2-2/p} Σ_{j=1}^{m_k-1} |f̂(j M_k)|²)^{1/2}`.
pub fn paley_lhs(spectrum: &Spectrum, p: f64) -> f64 {
    let sys = spectrum.system();
    let mut total = 0.0;
    for k in 1..sys.resolution() {
        let mk = sys.m_pow(k);
        let inner: f64 = (1..sys.radix(k) as u64)
            .map(|j| spectrum.coeff(j * mk).norm_sqr())
            .sum();
        total += (mk as f64).powf(2.0 - 2.0 / p) * inner;
    }
    total.sqrt()
}

/// `Σ_{k=1}^{M_A-1} ‖S_k f‖_p^p / k^{2-p}`.
pub fn strong_lhs(f: &GridFunction, p: f64) -> f64 {
    let size = f.values().len() as f64;
    let top = f.system().size();
    let mut sweep = PartialSumSweep::from_function(f);
    let mut total = 0.0;
    while let Some((k, partial)) = sweep.advance() {
        if k == 0 {
            continue;
        }
        if k >= top {
            break;
        }
        let mean = partial.iter().map(|v| v.norm().powf(p)).sum::<f64>() / size;
        total += mean / (k as f64).powf(2.0 - p);
    }
    total
}

/// Log-average `(1/ln n) Σ_{k=1}^{n} ‖S_k f - f‖_1 / k` at every `n = M_r`,
/// `r >= 1`.
pub fn log_average_trace(f: &GridFunction) -> Vec<(u64, f64)> {
    let sys = f.system_arc().clone();
    let size = f.values().len() as f64;
    let mut sweep = PartialSumSweep::from_function(f);
    let mut running = 0.0;
    let mut out = Vec::new();
    let mut next_rank = 1;
    while let Some((k, partial)) = sweep.advance() {
        if k == 0 {
            continue;
        }
        let l1 = partial
            .iter()
            .zip(f.values())
            .map(|(s, v)| (s - v).norm())
            .sum::<f64>()
            / size;
        running += l1 / k as f64;
        if next_rank <= sys.resolution() && k == sys.m_pow(next_rank) {
            out.push((k, running / (k as f64).ln()));
            next_rank += 1;
        }
    }
    out
}

fn run_trials(
    cfg: &ExperimentConfig,
    families: &[Family],
    mut lhs: impl FnMut(&MartingaleView) -> f64,
) -> Result<Vec<TrialRatio>> {
    let sys = cfg.system()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut trials = Vec::with_capacity(cfg.trials);
    for trial in 0..cfg.trials {
        let family = families[trial % families.len()];
        let mv = normalized_sample(family, &sys, cfg.p, &mut rng)?;
        let h = hardy_quasinorm(&mv, cfg.p)?;
        let value = lhs(&mv);
        trials.push(TrialRatio {
            trial,
            family,
            lhs: value,
            hardy_norm: h,
            ratio: value / h,
            ratio_pth: value / h.powf(cfg.p),
        });
    }
    Ok(trials)
}

/// Coefficient sum against the Hardy quasinorm, `0 < p <= 2`.
pub fn run_hardy_littlewood(cfg: &ExperimentConfig) -> Result<RatioReport> {
    cfg.require_p(0.0, 2.0, true, "(0, 2]")?;
    let p = cfg.p;
    let trials = run_trials(cfg, &Family::MIXED, |mv| {
        hardy_littlewood_lhs(&fast_transform(mv.base()), p)
    })?;
    Ok(RatioReport::from_trials(
        cfg.clone(),
        "sum_k |f^(k)|^p / k^(2-p)",
        trials,
        Vec::new(),
    ))
}

/// Lacunary square sum against the Hardy quasinorm, `0 < p <= 1`.
pub fn run_paley(cfg: &ExperimentConfig) -> Result<RatioReport> {
    cfg.require_p(0.0, 1.0, true, "(0, 1]")?;
    let p = cfg.p;
    let trials = run_trials(cfg, &Family::MIXED, |mv| {
        paley_lhs(&fast_transform(mv.base()), p)
    })?;
    Ok(RatioReport::from_trials(
        cfg.clone(),
        "(sum_k M_k^(2-2/p) sum_j |f^(j M_k)|^2)^(1/2)",
        trials,
        Vec::new(),
    ))
}

/// Partial-sum series for `0 < p < 1`; log-averages for `p = 1`.
pub fn run_strong_convergence(cfg: &ExperimentConfig) -> Result<RatioReport> {
    cfg.require_p(0.0, 1.0, true, "(0, 1]")?;
    let p = cfg.p;
    if p < 1.0 {
        let trials = run_trials(cfg, &Family::MIXED, |mv| strong_lhs(mv.base(), p))?;
        return Ok(RatioReport::from_trials(
            cfg.clone(),
            "sum_k ||S_k f||_p^p / k^(2-p)",
            trials,
            Vec::new(),
        ));
    }
    let mut traces = Vec::with_capacity(cfg.trials);
    let trials = run_trials(cfg, &[Family::RankAtoms], |mv| {
        let points = log_average_trace(mv.base());
        let last = points.last().map_or(0.0, |x| x.1);
        traces.push(LogAverageTrace {
            trial: traces.len(),
            points,
        });
        last
    })?;
    Ok(RatioReport::from_trials(
        cfg.clone(),
        "(1/ln M_A) sum_k ||S_k f - f||_1 / k",
        trials,
        traces,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub config: ExperimentConfig,
    pub divergence: DivergenceReport,
    pub checks: ConstructionChecks,
    /// `‖Σ λ_k a_k‖_{H_p} / (Σ λ_k^p)^{1/p}`
    pub atomic_ratio: f64,
    pub growth: Vec<GrowthCheck>,
}

impl CounterexampleReport {
    /// Non-decay threshold: last ratio at least half the first.
    pub const GROWTH_KEEP: f64 = 0.5;

    pub fn first_failure(&self) -> Option<String> {
        if let Some(name) = self.checks.first_failure() {
            return Some(name.to_string());
        }
        self.growth
            .iter()
            .find(|g| !g.passed)
            .map(|g| format!("growth of {} ({} -> {})", g.column, g.first, g.last))
    }
}

/// Block selection, construction, identity checks and divergence sums.
pub fn run_counterexample(cfg: &ExperimentConfig) -> Result<CounterexampleReport> {
    cfg.require_p(0.0, 2.0, true, "(0, 2]")?;
    let sys = cfg.system()?;
    let phi = WeightSequence::parse(&cfg.phi)?;
    let plan = select_alphas(&phi, cfg.p, sys, SelectionRule::Doubling)?;
    let divergence = divergence_sums(&plan, plan.block_count())?;
    let checks = verify_construction(&plan, 1)?;
    let mv = plan.build_martingale()?;
    let weights = plan
        .lambdas()
        .iter()
        .map(|l| l.powf(cfg.p))
        .sum::<f64>()
        .powf(1.0 / cfg.p);
    let atomic_ratio = hardy_quasinorm(&mv, cfg.p)? / weights;
    let growth = divergence.growth_checks(CounterexampleReport::GROWTH_KEEP);
    Ok(CounterexampleReport {
        config: cfg.clone(),
        divergence,
        checks,
        atomic_ratio,
        growth,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransformCheck {
    pub functions: usize,
    pub max_error: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GramCheck {
    pub size: u64,
    pub max_deviation: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelCheck {
    /// `max_n |D_n - M_n 1_{I_n}| / M_n` over `0 <= n <= A`
    pub closed_form_error: f64,
    /// `max_n |D_n - factorized D_n| / n` over `1 <= n <= M_A` (when run)
    pub factorization_error: Option<f64>,
    pub shift_pairs: usize,
    pub shift_failures: usize,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandCount {
    pub k: usize,
    pub enumerated: u64,
    /// `Π_{j=1}^{k-1} m_j`
    pub product_form: u64,
    /// `M_{k-1}/m_0`, as printed in the counting lemma
    pub printed_form: f64,
    /// `count · m_0 · m_k >= M_k`
    pub lower_bound_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub config: ExperimentConfig,
    pub transform: TransformCheck,
    pub gram: Option<GramCheck>,
    pub kernels: KernelCheck,
    pub bands: Vec<BandCount>,
    pub notices: Vec<String>,
}

impl IdentityReport {
    pub fn first_failure(&self) -> Option<String> {
        if !self.transform.passed {
            return Some(format!("fast transform ({:e})", self.transform.max_error));
        }
        if let Some(g) = &self.gram {
            if !g.passed {
                return Some(format!("orthonormality ({:e})", g.max_deviation));
            }
        }
        if !self.kernels.passed {
            return Some("kernel identities".into());
        }
        self.bands
            .iter()
            .find(|b| !b.lower_bound_ok)
            .map(|b| format!("band count lower bound at k = {}", b.k))
    }
}

/// Largest grid size for which the Gram matrix is formed.
pub const GRAM_LIMIT: u64 = 512;
/// Largest grid size for which the factorization is checked for every `n`.
pub const FACTORIZATION_LIMIT: u64 = 512;

/// `max_{j,k} |⟨ψ_j, ψ_k⟩ - δ_{jk}|` over the full character basis.
pub fn gram_deviation(sys: &Arc<RadixSystem>) -> f64 {
    let mut sweep = CharacterSweep::new(sys.clone());
    let table = sweep.table().clone();
    let mut rows: Vec<Vec<Complex64>> = Vec::with_capacity(sys.len());
    while let Some((_, phases)) = sweep.advance() {
        rows.push(phases.iter().map(|&ph| table.root(ph)).collect());
    }
    let size = sys.size() as f64;
    let mut worst = 0.0f64;
    for (j, a) in rows.iter().enumerate() {
        for (k, b) in rows.iter().enumerate().skip(j) {
            let inner: Complex64 = a
                .iter()
                .zip(b)
                .map(|(x, y)| x * y.conj())
                .sum::<Complex64>()
                / size;
            let target = if j == k { 1.0 } else { 0.0 };
            worst = worst.max((inner - target).norm());
        }
    }
    worst
}

/// Enumerated `N_{n0}` band counts for `1 <= k < A` next to both closed forms.
pub fn band_counts(sys: &RadixSystem) -> Result<Vec<BandCount>> {
    let mut bands = Vec::new();
    for k in 1..sys.resolution() {
        let enumerated = sys.count_n0_band(k)?;
        let product_form = (1..k).map(|j| sys.radix(j) as u64).product();
        bands.push(BandCount {
            k,
            enumerated,
            product_form,
            printed_form: sys.m_pow(k - 1) as f64 / sys.radix(0) as f64,
            lower_bound_ok: enumerated * sys.radix(0) as u64 * sys.radix(k) as u64 >= sys.m_pow(k),
        });
    }
    Ok(bands)
}

/// Transform agreement, orthonormality, kernel identities and band counts.
pub fn run_identities(cfg: &ExperimentConfig) -> Result<IdentityReport> {
    let sys = cfg.system()?;
    let a = sys.resolution();
    let tol = IDENTITY_TOLERANCE;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut notices = Vec::new();

    let mut max_error = 0.0f64;
    for _ in 0..cfg.trials {
        let f = GridFunction::from_fn(sys.clone(), |_| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        max_error = max_error.max(fast_transform(&f).max_distance(&naive_transform(&f)));
    }
    let transform = TransformCheck {
        functions: cfg.trials,
        max_error,
        passed: max_error <= tol,
    };

    let gram = if sys.size() <= GRAM_LIMIT {
        let dev = gram_deviation(&sys);
        Some(GramCheck {
            size: sys.size(),
            max_deviation: dev,
            passed: dev <= tol,
        })
    } else {
        notices.push(format!(
            "Gram matrix skipped: M_A = {} > {GRAM_LIMIT}",
            sys.size()
        ));
        None
    };

    let mut closed_form_error = 0.0f64;
    let mut factorization_error = 0.0f64;
    let run_factorization = sys.size() <= FACTORIZATION_LIMIT;
    if !run_factorization {
        notices.push(format!(
            "factorization checked at n = M_k only: M_A = {} > {FACTORIZATION_LIMIT}",
            sys.size()
        ));
    }
    let mut next_rank = 0;
    let mut sweep = DirichletSweep::new(sys.clone());
    while let Some((n, kernel)) = sweep.advance() {
        let at_rank = next_rank <= a && n == sys.m_pow(next_rank);
        if at_rank {
            let closed = dirichlet_closed_form_mn(sys.clone(), next_rank)?;
            let err = closed
                .values()
                .iter()
                .zip(kernel)
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max);
            closed_form_error = closed_form_error.max(err / n as f64);
            next_rank += 1;
        }
        if n >= 1 && (run_factorization || at_rank) {
            let fact = dirichlet_factorization(sys.clone(), n)?;
            let err = fact
                .values()
                .iter()
                .zip(kernel)
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max);
            factorization_error = factorization_error.max(err / n as f64);
        }
    }

    let mut shift_pairs = 0;
    let mut shift_failures = 0;
    if a >= 1 {
        for _ in 0..200 {
            let k = rng.gen_range(1..=a);
            let mk = sys.m_pow(k);
            let room = mk.min(sys.size() - mk + 1);
            let j = rng.gen_range(0..room);
            shift_pairs += 1;
            if !kernel_shift_identity_check(sys.clone(), j, k)? {
                shift_failures += 1;
            }
        }
    }
    let kernels = KernelCheck {
        closed_form_error,
        factorization_error: Some(factorization_error),
        shift_pairs,
        shift_failures,
        passed: closed_form_error <= tol && factorization_error <= tol && shift_failures == 0,
    };

    let bands = band_counts(&sys)?;

    Ok(IdentityReport {
        config: cfg.clone(),
        transform,
        gram,
        kernels,
        bands,
        notices,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub resolution: usize,
    pub size: u64,
    pub fast_seconds: f64,
    pub naive_seconds: Option<f64>,
    pub max_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub config: ExperimentConfig,
    pub rows: Vec<BenchRow>,
}

/// Largest size timed with the quadratic transform.
pub const NAIVE_BENCH_LIMIT: u64 = 1 << 14;

/// Wall time of both transforms for resolutions `0..=A`; agreement is
/// checked before timing.
pub fn run_bench(cfg: &ExperimentConfig) -> Result<BenchReport> {
    let top = cfg.system()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rows = Vec::new();
    for resolution in 0..=top.resolution() {
        let sys = Arc::new(top.with_resolution(resolution)?);
        let f = GridFunction::from_fn(sys.clone(), |_| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let reps = (NAIVE_BENCH_LIMIT / sys.size()).clamp(1, 64) as u32;
        let start = Instant::now();
        let mut fast = fast_transform(&f);
        for _ in 1..reps {
            fast = fast_transform(&f);
        }
        let fast_seconds = start.elapsed().as_secs_f64() / reps as f64;
        let (naive_seconds, max_error) = if sys.size() <= NAIVE_BENCH_LIMIT {
            let start = Instant::now();
            let naive = naive_transform(&f);
            (
                Some(start.elapsed().as_secs_f64()),
                fast.max_distance(&naive),
            )
        } else {
            // agreement against the inverse instead of the quadratic oracle
            (None, inverse_transform(&fast).max_distance(&f)?)
        };
        if max_error > IDENTITY_TOLERANCE {
            return Err(VilenkinError::Precondition(format!(
                "transforms disagree at A = {resolution}: {max_error:e}"
            )));
        }
        rows.push(BenchRow {
            resolution,
            size: sys.size(),
            fast_seconds,
            naive_seconds,
            max_error,
        });
    }
    Ok(BenchReport {
        config: cfg.clone(),
        rows,
    })
}
