//! Seeded random problem generators.
//!
//! All draws come from ChaCha20 (`rand_chacha::ChaCha20Rng::seed_from_u64`), so
//! a `(seed, parameters)` pair identifies a problem on every platform.
//! "Integer chosen with equal probability from `[a, b]`" includes both ends.
//! Variance parameters are variances: normals are sampled with standard
//! deviation `sqrt(var)`. Inverse-gamma draws are reciprocals of gamma draws
//! (`rand_distr::Gamma`, Marsaglia-Tsang rejection).
//!
//! Draw order is part of the format: changing it changes every problem.

use exactpen::{AdalConfig, AdalStop, CgConfig, InitialEps, IrwaConfig, IrwaStop, IrwaVariant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Gamma, Normal, StandardNormal};

use crate::io::{HessianSpec, MatrixSpec, Meta, PieceSpec, ProblemFile, SetSpec};

fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Normal with integer mean in `mean` and integer variance in `var`, both
/// drawn once per call.
fn random_normal(rng: &mut ChaCha20Rng, mean: (i64, i64), var: (i64, i64)) -> Normal<f64> {
    let mu = rng.random_range(mean.0..=mean.1) as f64;
    let v = rng.random_range(var.0..=var.1) as f64;
    Normal::new(mu, v.sqrt()).expect("positive variance")
}

fn sample_vec(rng: &mut ChaCha20Rng, dist: &Normal<f64>, len: usize) -> Vec<f64> {
    (0..len).map(|_| dist.sample(rng)).collect()
}

fn sample_rows(rng: &mut ChaCha20Rng, dist: &Normal<f64>, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows).map(|_| sample_vec(rng, dist, cols)).collect()
}

/// One scalar piece per row: the first `m_eq` rows are equations (`{0}`),
/// the rest inequalities (`R_-`).
fn eq_ineq_pieces(a: Vec<Vec<f64>>, b: &[f64], m_eq: usize) -> Vec<PieceSpec> {
    a.into_iter()
        .zip(b)
        .enumerate()
        .map(|(i, (row, bi))| PieceSpec {
            rows: 1,
            set: if i < m_eq { SetSpec::Zero } else { SetSpec::Nonpos },
            a: MatrixSpec::Dense(vec![row]),
            b: vec![*bi],
        })
        .collect()
}

/// Random equality/inequality problem with `H = 0.1 I + L L^T`.
///
/// `A` uses one normal with integer mean and variance in `[1, 10]`; `b` and
/// `g` each use one normal with mean in `[-100, 100]` and variance in
/// `[1, 100]`; `L` is `n x n` with entries `N(1, 2)`.
pub fn gen_experiment1(seed: u64, m_eq: usize, m_ineq: usize, n: usize) -> ProblemFile {
    let mut r = rng(seed);
    let m = m_eq + m_ineq;
    let a_dist = random_normal(&mut r, (1, 10), (1, 10));
    let a = sample_rows(&mut r, &a_dist, m, n);
    let b_dist = random_normal(&mut r, (-100, 100), (1, 100));
    let b = sample_vec(&mut r, &b_dist, m);
    let g_dist = random_normal(&mut r, (-100, 100), (1, 100));
    let g = sample_vec(&mut r, &g_dist, n);
    let l_dist = Normal::new(1.0, 2f64.sqrt()).expect("valid normal");
    let factor = sample_rows(&mut r, &l_dist, n, n);
    ProblemFile {
        n,
        g,
        h: HessianSpec::LowRankPlusDiag {
            diag: vec![0.1; n],
            factor,
            scale: vec![1.0; n],
        },
        pieces: eq_ineq_pieces(a, &b, m_eq),
        meta: Some(Meta {
            generator: format!("experiment1(m_eq={m_eq},m_ineq={m_ineq},n={n})"),
            seed,
            planted_support: None,
        }),
    }
}

/// Sizes of the second experiment: `n = 200 + 500 (j - 1)`, `m = n / 2`.
pub fn experiment2_dims(j: usize) -> (usize, usize) {
    let n = 200 + 500 * (j.max(1) - 1);
    (n, n / 2)
}

/// Random problem with `H = 40 I + L D L^T`, `L` in `R^{n x 8}` and `D`
/// inverse-gamma(0.5, 1). Half of the `m = n / 2` rows are equations.
pub fn gen_experiment2(seed: u64, j: usize) -> ProblemFile {
    let (n, m) = experiment2_dims(j);
    gen_experiment2_sized(seed, n, m, &format!("experiment2(j={j})"))
}

/// Second-experiment recipe at arbitrary size.
pub fn gen_experiment2_sized(seed: u64, n: usize, m: usize, label: &str) -> ProblemFile {
    const RANK: usize = 8;
    let mut r = rng(seed);
    let a_dist = random_normal(&mut r, (1, 10), (1, 10));
    let a = sample_rows(&mut r, &a_dist, m, n);
    let b_dist = random_normal(&mut r, (-200, 200), (1, 200));
    let b = sample_vec(&mut r, &b_dist, m);
    let g_dist = random_normal(&mut r, (-200, 200), (1, 200));
    let g = sample_vec(&mut r, &g_dist, n);
    let l_dist = random_normal(&mut r, (1, 10), (1, 10));
    let factor = sample_rows(&mut r, &l_dist, n, RANK);
    let gamma = Gamma::new(0.5, 1.0).expect("valid gamma");
    let scale = (0..RANK).map(|_| 1.0 / gamma.sample(&mut r)).collect();
    ProblemFile {
        n,
        g,
        h: HessianSpec::LowRankPlusDiag {
            diag: vec![40.0; n],
            factor,
            scale,
        },
        pieces: eq_ineq_pieces(a, &b, m / 2),
        meta: Some(Meta {
            generator: label.to_string(),
            seed,
            planted_support: None,
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SvmSizes {
    /// Samples.
    pub m: usize,
    /// Informative features.
    pub s: usize,
    /// Noise features.
    pub t: usize,
}

impl SvmSizes {
    pub fn for_index(j: usize) -> Self {
        Self {
            m: 200 + 10 * j,
            s: 19 + 2 * j,
            t: 200 + 30 * j,
        }
    }
}

/// Data of an l1-regularized SVM instance.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmData {
    /// Feature rows `[T R]`, one per sample.
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
    pub planted: Vec<f64>,
    pub lambda: f64,
}

impl SvmData {
    /// `sum_i max(0, 1 - y_i x_i.beta) + lambda |beta|_1`.
    pub fn objective(&self, beta: &[f64]) -> f64 {
        let hinge: f64 = self
            .features
            .iter()
            .zip(&self.labels)
            .map(|(x, y)| (1.0 - y * x.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>()).max(0.0))
            .sum();
        hinge + self.lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
    }
}

pub fn svm_data(seed: u64, sizes: SvmSizes, lambda: f64) -> SvmData {
    let SvmSizes { m, s, t } = sizes;
    let mut r = rng(seed);
    let mut informative = vec![vec![0.0; s]; m];
    for col in 0..s {
        let mean = r.random_range(1..=5) as f64;
        let sd = r.random_range(6..=10) as f64;
        let dist = Normal::new(mean, sd).expect("valid normal");
        for row in informative.iter_mut() {
            row[col] = dist.sample(&mut r);
        }
    }
    let planted: Vec<f64> = (0..s).map(|_| r.random_range(-100..=100) as f64).collect();
    let labels: Vec<f64> = informative
        .iter()
        .map(|row| {
            let v: f64 = row.iter().zip(&planted).map(|(a, b)| a * b).sum();
            if v >= 0.0 {
                1.0
            } else {
                -1.0
            }
        })
        .collect();
    let features = informative
        .into_iter()
        .map(|mut row| {
            row.extend((0..t).map(|_| Distribution::<f64>::sample(&StandardNormal, &mut r)));
            row
        })
        .collect();
    SvmData {
        features,
        labels,
        planted,
        lambda,
    }
}

/// Encodes an SVM instance: hinge terms as `dist(1 - y_i x_i.beta | R_-)` and
/// `lambda |beta_j|` as `dist(lambda beta_j | {0})`; `H = 0`, `g = 0`.
pub fn svm_problem(data: &SvmData, seed: u64, label: &str) -> ProblemFile {
    let n = data.features.first().map_or(0, |r| r.len());
    let mut pieces: Vec<PieceSpec> = data
        .features
        .iter()
        .zip(&data.labels)
        .map(|(x, y)| PieceSpec {
            rows: 1,
            set: SetSpec::Nonpos,
            a: MatrixSpec::Dense(vec![x.iter().map(|v| -y * v).collect()]),
            b: vec![1.0],
        })
        .collect();
    pieces.extend((0..n).map(|j| PieceSpec {
        rows: 1,
        set: SetSpec::Zero,
        a: MatrixSpec::Sparse {
            cols: n,
            triplets: vec![(0, j, data.lambda)],
        },
        b: vec![0.0],
    }));
    ProblemFile {
        n,
        g: vec![0.0; n],
        h: HessianSpec::Diag { diag: vec![0.0; n] },
        pieces,
        meta: Some(Meta {
            generator: label.to_string(),
            seed,
            planted_support: Some((0..data.planted.len()).filter(|&i| data.planted[i] != 0.0).collect()),
        }),
    }
}

pub fn gen_l1svm(seed: u64, j: usize, lambda: f64) -> ProblemFile {
    gen_l1svm_sized(seed, SvmSizes::for_index(j), lambda)
}

pub fn gen_l1svm_sized(seed: u64, sizes: SvmSizes, lambda: f64) -> ProblemFile {
    let data = svm_data(seed, sizes, lambda);
    let label = format!("l1svm(m={},s={},t={},lambda={lambda})", sizes.m, sizes.s, sizes.t);
    svm_problem(&data, seed, &label)
}

/// Solver settings used with the first experiment.
pub fn experiment1_irwa() -> IrwaConfig {
    IrwaConfig {
        eta: 0.6,
        gamma: 1.0 / 6.0,
        big_m: 1e4,
        eps0: InitialEps::Uniform(2000.0),
        ..IrwaConfig::default()
    }
}

/// First-experiment IRWA settings for reduced sizes (`n` around 100).
///
/// With `M = 1e4` the relaxation test passes on almost every iteration at
/// this size, `eps` collapses before `x` settles, and inexact CG steps stall.
/// `M = 0.1`, `eps0 = 10` keep the shrink schedule behind the iterates.
pub fn scaled_experiment1_irwa() -> IrwaConfig {
    IrwaConfig {
        big_m: 0.1,
        eps0: InitialEps::Uniform(10.0),
        ..experiment1_irwa()
    }
}

pub fn experiment1_adal() -> AdalConfig {
    AdalConfig {
        mu: 100.0,
        ..AdalConfig::default()
    }
}

/// Second experiment: `eta = 0.5`, `eps0 = 10^(2 + 1.3 ln(j + 10))`.
pub fn experiment2_irwa(j: usize) -> IrwaConfig {
    IrwaConfig {
        eta: 0.5,
        eps0: InitialEps::Uniform(10f64.powf(2.0 + 1.3 * ((j + 10) as f64).ln())),
        ..experiment1_irwa()
    }
}

/// Second experiment: `mu = 500 (1 + j)`.
pub fn experiment2_adal(j: usize) -> AdalConfig {
    AdalConfig {
        mu: 500.0 * (1 + j) as f64,
        ..AdalConfig::default()
    }
}

/// SVM settings; `H = 0` rules out gap stopping.
pub fn svm_irwa() -> IrwaConfig {
    IrwaConfig {
        eta: 0.7,
        big_m: 1e4,
        gamma: 1.0 / 6.0,
        eps0: InitialEps::Uniform(1e4),
        sigma: 1e-4,
        sigma_prime: 1e-8,
        variant: IrwaVariant::EqIneq,
        stop: IrwaStop::StepAndEps,
        cg: CgConfig::default(),
        ..IrwaConfig::default()
    }
}

pub fn svm_adal() -> AdalConfig {
    AdalConfig {
        mu: 1.0,
        sigma: 0.05,
        sigma_dprime: 0.05,
        max_iters: 150,
        stop: AdalStop::StepAndResidual,
        ..AdalConfig::default()
    }
}
