//! Gaussian and elliptical joint-mix covariance algebra and samplers.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::depcheck::Notion;
use crate::error::{Error, Result};
use crate::numeric::{ser, Scalar};

/// Eigenvalue tolerance for PSD certification.
pub const PSD_TOL: f64 = 1e-9;

fn check_nonnegative<T: Scalar>(v: &[T]) -> Result<()> {
    if v.iter().any(|x| !x.is_finite_val() || *x < T::zero()) {
        return Err(Error::Invalid("entries must be finite and nonnegative".into()));
    }
    Ok(())
}

fn twice_max_le_sum<T: Scalar>(v: &[T]) -> bool {
    let max = v.iter().cloned().fold(T::zero(), T::max_of);
    let sum = v.iter().cloned().fold(T::zero(), |a, b| a + b);
    !(max.clone() + max - sum).is_pos_tol()
}

/// Variance condition `2·max σᵢ² ≤ Σ σᵢ²`, necessary for an NCD joint mix.
pub fn check_ncd_necessary<T: Scalar>(variances: &[T]) -> Result<bool> {
    check_nonnegative(variances)?;
    Ok(twice_max_le_sum(variances))
}

/// Standard-deviation condition `2·max σᵢ ≤ Σ σᵢ`, necessary for any joint mix.
pub fn check_jm_necessary<T: Scalar>(sds: &[T]) -> Result<bool> {
    check_nonnegative(sds)?;
    Ok(twice_max_le_sum(sds))
}

/// Both necessary conditions for a variance vector, and whether the first implies the second here.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NecessaryConditions {
    pub ncd: bool,
    pub jm: bool,
    pub implication_holds: bool,
}

pub fn necessary_conditions(variances: &[f64]) -> Result<NecessaryConditions> {
    let ncd = check_ncd_necessary(variances)?;
    let sds: Vec<f64> = variances.iter().map(|v| v.sqrt()).collect();
    let jm = check_jm_necessary(&sds)?;
    Ok(NecessaryConditions { ncd, jm, implication_holds: !ncd || jm })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsdCertificate {
    pub min_eig: f64,
    /// Set when round-off eigenvalues in `[−tol, 0)` were clipped and the projection re-verified.
    pub clipped: bool,
}

pub fn min_eigenvalue(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    if n == 0 {
        return 0.0;
    }
    let mat = DMatrix::from_fn(n, n, |i, j| 0.5 * (m[i][j] + m[j][i]));
    SymmetricEigen::new(mat).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Eigen-based PSD check with tolerance `tol`, scaled by the largest diagonal entry.
pub fn certify_psd(m: &[Vec<f64>], tol: f64) -> Result<PsdCertificate> {
    let n = m.len();
    if m.iter().any(|r| r.len() != n) {
        return Err(Error::DimMismatch { expected: n, found: m.iter().map(Vec::len).find(|&l| l != n).unwrap_or(n) });
    }
    if m.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    let scale = (0..n).map(|i| m[i][i].abs()).fold(1.0, f64::max);
    let mat = DMatrix::from_fn(n, n, |i, j| 0.5 * (m[i][j] + m[j][i]));
    let eig = SymmetricEigen::new(mat);
    let min_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_eig >= 0.0 {
        return Ok(PsdCertificate { min_eig, clipped: false });
    }
    if min_eig < -tol * scale {
        return Err(Error::NotPsd { min_eig });
    }
    let clipped = eig.eigenvalues.map(|v| v.max(0.0));
    let proj = &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
    let re = SymmetricEigen::new(proj).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if re < -tol * scale {
        return Err(Error::NotPsd { min_eig: re });
    }
    Ok(PsdCertificate { min_eig, clipped: true })
}

fn to_f64_matrix<T: Scalar>(m: &[Vec<T>]) -> Vec<Vec<f64>> {
    m.iter().map(|r| r.iter().map(Scalar::to_f).collect()).collect()
}

#[derive(Debug, Clone, Serialize)]
#[serde(bound = "")]
pub struct ConstructionTrace<T: Scalar> {
    /// `order[k]` is the caller index of the k-th smallest variance.
    pub order: Vec<usize>,
    #[serde(serialize_with = "ser::vec")]
    pub sorted_variances: Vec<T>,
    #[serde(serialize_with = "ser::scalar")]
    pub lambda_sq: T,
    pub lambda: f64,
    /// Squared increments `σ²_k − σ²_{k−1}` of the sorted variances.
    #[serde(serialize_with = "ser::vec")]
    pub alpha_sq: Vec<T>,
    pub alpha: Vec<f64>,
    /// Covariance in the caller's order.
    #[serde(serialize_with = "ser::mat")]
    pub cov: Vec<Vec<T>>,
    pub psd: PsdCertificate,
}

/// Covariance of an NA Gaussian joint mix with the given variances.
pub fn construct_na_gaussian_cov<T: Scalar>(variances: &[T]) -> Result<ConstructionTrace<T>> {
    let n = variances.len();
    if n < 2 {
        return Err(Error::Invalid("need at least two variances".into()));
    }
    if !check_ncd_necessary(variances)? {
        return Err(Error::PreconditionFailed("2·max variance exceeds the variance sum".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| variances[a].cmp_total(&variances[b]).then(a.cmp(&b)));
    let s: Vec<T> = order.iter().map(|&i| variances[i].clone()).collect();

    let numer = s[n - 1].clone() - s[n - 2].clone();
    let denom = s[..n - 2].iter().cloned().fold(T::zero(), |a, b| a + b);
    let lambda_sq = if numer.is_zero_tol() {
        T::zero()
    } else if denom.is_zero_tol() {
        return Err(Error::DegenerateInput("only one variance is positive".into()));
    } else {
        // the precondition bounds the ratio by one; clamp float overshoot
        let r = numer / denom;
        if r > T::one() {
            T::one()
        } else {
            r
        }
    };
    let d_sq = T::one() - lambda_sq.clone();
    let alpha_sq: Vec<T> = (0..n)
        .map(|k| if k == 0 { s[0].clone() } else { s[k].clone() - s[k - 1].clone() })
        .collect();
    // acc[k] = Σ_{j ≤ k} α²_j / (n − j), one-based j
    let mut acc = Vec::with_capacity(n);
    let mut run = T::zero();
    for (k, a) in alpha_sq.iter().enumerate().take(n - 1) {
        run = run + a.clone() / T::from_int((n - k - 1) as i64);
        acc.push(run.clone());
    }

    let mut sorted = vec![vec![T::zero(); n]; n];
    for k in 0..n {
        sorted[k][k] = s[k].clone();
        for l in k + 1..n {
            let base = -(d_sq.clone() * acc[k].clone());
            let v = if l == n - 1 { base - lambda_sq.clone() * s[k].clone() } else { base };
            sorted[k][l] = v.clone();
            sorted[l][k] = v;
        }
    }
    let mut cov = vec![vec![T::zero(); n]; n];
    for a in 0..n {
        for b in 0..n {
            cov[order[a]][order[b]] = sorted[a][b].clone();
        }
    }
    let psd = certify_psd(&to_f64_matrix(&cov), PSD_TOL)?;
    Ok(ConstructionTrace {
        order,
        sorted_variances: s,
        lambda: lambda_sq.to_f().max(0.0).sqrt(),
        lambda_sq,
        alpha: alpha_sq.iter().map(|a| a.to_f().max(0.0).sqrt()).collect(),
        alpha_sq,
        cov,
        psd,
    })
}

#[derive(Debug, Clone, Serialize)]
#[serde(bound = "")]
pub struct Cov3<T: Scalar> {
    #[serde(serialize_with = "ser::mat")]
    pub cov: Vec<Vec<T>>,
    pub psd: bool,
    pub min_eig: f64,
}

/// The unique joint-mix covariance in dimension three; `psd` is false when no joint mix exists.
pub fn jm_cov_n3<T: Scalar>(variances: &[T]) -> Result<Cov3<T>> {
    if variances.len() != 3 {
        return Err(Error::DimMismatch { expected: 3, found: variances.len() });
    }
    check_nonnegative(variances)?;
    let v = variances;
    let two = T::from_int(2);
    let c = |a: usize, b: usize, other: usize| (v[other].clone() - v[a].clone() - v[b].clone()) / two.clone();
    let (c01, c02, c12) = (c(0, 1, 2), c(0, 2, 1), c(1, 2, 0));
    let cov = vec![
        vec![v[0].clone(), c01.clone(), c02.clone()],
        vec![c01, v[1].clone(), c12.clone()],
        vec![c02, c12, v[2].clone()],
    ];
    let fm = to_f64_matrix(&cov);
    let scale = v.iter().map(Scalar::to_f).fold(1.0, f64::max);
    let min_eig = min_eigenvalue(&fm);
    Ok(Cov3 { cov, psd: min_eig >= -PSD_TOL * scale, min_eig })
}

/// Correlation matrix with off-diagonal entries `−1/(n−1)`.
pub fn equicorrelation<T: Scalar>(n: usize) -> Result<Vec<Vec<T>>> {
    if n < 2 {
        return Err(Error::Invalid("equicorrelation needs n ≥ 2".into()));
    }
    let off = -(T::one() / T::from_int(n as i64 - 1));
    Ok((0..n)
        .map(|i| (0..n).map(|j| if i == j { T::one() } else { off.clone() }).collect())
        .collect())
}

/// `|1ᵀΣ1| ≤ tol`.
pub fn cov_is_jm<T: Scalar>(cov: &[Vec<T>], tol: &T) -> bool {
    let total = cov.iter().flatten().cloned().fold(T::zero(), |a, b| a + b);
    total.abs() <= *tol
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "snake_case")]
pub enum Family {
    #[default]
    Gaussian,
    StudentT { nu: f64 },
    /// Gaussian variance mixture with a finite distribution of the scale `W`.
    ScaleMixture { scales: Vec<f64>, probs: Vec<f64> },
}

/// Location, dispersion and generator family of an elliptical law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovModel {
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
    #[serde(default)]
    pub family: Family,
}

pub type EllipticalSpec = CovModel;

impl CovModel {
    pub fn gaussian(mean: Vec<f64>, cov: Vec<Vec<f64>>) -> Result<Self> {
        let m = CovModel { mean, cov, family: Family::Gaussian };
        m.validate()?;
        Ok(m)
    }

    pub fn with_family(mut self, family: Family) -> Result<Self> {
        self.family = family;
        self.validate()?;
        Ok(self)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let m: CovModel = serde_json::from_str(s)?;
        m.validate()?;
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn validate(&self) -> Result<PsdCertificate> {
        let n = self.mean.len();
        if n == 0 {
            return Err(Error::Empty);
        }
        if self.cov.len() != n {
            return Err(Error::DimMismatch { expected: n, found: self.cov.len() });
        }
        if self.mean.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        for i in 0..n {
            for j in 0..n {
                if (self.cov[i].get(j).copied().unwrap_or(f64::NAN) - self.cov[j][i]).abs() > 1e-12 {
                    return Err(Error::Invalid("dispersion matrix is not symmetric".into()));
                }
            }
        }
        match &self.family {
            Family::Gaussian => {}
            Family::StudentT { nu } => {
                if !(nu.is_finite() && *nu > 0.0) {
                    return Err(Error::Invalid("degrees of freedom must be positive".into()));
                }
            }
            Family::ScaleMixture { scales, probs } => {
                if scales.is_empty() || scales.len() != probs.len() {
                    return Err(Error::Invalid("scale mixture needs matching scales and probs".into()));
                }
                if scales.iter().any(|w| !w.is_finite() || *w < 0.0) {
                    return Err(Error::Invalid("mixture scales must be nonnegative".into()));
                }
                if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
                    return Err(Error::BadProbabilityVector("negative or non-finite weight".into()));
                }
                let mass: f64 = probs.iter().sum();
                if (mass - 1.0).abs() > 1e-9 {
                    return Err(Error::MassNotOne { mass });
                }
            }
        }
        certify_psd(&self.cov, PSD_TOL)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussianVerdict {
    pub holds: bool,
    /// Notions decided simultaneously by the sign pattern.
    pub notions: Vec<Notion>,
    /// Largest off-diagonal entry `(i, j, Σᵢⱼ)`.
    pub max_offdiag: Option<(usize, usize, f64)>,
}

/// For Gaussian laws NA, NSD, NOD, NLOD, NUOD and NCD all reduce to nonpositive covariances.
pub fn gaussian_negdep_verdict(model: &CovModel) -> Result<GaussianVerdict> {
    if model.family != Family::Gaussian {
        return Err(Error::WrongFamily("verdict applies to Gaussian models only".into()));
    }
    model.validate()?;
    let n = model.dim();
    let mut worst: Option<(usize, usize, f64)> = None;
    for i in 0..n {
        for j in i + 1..n {
            if worst.is_none_or(|w| model.cov[i][j] > w.2) {
                worst = Some((i, j, model.cov[i][j]));
            }
        }
    }
    Ok(GaussianVerdict {
        holds: worst.is_none_or(|w| w.2 <= 1e-12),
        notions: vec![Notion::NA, Notion::NSD, Notion::NOD, Notion::NLOD, Notion::NUOD, Notion::NCD],
        max_offdiag: worst,
    })
}

/// `A` with `A Aᵀ = Σ` from the eigendecomposition; eigenvalues below `1e−9·max` are zeroed
/// so singular directions are reproduced exactly.
pub fn factor(cov: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = cov.len();
    certify_psd(cov, PSD_TOL)?;
    let mat = DMatrix::from_fn(n, n, |i, j| 0.5 * (cov[i][j] + cov[j][i]));
    let eig = SymmetricEigen::new(mat);
    let max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let roots = eig.eigenvalues.map(|v| if v <= PSD_TOL * max { 0.0 } else { v.sqrt() });
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&roots))
}

/// `count` draws `μ + √W·A·Z`, deterministic in `seed`.
pub fn sample(model: &CovModel, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    model.validate()?;
    let n = model.dim();
    let a = factor(&model.cov)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chi = match &model.family {
        Family::StudentT { nu } => Some(ChiSquared::new(*nu).map_err(|e| Error::Invalid(e.to_string()))?),
        _ => None,
    };
    let mixture = match &model.family {
        Family::ScaleMixture { scales, probs } => Some((
            scales.clone(),
            WeightedIndex::new(probs).map_err(|e| Error::BadProbabilityVector(e.to_string()))?,
        )),
        _ => None,
    };
    let mut out = Vec::with_capacity(count);
    let mut z = nalgebra::DVector::zeros(n);
    for _ in 0..count {
        for k in 0..n {
            z[k] = rng.sample(StandardNormal);
        }
        let w: f64 = match (&chi, &mixture) {
            (Some(c), _) => {
                let nu = c.sample(&mut rng);
                match &model.family {
                    Family::StudentT { nu: dof } => dof / nu,
                    _ => unreachable!(),
                }
            }
            (_, Some((scales, idx))) => scales[idx.sample(&mut rng)],
            _ => 1.0,
        };
        let x = &a * &z * w.sqrt();
        out.push((0..n).map(|i| model.mean[i] + x[i]).collect());
    }
    Ok(out)
}

/// Empirical correlation matrix of a sample; undefined entries are `None`.
pub fn empirical_corr(samples: &[Vec<f64>]) -> Vec<Vec<Option<f64>>> {
    let n = samples.first().map_or(0, Vec::len);
    let m = samples.len() as f64;
    let mean: Vec<f64> = (0..n).map(|i| samples.iter().map(|s| s[i]).sum::<f64>() / m).collect();
    let mut cov = vec![vec![0.0; n]; n];
    for s in samples {
        for i in 0..n {
            for j in 0..n {
                cov[i][j] += (s[i] - mean[i]) * (s[j] - mean[j]) / m;
            }
        }
    }
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let d = (cov[i][i] * cov[j][j]).sqrt();
                    (d > 0.0).then(|| cov[i][j] / d)
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemoGrid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Default for DemoGrid {
    fn default() -> Self {
        DemoGrid { lo: -3.0, hi: 3.0, step: 0.1 }
    }
}

impl DemoGrid {
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|k| self.lo + k as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DemoResult {
    pub max_violation: f64,
    pub at: (f64, f64),
    pub quadrature_nodes: usize,
}

/// Number of Simpson panels used to integrate over the scale of a Student-t law.
pub const T_QUADRATURE_PANELS: usize = 2000;

/// Nodes `(w, weight)` of the scale `W = ν / χ²_ν`; weights sum to one.
pub fn student_t_scale_nodes(nu: f64, panels: usize) -> Vec<(f64, f64)> {
    // U = 1/W ~ Gamma(shape a, rate b); substitute u = s^m so the integrand is bounded at 0
    let (a, b) = (nu / 2.0, nu / 2.0);
    let m = if a >= 0.5 { 2.0 } else { 1.0 / a };
    let u_max = (a + 50.0 + 10.0 * a.sqrt()) / b;
    let s_max = u_max.powf(1.0 / m);
    let panels = panels + panels % 2;
    let h = s_max / panels as f64;
    let mut nodes: Vec<(f64, f64)> = (0..=panels)
        .filter_map(|k| {
            let s = k as f64 * h;
            let simpson = if k == 0 || k == panels { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
            let u = s.powf(m);
            // at s = 0 the density is positive only for ν ≤ 1; that node has W = ∞
            let density = s.powf(m * a - 1.0) * (-b * u).exp();
            if density <= 0.0 {
                return None;
            }
            Some((1.0 / u, simpson * density))
        })
        .collect();
    let total: f64 = nodes.iter().map(|n| n.1).sum();
    for n in &mut nodes {
        n.1 /= total;
    }
    nodes
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

/// `P(μ + √w·σ·Z ≤ x)`.
fn scaled_cdf(x: f64, mu: f64, sigma: f64, w: f64) -> f64 {
    if sigma == 0.0 || w == 0.0 {
        return if x >= mu { 1.0 } else { 0.0 };
    }
    std_normal_cdf((x - mu) / (sigma * w.sqrt()))
}

/// Maximum of `P(X₁≤x₁, X₂≤x₂) − P(X₁≤x₁)P(X₂≤x₂)` over the grid for an uncorrelated
/// bivariate elliptical law. Gaussian input is the control case with violation zero.
pub fn demo_bivariate_zero_corr_not_nod(spec: &EllipticalSpec, grid: &DemoGrid) -> Result<DemoResult> {
    spec.validate()?;
    if spec.dim() != 2 {
        return Err(Error::DimMismatch { expected: 2, found: spec.dim() });
    }
    if spec.cov[0][1] != 0.0 {
        return Err(Error::PreconditionFailed("dispersion must be diagonal".into()));
    }
    if !(grid.step > 0.0 && grid.hi >= grid.lo) {
        return Err(Error::Invalid("bad demo grid".into()));
    }
    let nodes: Vec<(f64, f64)> = match &spec.family {
        Family::Gaussian => vec![(1.0, 1.0)],
        Family::StudentT { nu } => student_t_scale_nodes(*nu, T_QUADRATURE_PANELS),
        Family::ScaleMixture { scales, probs } => scales.iter().cloned().zip(probs.iter().cloned()).collect(),
    };
    let xs = grid.points();
    let sig = [spec.cov[0][0].sqrt(), spec.cov[1][1].sqrt()];
    let table = |axis: usize| -> Vec<Vec<f64>> {
        xs.iter()
            .map(|&x| nodes.iter().map(|&(w, _)| scaled_cdf(x, spec.mean[axis], sig[axis], w)).collect())
            .collect()
    };
    let (f1, f2) = (table(0), table(1));
    let marginal = |f: &Vec<f64>| f.iter().zip(&nodes).map(|(v, n)| v * n.1).sum::<f64>();
    let m1: Vec<f64> = f1.iter().map(marginal).collect();
    let m2: Vec<f64> = f2.iter().map(marginal).collect();
    let mut best = DemoResult { max_violation: f64::NEG_INFINITY, at: (xs[0], xs[0]), quadrature_nodes: nodes.len() };
    for (i, a) in f1.iter().enumerate() {
        for (j, b) in f2.iter().enumerate() {
            let joint: f64 = a.iter().zip(b).zip(&nodes).map(|((x, y), n)| x * y * n.1).sum();
            let v = joint - m1[i] * m2[j];
            if v > best.max_violation {
                best.max_violation = v;
                best.at = (xs[i], xs[j]);
            }
        }
    }
    Ok(best)
}
