//! Random-intercept linear mixed model fitted by maximum likelihood.
//!
//! `y = X b + u[cluster] + e` with `u ~ N(0, s2u)` and `e ~ N(0, s2e)`. With
//! `lambda = s2u / s2e` each cluster block of `V = I + lambda J` has the
//! closed-form inverse `I - w J`, `w = lambda / (1 + n_c lambda)`, so `b` and
//! `s2e` are explicit at every `lambda` and only a 1-D search remains.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::hash::Hash;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::special::{chi2_sf, normal_two_sided};
use super::StatsError;

const LOG_LAMBDA_MIN: f64 = -12.0;
const LOG_LAMBDA_MAX: f64 = 12.0;
const GRID_STEP: f64 = 0.25;
const LOGLIK_TOL: f64 = 1e-10;
const Z_95: f64 = 1.959_963_984_540_054;

/// Response, fixed-effect design (intercept first) and cluster membership.
#[derive(Debug, Clone)]
pub struct LmmData {
    y: DVector<f64>,
    x: DMatrix<f64>,
    names: Vec<String>,
    cluster: Vec<usize>,
    n_clusters: usize,
}

impl LmmData {
    /// Builds a design with an intercept followed by `columns`.
    pub fn new<K: Hash + Eq>(
        y: Vec<f64>,
        columns: Vec<(String, Vec<f64>)>,
        cluster: &[K],
    ) -> Result<Self, StatsError> {
        let n = y.len();
        if cluster.len() != n {
            return Err(StatsError::LengthMismatch {
                left: n,
                right: cluster.len(),
            });
        }
        if let Some((name, col)) = columns.iter().find(|(_, c)| c.len() != n) {
            return Err(StatsError::InvalidInput(format!(
                "column {name} has {} values, expected {n}",
                col.len()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite("y".into()));
        }
        if let Some((name, _)) = columns.iter().find(|(_, c)| c.iter().any(|v| !v.is_finite())) {
            return Err(StatsError::NonFinite(name.clone()));
        }

        let mut ids = HashMap::new();
        let cluster: Vec<usize> = cluster
            .iter()
            .map(|k| {
                let next = ids.len();
                *ids.entry(k).or_insert(next)
            })
            .collect();
        let n_clusters = ids.len();
        if n_clusters < 2 {
            return Err(StatsError::InvalidInput(format!(
                "{n_clusters} clusters, need at least 2"
            )));
        }
        if n < 2 * n_clusters {
            return Err(StatsError::InvalidInput(format!(
                "{n} rows for {n_clusters} clusters, need at least 2 rows per cluster on average"
            )));
        }

        let p = columns.len() + 1;
        let mut names = Vec::with_capacity(p);
        names.push("(intercept)".to_string());
        let x = DMatrix::from_fn(n, p, |i, j| if j == 0 { 1.0 } else { columns[j - 1].1[i] });
        names.extend(columns.into_iter().map(|(name, _)| name));

        let data = Self {
            y: DVector::from_vec(y),
            x,
            names,
            cluster,
            n_clusters,
        };
        data.check_rank()?;
        Ok(data)
    }

    pub fn intercept_only<K: Hash + Eq>(y: Vec<f64>, cluster: &[K]) -> Result<Self, StatsError> {
        Self::new(y, Vec::new(), cluster)
    }

    /// Intercept plus one real covariate.
    pub fn numeric<K: Hash + Eq>(
        y: Vec<f64>,
        name: impl Into<String>,
        x: Vec<f64>,
        cluster: &[K],
    ) -> Result<Self, StatsError> {
        Self::new(y, vec![(name.into(), x)], cluster)
    }

    /// Intercept plus one dummy per non-reference level, in order of first appearance.
    pub fn categorical<K: Hash + Eq, L: PartialEq + ToString>(
        y: Vec<f64>,
        levels: &[L],
        reference: &L,
        cluster: &[K],
    ) -> Result<Self, StatsError> {
        let mut distinct: Vec<&L> = Vec::new();
        for l in levels {
            if l != reference && !distinct.contains(&l) {
                distinct.push(l);
            }
        }
        if !levels.contains(reference) {
            return Err(StatsError::InvalidInput(format!(
                "reference level {} does not occur",
                reference.to_string()
            )));
        }
        let columns = distinct
            .into_iter()
            .map(|lv| {
                let col = levels.iter().map(|l| if l == lv { 1.0 } else { 0.0 }).collect();
                (lv.to_string(), col)
            })
            .collect();
        Self::new(y, columns, cluster)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn n_clusters(&self) -> usize {
        self.n_clusters
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    fn check_rank(&self) -> Result<(), StatsError> {
        let xtx = self.x.transpose() * &self.x;
        let scale: Vec<f64> = xtx.diagonal().iter().map(|d| d.sqrt()).collect();
        if scale.contains(&0.0) {
            return Err(StatsError::RankDeficientDesign);
        }
        let p = xtx.nrows();
        let corr = DMatrix::from_fn(p, p, |i, j| xtx[(i, j)] / (scale[i] * scale[j]));
        let eig = corr.symmetric_eigenvalues();
        if eig.min() <= 1e-10 * eig.max() {
            return Err(StatsError::RankDeficientDesign);
        }
        Ok(())
    }

    fn cluster_sizes(&self) -> Vec<f64> {
        let mut sizes = vec![0.0; self.n_clusters];
        for &c in &self.cluster {
            sizes[c] += 1.0;
        }
        sizes
    }

    /// Profile log-likelihood at `lambda = s2u / s2e` (`lambda >= 0`).
    pub fn profile_loglik(&self, lambda: f64) -> Result<f64, StatsError> {
        Ok(Profiler::new(self).at(lambda)?.loglik)
    }
}

struct Profile {
    loglik: f64,
    beta: DVector<f64>,
    sigma2_e: f64,
    chol: Cholesky<f64, Dyn>,
}

/// Cluster-level sums reused across likelihood evaluations.
struct Profiler<'a> {
    data: &'a LmmData,
    sizes: Vec<f64>,
    sum_x: Vec<DVector<f64>>,
    sum_y: Vec<f64>,
    xtx: DMatrix<f64>,
    xty: DVector<f64>,
}

impl<'a> Profiler<'a> {
    fn new(data: &'a LmmData) -> Self {
        let p = data.x.ncols();
        let mut sum_x = vec![DVector::zeros(p); data.n_clusters];
        let mut sum_y = vec![0.0; data.n_clusters];
        for (i, &c) in data.cluster.iter().enumerate() {
            sum_x[c] += data.x.row(i).transpose();
            sum_y[c] += data.y[i];
        }
        Self {
            data,
            sizes: data.cluster_sizes(),
            sum_x,
            sum_y,
            xtx: data.x.transpose() * &data.x,
            xty: data.x.transpose() * &data.y,
        }
    }

    fn at(&self, lambda: f64) -> Result<Profile, StatsError> {
        let d = self.data;
        let n = d.n() as f64;
        let mut xtvx = self.xtx.clone();
        let mut xtvy = self.xty.clone();
        let mut logdet = 0.0;
        let w: Vec<f64> = self.sizes.iter().map(|&nc| lambda / (1.0 + nc * lambda)).collect();
        for ((&wc, &nc), (sx, &sy)) in w.iter().zip(&self.sizes).zip(self.sum_x.iter().zip(&self.sum_y)) {
            xtvx -= wc * sx * sx.transpose();
            xtvy -= wc * sy * sx;
            logdet += (nc * lambda).ln_1p();
        }
        let chol = Cholesky::new(xtvx).ok_or(StatsError::RankDeficientDesign)?;
        let beta = chol.solve(&xtvy);

        // r' V^-1 r from residuals directly rather than by cancellation.
        let resid = &d.y - &d.x * &beta;
        let mut sum_r = vec![0.0; d.n_clusters];
        let mut rss = 0.0;
        for (i, &c) in d.cluster.iter().enumerate() {
            sum_r[c] += resid[i];
            rss += resid[i] * resid[i];
        }
        for c in 0..d.n_clusters {
            rss -= w[c] * sum_r[c] * sum_r[c];
        }
        let sigma2_e = (rss / n).max(0.0);
        let loglik = if sigma2_e > 0.0 {
            -0.5 * (n * (2.0 * PI * sigma2_e).ln() + logdet + n)
        } else {
            f64::INFINITY
        };
        Ok(Profile {
            loglik,
            beta,
            sigma2_e,
            chol,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmmFit {
    pub names: Vec<String>,
    pub beta: Vec<f64>,
    pub se: Vec<f64>,
    pub z: Vec<f64>,
    /// Two-sided normal p-values.
    pub p: Vec<f64>,
    pub ci95: Vec<(f64, f64)>,
    /// Covariance of `beta`.
    pub cov: DMatrix<f64>,
    pub sigma2_e: f64,
    pub sigma2_u: f64,
    /// `sigma2_u / sigma2_e` at the optimum (0 on the boundary).
    pub lambda: f64,
    pub loglik: f64,
    pub n: usize,
    pub n_clusters: usize,
    /// The fixed effects reproduce `y` exactly: residual variance is 0 and
    /// standard errors are 0.
    pub perfect_fit: bool,
}

impl LmmFit {
    /// Indices of every coefficient except the intercept.
    pub fn slope_indices(&self) -> Vec<usize> {
        (1..self.beta.len()).collect()
    }
}

fn golden_max<F>(f: F, mut a: f64, mut b: f64) -> Result<(f64, f64), StatsError>
where
    F: Fn(f64) -> Result<f64, StatsError>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    for _ in 0..500 {
        if b - a < 1e-9 || ((f1 - f2).abs() < LOGLIK_TOL && b - a < 1e-5) {
            break;
        }
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 >= f2 { (x1, f1) } else { (x2, f2) })
}

/// Maximum-likelihood fit.
///
/// The profile likelihood in `log lambda` is scanned on `[-12, 12]` in steps
/// of 0.25, refined by golden-section search around the best grid point, and
/// compared with the `lambda = 0` boundary.
pub fn fit_lmm(data: &LmmData) -> Result<LmmFit, StatsError> {
    let prof = Profiler::new(data);
    let at_log = |l: f64| prof.at(l.exp()).map(|p| p.loglik);

    let ols = prof.at(0.0)?;
    let mean_sq = data.y.norm_squared() / data.n() as f64;
    if ols.sigma2_e <= 1e-20 * mean_sq || mean_sq == 0.0 {
        return Ok(build_fit(data, ols, 0.0, true));
    }

    let steps = ((LOG_LAMBDA_MAX - LOG_LAMBDA_MIN) / GRID_STEP).round() as usize;
    let grid: Vec<f64> = (0..=steps)
        .map(|i| LOG_LAMBDA_MIN + GRID_STEP * i as f64)
        .collect();
    let mut best = (0, f64::NEG_INFINITY);
    for (i, &l) in grid.iter().enumerate() {
        let ll = at_log(l)?;
        if ll > best.1 {
            best = (i, ll);
        }
    }
    if best.1.is_infinite() {
        return Err(StatsError::NonConvergence(
            "residual variance vanishes inside the search range".into(),
        ));
    }
    let lo = grid[best.0.saturating_sub(1)];
    let hi = grid[(best.0 + 1).min(steps)];
    let (log_lambda, ll) = golden_max(at_log, lo, hi)?;
    if LOG_LAMBDA_MAX - log_lambda < 1e-6 {
        return Err(StatsError::NonConvergence(format!(
            "likelihood still increasing at log lambda = {LOG_LAMBDA_MAX}; bracket exhausted"
        )));
    }

    if ols.loglik >= ll {
        Ok(build_fit(data, ols, 0.0, false))
    } else {
        let lambda = log_lambda.exp();
        Ok(build_fit(data, prof.at(lambda)?, lambda, false))
    }
}

fn build_fit(data: &LmmData, prof: Profile, lambda: f64, perfect_fit: bool) -> LmmFit {
    let sigma2_e = if perfect_fit { 0.0 } else { prof.sigma2_e };
    let cov = prof.chol.inverse() * sigma2_e;
    let beta: Vec<f64> = prof.beta.iter().copied().collect();
    let se: Vec<f64> = cov.diagonal().iter().map(|v| v.max(0.0).sqrt()).collect();
    let (z, p): (Vec<f64>, Vec<f64>) = beta
        .iter()
        .zip(&se)
        .map(|(&b, &s)| {
            if s > 0.0 {
                (b / s, normal_two_sided(b / s))
            } else if b == 0.0 {
                (0.0, 1.0)
            } else {
                (b.signum() * f64::INFINITY, 0.0)
            }
        })
        .unzip();
    let ci95 = beta
        .iter()
        .zip(&se)
        .map(|(&b, &s)| (b - Z_95 * s, b + Z_95 * s))
        .collect();
    LmmFit {
        names: data.names.clone(),
        beta,
        se,
        z,
        p,
        ci95,
        cov,
        sigma2_e,
        sigma2_u: lambda * sigma2_e,
        lambda,
        loglik: prof.loglik,
        n: data.n(),
        n_clusters: data.n_clusters,
        perfect_fit,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaldTest {
    pub chi2: f64,
    pub df: usize,
    pub p: f64,
}

/// Joint Wald test that the selected coefficients are all zero.
pub fn wald_chi2(fit: &LmmFit, indices: &[usize]) -> Result<WaldTest, StatsError> {
    let k = fit.beta.len();
    if indices.is_empty() {
        return Err(StatsError::InvalidInput("no coefficients selected".into()));
    }
    for (pos, &i) in indices.iter().enumerate() {
        if i >= k || indices[..pos].contains(&i) {
            return Err(StatsError::InvalidInput(format!(
                "coefficient index {i} is out of range or repeated"
            )));
        }
    }
    let df = indices.len();
    let b = DVector::from_iterator(df, indices.iter().map(|&i| fit.beta[i]));
    if b.iter().all(|&v| v == 0.0) {
        return Ok(WaldTest { chi2: 0.0, df, p: 1.0 });
    }
    let v = DMatrix::from_fn(df, df, |r, c| fit.cov[(indices[r], indices[c])]);
    let chol = Cholesky::new(v).ok_or(StatsError::SingularCovariance)?;
    let chi2 = b.dot(&chol.solve(&b));
    Ok(WaldTest {
        chi2,
        df,
        p: chi2_sf(chi2, df as f64),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PseudoR2 {
    /// Snijders/Bosker: proportional reduction of total variance.
    pub r2_sb: f64,
    /// Bryk/Raudenbush: proportional reduction of residual variance.
    pub r2_br: f64,
    /// `r2_sb / (1 - r2_sb)`.
    pub f2: f64,
}

pub fn pseudo_r2(null: &LmmFit, full: &LmmFit) -> Result<PseudoR2, StatsError> {
    if null.n != full.n || null.n_clusters != full.n_clusters {
        return Err(StatsError::InvalidInput(
            "null and full fits use different data".into(),
        ));
    }
    let total_null = null.sigma2_e + null.sigma2_u;
    if total_null <= 0.0 || null.sigma2_e <= 0.0 {
        return Err(StatsError::DegenerateNull);
    }
    let r2_sb = 1.0 - (full.sigma2_e + full.sigma2_u) / total_null;
    let r2_br = 1.0 - full.sigma2_e / null.sigma2_e;
    let f2 = if r2_sb < 1.0 {
        r2_sb / (1.0 - r2_sb)
    } else {
        f64::INFINITY
    };
    Ok(PseudoR2 { r2_sb, r2_br, f2 })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// y = 2 + 0.5 x + cluster effect + noise, with a fixed pseudo-random pattern.
    fn panel(cluster_sd: f64) -> (Vec<f64>, Vec<f64>, Vec<usize>) {
        let mut y = Vec::new();
        let mut x = Vec::new();
        let mut cl = Vec::new();
        let mut state = 12345u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        for c in 0..20 {
            let u = cluster_sd * next() * 3.5;
            for _ in 0..8 {
                let xi = 10.0 * next();
                x.push(xi);
                y.push(2.0 + 0.5 * xi + u + next());
                cl.push(c);
            }
        }
        (y, x, cl)
    }

    fn ols(y: &[f64], x: &[f64]) -> (f64, f64, f64) {
        let n = y.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let slope = sxy / sxx;
        let icpt = my - slope * mx;
        let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - icpt - slope * a).powi(2)).sum();
        // ML residual variance
        (icpt, slope, (rss / n / sxx).sqrt())
    }

    #[test]
    fn perfect_linear_fit() {
        let x: Vec<f64> = (0..12).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 2.0 * v).collect();
        let cl: Vec<usize> = (0..12).map(|i| i % 3).collect();
        let fit = fit_lmm(&LmmData::numeric(y, "x", x, &cl).unwrap()).unwrap();
        assert!(fit.perfect_fit);
        assert!((fit.beta[1] + 2.0).abs() < 1e-10);
        assert_eq!((fit.sigma2_e, fit.sigma2_u), (0.0, 0.0));
    }

    #[test]
    fn strong_clusters_are_detected() {
        let (y, x, cl) = panel(2.0);
        let fit = fit_lmm(&LmmData::numeric(y, "x", x, &cl).unwrap()).unwrap();
        assert!(fit.sigma2_u > fit.sigma2_e);
        assert!((fit.beta[1] - 0.5).abs() < 0.05);
        for (b, (lo, hi)) in fit.beta.iter().zip(&fit.ci95) {
            assert!(lo < b && b < hi);
        }
    }

    #[test]
    fn boundary_matches_ols() {
        // Within every cluster the noise cancels around points on a line, so
        // the OLS residuals sum to zero per cluster and the optimum is lambda = 0.
        let (mut y, mut x, mut cl) = (Vec::new(), Vec::new(), Vec::new());
        for c in 0..10 {
            for (k, e) in [(0.0, 0.3 + 0.05 * c as f64), (0.5, 0.7)] {
                let xi = c as f64 + k;
                for sign in [1.0, -1.0] {
                    x.push(xi);
                    y.push(2.0 + 0.5 * xi + sign * e);
                    cl.push(c);
                }
            }
        }
        let data = LmmData::numeric(y.clone(), "x", x.clone(), &cl).unwrap();
        let fit = fit_lmm(&data).unwrap();
        assert_eq!(fit.lambda, 0.0);
        assert_eq!(fit.sigma2_u, 0.0);
        let (a, b, se_b) = ols(&y, &x);
        assert!((fit.beta[0] - a).abs() < 1e-6);
        assert!((fit.beta[1] - b).abs() < 1e-6);
        assert!((fit.se[1] - se_b).abs() < 1e-6);
    }

    #[test]
    fn optimum_is_local_max() {
        let (y, x, cl) = panel(1.0);
        let data = LmmData::numeric(y, "x", x, &cl).unwrap();
        let fit = fit_lmm(&data).unwrap();
        assert!(fit.lambda > 0.0);
        let ll = data.profile_loglik(fit.lambda).unwrap();
        assert!((ll - fit.loglik).abs() < 1e-9);
        assert!(ll >= data.profile_loglik(fit.lambda / 2.0).unwrap());
        assert!(ll >= data.profile_loglik(fit.lambda * 2.0).unwrap());
    }

    #[test]
    fn wald_single_coefficient_is_z_squared() {
        let (y, x, cl) = panel(1.0);
        let fit = fit_lmm(&LmmData::numeric(y, "x", x, &cl).unwrap()).unwrap();
        let w = wald_chi2(&fit, &[1]).unwrap();
        assert!((w.chi2 - fit.z[1] * fit.z[1]).abs() < 1e-9 * w.chi2);
        assert_eq!(w.df, 1);
        assert!(wald_chi2(&fit, &[]).is_err());
        assert!(wald_chi2(&fit, &[2]).is_err());
        assert!(wald_chi2(&fit, &[1, 1]).is_err());
    }

    #[test]
    fn wald_zero_coefficients() {
        let (y, x, cl) = panel(1.0);
        let mut fit = fit_lmm(&LmmData::numeric(y, "x", x, &cl).unwrap()).unwrap();
        fit.beta = vec![0.0, 0.0];
        let w = wald_chi2(&fit, &[0, 1]).unwrap();
        assert_eq!((w.chi2, w.p, w.df), (0.0, 1.0, 2));
    }

    #[test]
    fn pseudo_r2_cases() {
        let (y, x, cl) = panel(1.0);
        let null = fit_lmm(&LmmData::intercept_only(y.clone(), &cl).unwrap()).unwrap();
        let full = fit_lmm(&LmmData::numeric(y, "x", x, &cl).unwrap()).unwrap();
        let same = pseudo_r2(&null, &null).unwrap();
        assert_eq!((same.r2_sb, same.r2_br, same.f2), (0.0, 0.0, 0.0));
        let r = pseudo_r2(&null, &full).unwrap();
        assert!(r.r2_sb > 0.5 && r.r2_sb < 1.0);
        assert!((r.f2 - r.r2_sb / (1.0 - r.r2_sb)).abs() < 1e-12);
    }

    #[test]
    fn degenerate_null() {
        let (y, x, cl) = panel(1.0);
        let full = fit_lmm(&LmmData::numeric(y, "x", x, &cl).unwrap()).unwrap();
        let mut null = full.clone();
        null.sigma2_e = 0.0;
        null.sigma2_u = 0.0;
        assert_eq!(pseudo_r2(&null, &full), Err(StatsError::DegenerateNull));
    }

    #[test]
    fn categorical_design() {
        let levels = ["a", "b", "c", "a", "b", "c", "a", "b", "c", "a", "b", "c"];
        let y = vec![1.0, 2.0, 3.5, 1.2, 2.1, 3.0, 0.9, 1.8, 3.2, 1.1, 2.3, 2.9];
        let cl = [0, 0, 0, 1, 1, 1, 2, 2, 2, 3, 3, 3];
        let data = LmmData::categorical(y, &levels, &"a", &cl).unwrap();
        assert_eq!(data.names(), ["(intercept)", "b", "c"]);
        let fit = fit_lmm(&data).unwrap();
        assert!((fit.beta[0] - 1.05).abs() < 1e-6);
        assert!((fit.beta[1] - 1.0).abs() < 1e-6);
        assert!((fit.beta[2] - 2.1).abs() < 1e-6);
    }

    #[test]
    fn input_errors() {
        let y = vec![1.0, 2.0, 3.0, 4.0];
        assert_eq!(
            LmmData::numeric(y.clone(), "x", vec![1.0; 4], &[0, 0, 1, 1]).unwrap_err(),
            StatsError::RankDeficientDesign
        );
        assert!(LmmData::intercept_only(y.clone(), &[0, 0, 0, 0]).is_err());
        assert!(LmmData::intercept_only(y.clone(), &[0, 0, 1, 1]).is_ok());
        assert!(LmmData::intercept_only(y.clone(), &[0, 1, 2, 2]).is_err());
        assert!(LmmData::intercept_only(y.clone(), &[0, 1, 2, 3]).is_err());
        assert!(LmmData::intercept_only(y, &[0, 1]).is_err());
    }
}
