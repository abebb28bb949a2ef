//! Two-component principal component analysis of state representations via
//! power iteration with deflation — enough for the projection plots without
//! pulling in a dense eigensolver.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::AnalysisError;

/// Convergence tolerance on the iterated direction vector.
const POWER_TOL: f64 = 1e-10;
/// Iteration cap; near-tied eigenvalues converge slowly and are accepted
/// as-is at the cap (any direction in a tied subspace explains the same
/// variance).
const MAX_POWER_ITERS: usize = 10_000;

/// Top-2 principal component decomposition of a point cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaResult {
    /// Two orthonormal directions in representation space, `[2, d]`.
    pub components: Array2<f64>,
    /// Input points projected onto the components, `[n, 2]`, zero-mean per
    /// column.
    pub projected: Array2<f64>,
    /// Fraction of total variance each component explains; nonincreasing.
    pub explained_variance_ratio: [f64; 2],
}

/// Project `representations` (`[n, d]`, one point per row) onto their top
/// two principal components. `betas` only rides along for coloring in the
/// rendered artifacts; its length must match the row count.
///
/// Points are centered internally; the covariance uses the population
/// convention. Identical points (zero variance) are a degenerate input.
pub fn pca_project(
    representations: &Array2<f64>,
    betas: &[f64],
) -> Result<PcaResult, AnalysisError> {
    let (n, d) = representations.dim();
    if n < 3 {
        return Err(AnalysisError::InvalidInput(format!(
            "projection needs at least 3 points, got {n}"
        )));
    }
    if d < 2 {
        return Err(AnalysisError::InvalidInput(format!(
            "projection needs at least 2 dimensions, got {d}"
        )));
    }
    if betas.len() != n {
        return Err(AnalysisError::InvalidInput(format!(
            "{n} points but {} scale values",
            betas.len()
        )));
    }

    let means = representations.mean_axis(ndarray::Axis(0)).expect("n >= 3");
    let centered = representations - &means.view().insert_axis(ndarray::Axis(0));
    let cov = centered.t().dot(&centered) / n as f64;
    let total_variance: f64 = cov.diag().sum();
    let magnitude = representations
        .iter()
        .fold(0.0f64, |m, &v| m.max(v.abs()))
        .max(1.0);
    if total_variance <= 1e-24 * magnitude * magnitude {
        return Err(AnalysisError::InvalidInput(
            "representations are (numerically) all identical; no principal directions".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0x9ca);
    let v1 = power_iterate(&cov, &[], &mut rng);
    let lambda1 = rayleigh(&cov, &v1);
    let v2 = power_iterate(&cov, std::slice::from_ref(&v1), &mut rng);
    let lambda2 = rayleigh(&cov, &v2);

    // Ordering is part of the contract; near-ties can converge either way.
    let (first, second, l1, l2) = if lambda2 > lambda1 {
        (v2, v1, lambda2, lambda1)
    } else {
        (v1, v2, lambda1, lambda2)
    };

    let mut components = Array2::zeros((2, d));
    components.row_mut(0).assign(&canonical_sign(first));
    components.row_mut(1).assign(&canonical_sign(second));
    let projected = centered.dot(&components.t());
    let ratio = |l: f64| (l / total_variance).clamp(0.0, 1.0);
    Ok(PcaResult {
        components,
        projected,
        explained_variance_ratio: [ratio(l1), ratio(l2)],
    })
}

/// Dominant eigenvector of `cov` restricted to the complement of
/// `exclude` (already-found components), by power iteration with
/// re-orthogonalization each step.
fn power_iterate(cov: &Array2<f64>, exclude: &[Array1<f64>], rng: &mut impl Rng) -> Array1<f64> {
    let d = cov.nrows();
    let scale: f64 = cov.diag().sum();
    // In the fully deflated (rank-exhausted) case the matrix annihilates the
    // remaining subspace; any orthonormal completion is a valid component.
    let zero_tol = scale * 1e-14;

    let mut v = Array1::from_shape_fn(d, |_| rng.random::<f64>() - 0.5);
    orthogonalize(&mut v, exclude);
    if normalize(&mut v) < 1e-12 {
        return orthonormal_filler(exclude);
    }
    for _ in 0..MAX_POWER_ITERS {
        let mut w = cov.dot(&v);
        orthogonalize(&mut w, exclude);
        if normalize(&mut w) <= zero_tol {
            // Eigenvalue numerically zero on this subspace.
            return v;
        }
        if w.dot(&v) < 0.0 {
            w.mapv_inplace(|x| -x);
        }
        let delta = (&w - &v).iter().fold(0.0f64, |m, &x| m.max(x.abs()));
        v = w;
        if delta < POWER_TOL {
            break;
        }
    }
    v
}

fn rayleigh(cov: &Array2<f64>, v: &Array1<f64>) -> f64 {
    v.dot(&cov.dot(v)).max(0.0)
}

fn orthogonalize(v: &mut Array1<f64>, basis: &[Array1<f64>]) {
    for b in basis {
        let proj = v.dot(b);
        v.zip_mut_with(b, |x, &bx| *x -= proj * bx);
    }
}

/// Normalize in place; returns the pre-normalization norm.
fn normalize(v: &mut Array1<f64>) -> f64 {
    let norm = v.dot(&*v).sqrt();
    if norm > 0.0 {
        v.mapv_inplace(|x| x / norm);
    }
    norm
}

/// A unit vector orthogonal to `basis`, from the standard basis vector
/// least represented in it.
fn orthonormal_filler(basis: &[Array1<f64>]) -> Array1<f64> {
    let d = basis.first().map_or(1, Array1::len);
    let mut best = Array1::zeros(d);
    let mut best_norm = -1.0;
    for i in 0..d {
        let mut e = Array1::zeros(d);
        e[i] = 1.0;
        orthogonalize(&mut e, basis);
        let norm = normalize(&mut e);
        if norm > best_norm {
            best_norm = norm;
            best = e;
        }
    }
    best
}

/// Flip the sign so the largest-magnitude entry is positive, making the
/// decomposition deterministic.
fn canonical_sign(mut v: Array1<f64>) -> Array1<f64> {
    let mut lead = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[lead].abs() {
            lead = i;
        }
    }
    if v[lead] < 0.0 {
        v.mapv_inplace(|x| -x);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Dense symmetric eigenvalue oracle: cyclic Jacobi rotations.
    pub(crate) fn jacobi_eigenvalues(mut a: Array2<f64>) -> Vec<f64> {
        let d = a.nrows();
        for _sweep in 0..200 {
            let mut off = 0.0;
            for p in 0..d {
                for q in p + 1..d {
                    off += a[(p, q)] * a[(p, q)];
                }
            }
            if off < 1e-30 {
                break;
            }
            for p in 0..d {
                for q in p + 1..d {
                    let apq = a[(p, q)];
                    if apq.abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..d {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..d {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut eig: Vec<f64> = (0..d).map(|i| a[(i, i)]).collect();
        eig.sort_by(|x, y| y.partial_cmp(x).unwrap());
        eig
    }

    /// Oracle top-2 explained-variance ratios for a point cloud.
    pub(crate) fn oracle_ratios(points: &Array2<f64>) -> [f64; 2] {
        let n = points.nrows();
        let means = points.mean_axis(ndarray::Axis(0)).unwrap();
        let centered = points - &means.view().insert_axis(ndarray::Axis(0));
        let cov = centered.t().dot(&centered) / n as f64;
        let total: f64 = cov.diag().sum();
        let eig = jacobi_eigenvalues(cov);
        [eig[0] / total, eig[1] / total]
    }

    fn random_cloud(rng: &mut impl Rng, n: usize, d: usize) -> Array2<f64> {
        Array2::from_shape_fn((n, d), |_| rng.random::<f64>() * 2.0 - 1.0)
    }

    #[test]
    fn jacobi_oracle_solves_a_known_two_by_two() {
        let a = ndarray::array![[2.0, 1.0], [1.0, 2.0]];
        let eig = jacobi_eigenvalues(a);
        assert!((eig[0] - 3.0).abs() < 1e-12);
        assert!((eig[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn collinear_points_explain_everything_with_one_component() {
        let dir = [1.0, -2.0, 0.5];
        let points = Array2::from_shape_fn((20, 3), |(i, j)| (i as f64 - 10.0) * dir[j]);
        let betas = vec![1.0; 20];
        let pca = pca_project(&points, &betas).unwrap();
        let [r1, r2] = pca.explained_variance_ratio;
        assert!((r1 - 1.0).abs() < 1e-8, "first ratio {r1}");
        assert!(r2.abs() < 1e-8, "second ratio {r2}");
        // The first component is the line direction (up to sign).
        let norm = (dir.iter().map(|x| x * x).sum::<f64>()).sqrt();
        let cos: f64 = pca
            .components
            .row(0)
            .iter()
            .zip(&dir)
            .map(|(&c, &d)| c * d / norm)
            .sum();
        assert!(cos.abs() > 1.0 - 1e-8, "component misaligned: cos {cos}");
    }

    #[test]
    fn isotropic_cloud_splits_variance_roughly_evenly() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let points = random_cloud(&mut rng, 10_000, 2);
        let pca = pca_project(&points, &vec![0.5; 10_000]).unwrap();
        let [r1, r2] = pca.explained_variance_ratio;
        assert!((r1 - 0.5).abs() < 0.05, "{r1}");
        assert!((r2 - 0.5).abs() < 0.05, "{r2}");
    }

    #[test]
    fn fixed_small_matrix_matches_the_dense_oracle() {
        let points = ndarray::array![
            [0.2, -1.0, 0.4],
            [1.5, 0.3, -0.2],
            [-0.7, 0.8, 1.1],
            [0.0, -0.5, 0.9],
            [2.1, 0.4, -1.3],
        ];
        let pca = pca_project(&points, &[1.0; 5]).unwrap();
        let oracle = oracle_ratios(&points);
        for (got, want) in pca.explained_variance_ratio.iter().zip(oracle) {
            assert!((got - want).abs() < 1e-8, "{got} vs oracle {want}");
        }
    }

    #[test]
    fn random_clouds_match_the_oracle_and_keep_the_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for trial in 0..20 {
            let n = rng.random_range(10..60);
            let d = rng.random_range(3..7);
            let points = random_cloud(&mut rng, n, d);
            let betas = vec![1.0; n];
            let pca = pca_project(&points, &betas).unwrap();

            let oracle = oracle_ratios(&points);
            for (k, (got, want)) in pca
                .explained_variance_ratio
                .iter()
                .zip(oracle)
                .enumerate()
            {
                assert!(
                    (got - want).abs() < 1e-8,
                    "trial {trial} component {k}: {got} vs {want}"
                );
            }

            // Orthonormal components.
            let c0 = pca.components.row(0);
            let c1 = pca.components.row(1);
            assert!((c0.dot(&c0) - 1.0).abs() < 1e-8);
            assert!((c1.dot(&c1) - 1.0).abs() < 1e-8);
            assert!(c0.dot(&c1).abs() < 1e-8);

            // Ratios in range, ordered, and jointly below 1.
            let [r1, r2] = pca.explained_variance_ratio;
            assert!((0.0..=1.0).contains(&r1) && (0.0..=1.0).contains(&r2));
            assert!(r1 >= r2);
            assert!(r1 + r2 <= 1.0 + 1e-8);

            // Projections are centered.
            for col in 0..2 {
                let mu: f64 =
                    pca.projected.column(col).sum() / pca.projected.nrows() as f64;
                assert!(mu.abs() < 1e-8, "trial {trial}: projection mean {mu}");
            }

            // Projected variance along each component equals its ratio of
            // the total.
            let total: f64 = {
                let means = points.mean_axis(ndarray::Axis(0)).unwrap();
                let centered = &points - &means.view().insert_axis(ndarray::Axis(0));
                centered.iter().map(|x| x * x).sum::<f64>() / n as f64
            };
            for (col, r) in [r1, r2].into_iter().enumerate() {
                let var: f64 = pca
                    .projected
                    .column(col)
                    .iter()
                    .map(|x| x * x)
                    .sum::<f64>()
                    / n as f64;
                assert!((var - r * total).abs() < 1e-8 * total.max(1.0));
            }
        }
    }

    #[test]
    fn identical_points_are_a_degenerate_input() {
        let points = Array2::from_elem((5, 3), 0.7);
        let err = pca_project(&points, &[1.0; 5]).unwrap_err();
        assert!(matches!(err, AnalysisError::InvalidInput(_)));
    }

    #[test]
    fn too_few_points_dimensions_or_mismatched_betas_are_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let ok = random_cloud(&mut rng, 5, 3);
        assert!(pca_project(&ok.slice(ndarray::s![..2, ..]).to_owned(), &[1.0; 2]).is_err());
        assert!(pca_project(&ok.slice(ndarray::s![.., ..1]).to_owned(), &[1.0; 5]).is_err());
        assert!(pca_project(&ok, &[1.0; 4]).is_err());
    }

    #[test]
    fn decomposition_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let points = random_cloud(&mut rng, 40, 4);
        let a = pca_project(&points, &[1.0; 40]).unwrap();
        let b = pca_project(&points, &[1.0; 40]).unwrap();
        assert_eq!(a, b);
    }
}
