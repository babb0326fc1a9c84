//! Topic-supervised NMF: minimise ‖X − (W⊙L)H‖_F over W, H ≥ 0 with masked
//! multiplicative updates. Plain NMF is the all-ones mask.

use std::fmt::Write as _;

use ndarray::{Array2, Zip};
use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labeler::ConstraintMatrix;
use crate::vectorizer::{parse_coordinate, DocTermMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub k: usize,
    pub max_iter: usize,
    /// Stop once the relative change of the objective drops below this.
    pub tol: f64,
    /// Added to every update denominator.
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            k: 80,
            max_iter: 200,
            tol: 1e-4,
            epsilon: 1e-12,
            seed: 42,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tol must be positive, got {}", self.tol)));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Factorization {
    /// Document-topic coefficients, n×k. Zero wherever the mask is zero.
    pub w: Array2<f64>,
    /// Topic-word components, k×w.
    pub h: Array2<f64>,
    /// Objective at initialisation followed by one value per iteration.
    pub objective_trace: Vec<f64>,
    pub iterations_run: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct FitSummary {
    k: usize,
    iterations_run: usize,
    converged: bool,
    objective_trace: Vec<f64>,
}

impl Factorization {
    pub fn final_objective(&self) -> f64 {
        *self.objective_trace.last().expect("trace holds the initial objective")
    }

    pub fn k(&self) -> usize {
        self.w.ncols()
    }

    /// JSON sidecar `{k, iterations_run, converged, objective_trace}`.
    pub fn summary_json(&self) -> String {
        let summary = FitSummary {
            k: self.k(),
            iterations_run: self.iterations_run,
            converged: self.converged,
            objective_trace: self.objective_trace.clone(),
        };
        serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n"
    }

    pub fn from_parts(w_coo: &str, h_coo: &str, summary_json: &str) -> Result<Self> {
        let summary: FitSummary = serde_json::from_str(summary_json).map_err(|e| Error::Parse {
            path: "fit summary".into(),
            line: e.line(),
            message: e.to_string(),
        })?;
        let w = dense_from_coordinate(w_coo)?;
        let h = dense_from_coordinate(h_coo)?;
        if w.ncols() != summary.k || h.nrows() != summary.k {
            return Err(Error::Dimension("factor shapes disagree with k".into()));
        }
        Ok(Factorization {
            w,
            h,
            objective_trace: summary.objective_trace,
            iterations_run: summary.iterations_run,
            converged: summary.converged,
        })
    }
}

/// Non-zero entries of a dense matrix in coordinate text form.
pub fn dense_to_coordinate(m: &Array2<f64>) -> String {
    let nnz = m.iter().filter(|&&v| v != 0.0).count();
    let mut out = String::new();
    writeln!(out, "{} {} {nnz}", m.nrows(), m.ncols()).unwrap();
    for ((i, j), &v) in m.indexed_iter() {
        if v != 0.0 {
            writeln!(out, "{i} {j} {v}").unwrap();
        }
    }
    out
}

pub fn dense_from_coordinate(text: &str) -> Result<Array2<f64>> {
    let (rows, cols, entries) = parse_coordinate(text)?;
    let mut m = Array2::zeros((rows, cols));
    for (i, j, v) in entries {
        if i >= rows || j >= cols {
            return Err(Error::Dimension(format!("entry ({i}, {j}) outside {rows}x{cols}")));
        }
        m[[i, j]] = v;
    }
    Ok(m)
}

fn mask_of(l: &ConstraintMatrix) -> Array2<f64> {
    Array2::from_shape_vec((l.n(), l.k()), l.to_dense()).expect("mask shape")
}

fn check_shapes(x: &DocTermMatrix, l: &ConstraintMatrix, k: usize) -> Result<()> {
    if l.n() != x.rows() {
        return Err(Error::Dimension(format!(
            "constraint matrix has {} rows but X has {}",
            l.n(),
            x.rows()
        )));
    }
    if l.k() != k {
        return Err(Error::Dimension(format!("constraint matrix has {} columns but k = {k}", l.k())));
    }
    Ok(())
}

/// Seeded uniform (0, 1) factors scaled by sqrt(mean(X) / k), with the mask
/// applied to W.
pub fn init_factors(
    x: &DocTermMatrix,
    l: &ConstraintMatrix,
    config: &SolverConfig,
) -> Result<(Array2<f64>, Array2<f64>)> {
    config.validate()?;
    check_shapes(x, l, config.k)?;
    let (n, w, k) = (x.rows(), x.cols(), config.k);
    let scale = (x.mean() / k as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut draw = |_: (usize, usize)| scale * rng.sample::<f64, _>(Open01);
    let mut w0 = Array2::from_shape_fn((n, k), &mut draw);
    let h0 = Array2::from_shape_fn((k, w), &mut draw);
    w0 *= &mask_of(l);
    Ok((w0, h0))
}

/// X Hᵀ for sparse X, n×k.
fn x_times_ht(x: &DocTermMatrix, h: &Array2<f64>) -> Array2<f64> {
    let k = h.nrows();
    let mut out = Array2::zeros((x.rows(), k));
    for i in 0..x.rows() {
        let (cols, vals) = x.row(i);
        let mut row = out.row_mut(i);
        for (&j, &v) in cols.iter().zip(vals) {
            for c in 0..k {
                row[c] += v * h[[c, j]];
            }
        }
    }
    out
}

/// Wᵀ X for sparse X, k×w.
fn wt_times_x(w: &Array2<f64>, x: &DocTermMatrix) -> Array2<f64> {
    let k = w.ncols();
    let mut out = Array2::zeros((k, x.cols()));
    for i in 0..x.rows() {
        let (cols, vals) = x.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            for c in 0..k {
                out[[c, j]] += w[[i, c]] * v;
            }
        }
    }
    out
}

/// Exact ‖X − W H‖_F, summing residuals entry by entry.
fn residual_norm(x: &DocTermMatrix, w: &Array2<f64>, h: &Array2<f64>) -> f64 {
    let recon = w.dot(h);
    let mut total = 0.0;
    for (i, row) in recon.outer_iter().enumerate() {
        let (cols, vals) = x.row(i);
        let mut next = 0;
        for (j, &r) in row.iter().enumerate() {
            let xv = if next < cols.len() && cols[next] == j {
                next += 1;
                vals[next - 1]
            } else {
                0.0
            };
            let d = xv - r;
            total += d * d;
        }
    }
    total.sqrt()
}

/// ‖X − (W⊙L)H‖_F.
pub fn objective(x: &DocTermMatrix, w: &Array2<f64>, l: &ConstraintMatrix, h: &Array2<f64>) -> Result<f64> {
    let (n, k) = w.dim();
    if n != x.rows() || l.n() != n || l.k() != k || h.nrows() != k || h.ncols() != x.cols() {
        return Err(Error::Dimension(format!(
            "X {}x{}, W {n}x{k}, L {}x{}, H {}x{}",
            x.rows(),
            x.cols(),
            l.n(),
            l.k(),
            h.nrows(),
            h.ncols()
        )));
    }
    let masked = w * &mask_of(l);
    Ok(residual_norm(x, &masked, h))
}

/// W ← W ⊙ num ⊘ (den + ε)
fn multiplicative_step(target: &mut Array2<f64>, num: &Array2<f64>, den: &Array2<f64>, eps: f64) {
    Zip::from(target).and(num).and(den).for_each(|t, &a, &b| *t *= a / (b + eps));
}

fn relative_change(prev: f64, cur: f64) -> f64 {
    if prev > 0.0 {
        (prev - cur).abs() / prev
    } else {
        0.0
    }
}

/// Seeded masked fit. See [`fit_from`].
pub fn fit(x: &DocTermMatrix, l: &ConstraintMatrix, config: &SolverConfig) -> Result<Factorization> {
    let (w0, h0) = init_factors(x, l, config)?;
    fit_from(x, l, config, w0, h0, |_, _, _| {})
}

/// Masked multiplicative updates from the given starting factors:
///
/// W ← (W ⊙ (X Hᵀ) ⊘ (W (H Hᵀ) + ε)) ⊙ L, then H ← H ⊙ (Wᵀ X) ⊘ ((Wᵀ W) H + ε).
///
/// `observer` sees the iteration number (0 for the starting point) with the
/// current W and H.
pub fn fit_from(
    x: &DocTermMatrix,
    l: &ConstraintMatrix,
    config: &SolverConfig,
    mut w: Array2<f64>,
    mut h: Array2<f64>,
    mut observer: impl FnMut(usize, &Array2<f64>, &Array2<f64>),
) -> Result<Factorization> {
    config.validate()?;
    check_shapes(x, l, config.k)?;
    if w.dim() != (x.rows(), config.k) || h.dim() != (config.k, x.cols()) {
        return Err(Error::Dimension("starting factors do not match X and k".into()));
    }
    let mask = mask_of(l);
    w *= &mask;
    observer(0, &w, &h);

    let initial = residual_norm(x, &w, &h);
    if !initial.is_finite() {
        return Err(Error::NonFinite { iteration: 0 });
    }
    let mut trace = vec![initial];
    let mut converged = false;
    for iteration in 1..=config.max_iter {
        let num = x_times_ht(x, &h);
        let den = w.dot(&h.dot(&h.t()));
        multiplicative_step(&mut w, &num, &den, config.epsilon);
        w *= &mask;

        let num = wt_times_x(&w, x);
        let den = w.t().dot(&w).dot(&h);
        multiplicative_step(&mut h, &num, &den, config.epsilon);

        observer(iteration, &w, &h);
        let obj = residual_norm(x, &w, &h);
        if !obj.is_finite() {
            return Err(Error::NonFinite { iteration });
        }
        let prev = *trace.last().unwrap();
        trace.push(obj);
        if relative_change(prev, obj) < config.tol {
            converged = true;
            break;
        }
    }
    Ok(Factorization {
        w,
        h,
        iterations_run: trace.len() - 1,
        objective_trace: trace,
        converged,
    })
}

/// Standard Lee–Seung Frobenius NMF with no mask, from the given factors.
pub fn fit_plain_from(
    x: &DocTermMatrix,
    config: &SolverConfig,
    mut w: Array2<f64>,
    mut h: Array2<f64>,
) -> Result<Factorization> {
    config.validate()?;
    let mut trace = vec![residual_norm(x, &w, &h)];
    let mut converged = false;
    for iteration in 1..=config.max_iter {
        let num = x_times_ht(x, &h);
        let den = w.dot(&h.dot(&h.t()));
        multiplicative_step(&mut w, &num, &den, config.epsilon);

        let num = wt_times_x(&w, x);
        let den = w.t().dot(&w).dot(&h);
        multiplicative_step(&mut h, &num, &den, config.epsilon);

        let obj = residual_norm(x, &w, &h);
        if !obj.is_finite() {
            return Err(Error::NonFinite { iteration });
        }
        let prev = *trace.last().unwrap();
        trace.push(obj);
        if relative_change(prev, obj) < config.tol {
            converged = true;
            break;
        }
    }
    Ok(Factorization {
        w,
        h,
        iterations_run: trace.len() - 1,
        objective_trace: trace,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vectorizer::MatrixKind;
    use ndarray::array;

    fn sparse(dense: &[Vec<f64>]) -> DocTermMatrix {
        let cols = dense[0].len();
        let rows = dense
            .iter()
            .map(|r| r.iter().enumerate().map(|(j, &v)| (j, v)).collect())
            .collect();
        DocTermMatrix::from_rows(cols, rows, MatrixKind::Tfidf).unwrap()
    }

    fn random_instance(seed: u64, n: usize, w: usize) -> DocTermMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dense: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                (0..w)
                    .map(|_| if rng.random::<f64>() < 0.3 { rng.random::<f64>() } else { 0.0 })
                    .collect()
            })
            .collect();
        sparse(&dense)
    }

    fn config(k: usize) -> SolverConfig {
        SolverConfig {
            k,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn objective_examples() {
        let x = sparse(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let eye = array![[1.0, 0.0], [0.0, 1.0]];
        let ones = ConstraintMatrix::all_ones(2, 2);
        assert_eq!(objective(&x, &eye, &ones, &eye).unwrap(), 0.0);
        assert_eq!(objective(&x, &Array2::zeros((2, 2)), &ones, &eye).unwrap(), x.frobenius_norm());

        let l = ConstraintMatrix::from_label_sets([&[1usize][..], &[][..]], 2).unwrap();
        assert_eq!(objective(&x, &eye, &l, &eye).unwrap(), 1.0);

        assert!(matches!(
            objective(&x, &Array2::zeros((3, 2)), &ones, &eye),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn init_respects_mask_and_seed() {
        let x = random_instance(1, 6, 5);
        let l = ConstraintMatrix::from_label_sets(
            [&[0usize][..], &[][..], &[1, 2][..], &[][..], &[2][..], &[][..]],
            3,
        )
        .unwrap();
        let (w0, h0) = init_factors(&x, &l, &config(3)).unwrap();
        for i in 0..6 {
            for j in 0..3 {
                assert_eq!(w0[[i, j]] == 0.0, !l.allows(i, j));
            }
        }
        let (w1, h1) = init_factors(&x, &l, &config(3)).unwrap();
        assert_eq!((w0, h0), (w1, h1));
    }

    #[test]
    fn init_zero_matrix_gives_zero_factors() {
        let x = sparse(&[vec![0.0, 0.0], vec![0.0, 0.0]]);
        let (w0, h0) = init_factors(&x, &ConstraintMatrix::all_ones(2, 2), &config(2)).unwrap();
        assert!(w0.iter().chain(h0.iter()).all(|&v| v == 0.0));
    }

    #[test]
    fn masked_fit_invariants() {
        let x = random_instance(3, 30, 20);
        let sets: Vec<Vec<usize>> = (0..30).map(|i| if i % 2 == 0 { vec![] } else { vec![i % 4] }).collect();
        let l = ConstraintMatrix::from_label_sets(sets.iter().map(Vec::as_slice), 4).unwrap();
        let cfg = config(4);
        let (w0, h0) = init_factors(&x, &l, &cfg).unwrap();
        let mut checked = 0;
        let fit = fit_from(&x, &l, &cfg, w0, h0, |_, w, h| {
            checked += 1;
            assert!(w.iter().chain(h.iter()).all(|&v| v >= 0.0));
            for i in 0..30 {
                for j in 0..4 {
                    if !l.allows(i, j) {
                        assert_eq!(w[[i, j]], 0.0);
                    }
                }
            }
        })
        .unwrap();
        assert_eq!(checked, fit.iterations_run + 1);
        for pair in fit.objective_trace.windows(2) {
            assert!(pair[1] <= pair[0] * (1.0 + 1e-10));
        }
        assert_eq!(
            fit.final_objective(),
            objective(&x, &fit.w, &l, &fit.h).unwrap()
        );
    }

    #[test]
    fn all_ones_mask_matches_plain() {
        let x = random_instance(9, 20, 15);
        let l = ConstraintMatrix::all_ones(20, 3);
        let cfg = SolverConfig {
            max_iter: 50,
            tol: f64::MIN_POSITIVE,
            ..config(3)
        };
        let (w0, h0) = init_factors(&x, &l, &cfg).unwrap();
        let masked = fit_from(&x, &l, &cfg, w0.clone(), h0.clone(), |_, _, _| {}).unwrap();
        let plain = fit_plain_from(&x, &cfg, w0, h0).unwrap();
        assert_eq!(masked, plain);
    }

    #[test]
    fn deterministic() {
        let x = random_instance(5, 12, 9);
        let l = ConstraintMatrix::all_ones(12, 2);
        assert_eq!(fit(&x, &l, &config(2)).unwrap(), fit(&x, &l, &config(2)).unwrap());
    }

    #[test]
    fn scale_covariance() {
        let x = random_instance(4, 15, 10);
        let l = ConstraintMatrix::all_ones(15, 3);
        let cfg = SolverConfig {
            max_iter: 30,
            tol: f64::MIN_POSITIVE,
            ..config(3)
        };
        let a = fit(&x, &l, &cfg).unwrap();
        let b = fit(&x.scaled(2.5), &l, &cfg).unwrap();
        assert_eq!(a.objective_trace.len(), b.objective_trace.len());
        for (oa, ob) in a.objective_trace.iter().zip(&b.objective_trace) {
            assert!((ob - 2.5 * oa).abs() <= 1e-9 * ob, "{oa} {ob}");
        }
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig { k: 0, ..config(1) }.validate().is_err());
        assert!(SolverConfig { tol: 0.0, ..config(1) }.validate().is_err());
        assert!(SolverConfig { epsilon: 0.0, ..config(1) }.validate().is_err());
        assert_eq!(SolverConfig::default().k, 80);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let x = random_instance(2, 4, 4);
        assert!(fit(&x, &ConstraintMatrix::all_ones(3, 2), &config(2)).is_err());
        assert!(fit(&x, &ConstraintMatrix::all_ones(4, 3), &config(2)).is_err());
    }

    #[test]
    fn export_round_trip() {
        let x = random_instance(8, 10, 6);
        let f = fit(&x, &ConstraintMatrix::all_ones(10, 2), &config(2)).unwrap();
        let back = Factorization::from_parts(
            &dense_to_coordinate(&f.w),
            &dense_to_coordinate(&f.h),
            &f.summary_json(),
        )
        .unwrap();
        assert_eq!(back, f);
    }
}
