//! Small fitting toolbox: linear least squares, cosine and exponential decay
//! fits, quadratic fits, and derivative-free minimizers.

use crate::error::{Error, Result};

/// Solve the normal equations of `design * beta = y` with Gaussian
/// elimination and partial pivoting.
pub fn linear_least_squares(design: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>> {
    let n = design.len();
    if n == 0 || n != y.len() {
        return Err(Error::Fit("design matrix and data length mismatch".into()));
    }
    let p = design[0].len();
    if n < p {
        return Err(Error::Fit(format!(
            "underdetermined fit: {n} points for {p} parameters"
        )));
    }
    let mut ata = vec![vec![0.0; p]; p];
    let mut aty = vec![0.0; p];
    for (row, &yi) in design.iter().zip(y) {
        if row.len() != p {
            return Err(Error::Fit("ragged design matrix".into()));
        }
        for i in 0..p {
            aty[i] += row[i] * yi;
            for j in 0..p {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    solve_dense(&mut ata, &mut aty)?;
    Ok(aty)
}

fn solve_dense(a: &mut [Vec<f64>], b: &mut [f64]) -> Result<()> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot][col].abs() < 1e-300 {
            return Err(Error::Fit("singular normal equations".into()));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in (col + 1)..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    for col in (0..n).rev() {
        let mut s = b[col];
        for k in (col + 1)..n {
            s -= a[col][k] * b[k];
        }
        b[col] = s / a[col][col];
    }
    Ok(())
}

/// `y = offset + amplitude cos(x + phase)` with amplitude >= 0.
#[derive(Debug, Clone, Copy)]
pub struct CosineFit {
    pub amplitude: f64,
    pub phase: f64,
    pub offset: f64,
    pub residual_rms: f64,
}

/// Least-squares cosine at unit angular frequency over the given angles.
pub fn fit_cosine(angles: &[f64], values: &[f64]) -> Result<CosineFit> {
    let design: Vec<Vec<f64>> = angles.iter().map(|&x| vec![x.cos(), x.sin(), 1.0]).collect();
    let beta = linear_least_squares(&design, values)?;
    let (a, b, offset) = (beta[0], beta[1], beta[2]);
    let amplitude = a.hypot(b);
    let phase = (-b).atan2(a);
    let mut ss = 0.0;
    for (&x, &y) in angles.iter().zip(values) {
        let model = offset + amplitude * (x + phase).cos();
        ss += (y - model) * (y - model);
    }
    Ok(CosineFit {
        amplitude,
        phase,
        offset,
        residual_rms: (ss / angles.len() as f64).sqrt(),
    })
}

/// `y = a + b lambda^x` (x need not be integer).
#[derive(Debug, Clone, Copy)]
pub struct ExponentialFit {
    pub a: f64,
    pub b: f64,
    pub lambda: f64,
    pub residual_rms: f64,
}

fn exp_residual(x: &[f64], y: &[f64], lambda: f64) -> (f64, f64, f64) {
    let design: Vec<Vec<f64>> = x.iter().map(|&xi| vec![1.0, lambda.powf(xi)]).collect();
    match linear_least_squares(&design, y) {
        Ok(beta) => {
            let mut ss = 0.0;
            for (&xi, &yi) in x.iter().zip(y) {
                let model = beta[0] + beta[1] * lambda.powf(xi);
                ss += (yi - model) * (yi - model);
            }
            (ss, beta[0], beta[1])
        }
        Err(_) => (f64::INFINITY, 0.0, 0.0),
    }
}

/// Fit a single-exponential decay by scanning the decay base on (0, 1] and
/// refining with golden-section search.
pub fn fit_exponential(x: &[f64], y: &[f64]) -> Result<ExponentialFit> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(Error::Fit("need at least 3 points for an exponential".into()));
    }
    let mut best = (f64::INFINITY, 0.5);
    for k in 1..=400 {
        let lambda = k as f64 / 400.0;
        let (ss, _, _) = exp_residual(x, y, lambda);
        if ss < best.0 {
            best = (ss, lambda);
        }
    }
    let lo = (best.1 - 0.01).max(1e-6);
    let hi = (best.1 + 0.01).min(1.0);
    let (lambda, _) = golden_section_min(|l| exp_residual(x, y, l).0, lo, hi, 1e-12, 200);
    let (ss, a, b) = exp_residual(x, y, lambda);
    Ok(ExponentialFit {
        a,
        b,
        lambda,
        residual_rms: (ss / x.len() as f64).sqrt(),
    })
}

/// Fit `y = a + b e^{-t/tau}` on continuous time by reparametrizing through
/// the span of `t`.
pub fn fit_decay_time(t: &[f64], y: &[f64]) -> Result<(f64, ExponentialFit)> {
    let span = t
        .iter()
        .cloned()
        .fold(f64::MIN, f64::max)
        .max(f64::MIN_POSITIVE);
    let spread = y.iter().cloned().fold(f64::MIN, f64::max)
        - y.iter().cloned().fold(f64::MAX, f64::min);
    let scale = y.iter().fold(0.0_f64, |m, &v| m.max(v.abs())).max(1e-300);
    if spread < 1e-9 * scale {
        return Err(Error::Fit("no measurable decay in the data".into()));
    }
    let scaled: Vec<f64> = t.iter().map(|&ti| ti / span).collect();
    let fit = fit_exponential(&scaled, y)?;
    if fit.lambda >= 1.0 - 1e-12 || fit.b.abs() < 1e-9 * scale {
        return Err(Error::Fit("no measurable decay in the data".into()));
    }
    let tau = -span / fit.lambda.ln();
    Ok((tau, fit))
}

/// `y = a + b lambda2^x + c lambda1^x` with lambda1 held fixed.
#[derive(Debug, Clone, Copy)]
pub struct DoubleExponentialFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub lambda2: f64,
    pub residual_rms: f64,
}

pub fn fit_double_exponential(
    x: &[f64],
    y: &[f64],
    lambda1: f64,
) -> Result<DoubleExponentialFit> {
    if x.len() != y.len() || x.len() < 4 {
        return Err(Error::Fit(
            "need at least 4 points for a double exponential".into(),
        ));
    }
    let residual = |lambda2: f64| -> (f64, [f64; 3]) {
        let design: Vec<Vec<f64>> = x
            .iter()
            .map(|&xi| vec![1.0, lambda2.powf(xi), lambda1.powf(xi)])
            .collect();
        match linear_least_squares(&design, y) {
            Ok(beta) => {
                let mut ss = 0.0;
                for (&xi, &yi) in x.iter().zip(y) {
                    let model = beta[0] + beta[1] * lambda2.powf(xi) + beta[2] * lambda1.powf(xi);
                    ss += (yi - model) * (yi - model);
                }
                (ss, [beta[0], beta[1], beta[2]])
            }
            Err(_) => (f64::INFINITY, [0.0; 3]),
        }
    };
    let mut best = (f64::INFINITY, 0.5);
    for k in 1..=400 {
        let lambda2 = k as f64 / 400.0;
        if (lambda2 - lambda1).abs() < 1e-3 {
            continue;
        }
        let (ss, _) = residual(lambda2);
        if ss < best.0 {
            best = (ss, lambda2);
        }
    }
    let lo = (best.1 - 0.01).max(1e-6);
    let hi = (best.1 + 0.01).min(1.0);
    let (lambda2, _) = golden_section_min(|l| residual(l).0, lo, hi, 1e-12, 200);
    let (ss, beta) = residual(lambda2);
    Ok(DoubleExponentialFit {
        a: beta[0],
        b: beta[1],
        c: beta[2],
        lambda2,
        residual_rms: (ss / x.len() as f64).sqrt(),
    })
}

/// Quadratic `y = c0 + c1 x + c2 x^2`; returns (c0, c1, c2).
pub fn fit_quadratic(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    let design: Vec<Vec<f64>> = x.iter().map(|&xi| vec![1.0, xi, xi * xi]).collect();
    let beta = linear_least_squares(&design, y)?;
    Ok((beta[0], beta[1], beta[2]))
}

/// Golden-section minimum of a unimodal function on [lo, hi].
pub fn golden_section_min(
    mut f: impl FnMut(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    max_iter: usize,
) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..max_iter {
        if (hi - lo).abs() < tol {
            break;
        }
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 < f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Nelder-Mead downhill simplex. Returns the best vertex and its value.
pub fn nelder_mead(
    mut f: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    step: &[f64],
    tol: f64,
    max_iter: usize,
) -> (Vec<f64>, f64) {
    let n = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += step[i];
        let fv = f(&v);
        simplex.push((v, fv));
    }
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if (simplex[n].1 - simplex[0].1).abs() < tol {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|i| simplex[..n].iter().map(|(v, _)| v[i]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].clone();
        let reflect: Vec<f64> = (0..n)
            .map(|i| centroid[i] + (centroid[i] - worst.0[i]))
            .collect();
        let fr = f(&reflect);
        if fr < simplex[0].1 {
            let expand: Vec<f64> = (0..n)
                .map(|i| centroid[i] + 2.0 * (centroid[i] - worst.0[i]))
                .collect();
            let fe = f(&expand);
            simplex[n] = if fe < fr { (expand, fe) } else { (reflect, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflect, fr);
        } else {
            let contract: Vec<f64> = (0..n)
                .map(|i| centroid[i] + 0.5 * (worst.0[i] - centroid[i]))
                .collect();
            let fc = f(&contract);
            if fc < worst.1 {
                simplex[n] = (contract, fc);
            } else {
                let best = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    for i in 0..n {
                        vertex.0[i] = best[i] + 0.5 * (vertex.0[i] - best[i]);
                    }
                    vertex.1 = f(&vertex.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex[0].clone()
}
