//! Restarted GMRES for real, matrix-free linear operators.

/// GMRES settings. `rtol` is relative to `‖b‖`.
#[derive(Debug, Clone)]
pub struct GmresOptions {
    pub restart: usize,
    pub max_iter: usize,
    pub rtol: f64,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self {
            restart: 60,
            max_iter: 1200,
            rtol: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GmresOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Final relative residual `‖b − Ax‖ / ‖b‖`.
    pub residual: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `A x = b` with right preconditioning: GMRES runs on `A M y = b` and
/// returns `x = M y`, so the monitored residual is the true one.
pub fn gmres(
    op: impl Fn(&[f64]) -> Vec<f64>,
    precond: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    opts: &GmresOptions,
) -> GmresOutcome {
    let n = b.len();
    let b_norm = norm(b);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return GmresOutcome {
            x,
            iterations: 0,
            residual: 0.0,
            converged: true,
        };
    }
    let m = opts.restart.clamp(1, n.max(1));
    let mut total = 0;
    let mut rel = 1.0;

    while total < opts.max_iter {
        let ax = op(&x);
        let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm(&r);
        rel = beta / b_norm;
        if rel <= opts.rtol {
            return GmresOutcome {
                x,
                iterations: total,
                residual: rel,
                converged: true,
            };
        }
        r.iter_mut().for_each(|v| *v /= beta);

        let mut basis: Vec<Vec<f64>> = vec![r];
        let mut precond_basis: Vec<Vec<f64>> = Vec::with_capacity(m);
        // column-major Hessenberg, h[k] has k + 2 entries
        let mut h: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut cs: Vec<f64> = Vec::with_capacity(m);
        let mut sn: Vec<f64> = Vec::with_capacity(m);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;

        let mut k = 0;
        while k < m && total < opts.max_iter {
            total += 1;
            let z = precond(&basis[k]);
            let mut w = op(&z);
            precond_basis.push(z);

            let mut col = vec![0.0; k + 2];
            for (i, v) in basis.iter().enumerate() {
                let hij = dot(&w, v);
                col[i] = hij;
                w.iter_mut().zip(v).for_each(|(wi, vi)| *wi -= hij * vi);
            }
            let wn = norm(&w);
            col[k + 1] = wn;

            for i in 0..k {
                let t = cs[i] * col[i] + sn[i] * col[i + 1];
                col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
                col[i] = t;
            }
            let rho = col[k].hypot(col[k + 1]);
            let (c, s) = if rho == 0.0 { (1.0, 0.0) } else { (col[k] / rho, col[k + 1] / rho) };
            col[k] = rho;
            col[k + 1] = 0.0;
            cs.push(c);
            sn.push(s);
            g[k + 1] = -s * g[k];
            g[k] *= c;
            h.push(col);
            k += 1;

            rel = g[k].abs() / b_norm;
            if rel <= opts.rtol || wn <= 1e-300 {
                break;
            }
            w.iter_mut().for_each(|v| *v /= wn);
            basis.push(w);
        }

        // back substitution on the k×k triangle
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut acc = g[i];
            for j in i + 1..k {
                acc -= h[j][i] * y[j];
            }
            y[i] = if h[i][i] == 0.0 { 0.0 } else { acc / h[i][i] };
        }
        for (yi, z) in y.iter().zip(&precond_basis) {
            x.iter_mut().zip(z).for_each(|(xi, zi)| *xi += yi * zi);
        }
        if rel <= opts.rtol {
            let ax = op(&x);
            let true_rel = norm(&b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect::<Vec<_>>()) / b_norm;
            // the recurrence can drift from the true residual; restart if so
            if true_rel <= 10.0 * opts.rtol {
                return GmresOutcome {
                    x,
                    iterations: total,
                    residual: true_rel,
                    converged: true,
                };
            }
            rel = true_rel;
        }
    }
    GmresOutcome {
        x,
        iterations: total,
        residual: rel,
        converged: false,
    }
}
