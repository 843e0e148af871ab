//! Small unconstrained optimisers: Nelder–Mead simplex descent and a
//! damped Newton iteration for square residual systems.

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub max_iter: usize,
    /// Stop when the spread of function values in the simplex drops below
    /// this value.
    pub f_tol: f64,
    /// Stop when the simplex diameter drops below this value.
    pub x_tol: f64,
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_iter: 2000,
            f_tol: 1e-24,
            x_tol: 1e-12,
            initial_step: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum<const D: usize> {
    pub x: [f64; D],
    pub f: f64,
    pub iterations: usize,
}

/// Minimises `f` from `x0` with the standard coefficients
/// (reflection 1, expansion 2, contraction ½, shrink ½).
pub fn nelder_mead<const D: usize>(
    mut f: impl FnMut(&[f64; D]) -> f64,
    x0: [f64; D],
    opts: NelderMeadOptions,
) -> Minimum<D> {
    let mut simplex = [(x0, 0.0); 8];
    assert!(
        D + 1 <= simplex.len(),
        "nelder_mead supports up to 7 dimensions"
    );
    let n = D + 1;
    simplex[0] = (x0, f(&x0));
    for i in 0..D {
        let mut x = x0;
        x[i] += opts.initial_step;
        simplex[i + 1] = (x, f(&x));
    }
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        simplex[..n].sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(core::cmp::Ordering::Equal));
        let best = simplex[0];
        let worst = simplex[D];
        let spread = worst.1 - best.1;
        let diam = simplex[1..n]
            .iter()
            .map(|(x, _)| {
                x.iter()
                    .zip(&best.0)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if spread.abs() <= opts.f_tol || diam <= opts.x_tol {
            break;
        }
        let mut centroid = [0.0; D];
        for (x, _) in &simplex[..D] {
            for k in 0..D {
                centroid[k] += x[k] / D as f64;
            }
        }
        let along = |t: f64| -> [f64; D] {
            core::array::from_fn(|k| centroid[k] + t * (worst.0[k] - centroid[k]))
        };
        let xr = along(-1.0);
        let fr = f(&xr);
        if fr < best.1 {
            let xe = along(-2.0);
            let fe = f(&xe);
            simplex[D] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[D - 1].1 {
            simplex[D] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst.1 {
                let x = along(-0.5);
                (x, f(&x))
            } else {
                let x = along(0.5);
                (x, f(&x))
            };
            if fc < worst.1.min(fr) {
                simplex[D] = (xc, fc);
            } else {
                for i in 1..n {
                    let x: [f64; D] =
                        core::array::from_fn(|k| best.0[k] + 0.5 * (simplex[i].0[k] - best.0[k]));
                    simplex[i] = (x, f(&x));
                }
            }
        }
    }
    simplex[..n].sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(core::cmp::Ordering::Equal));
    Minimum {
        x: simplex[0].0,
        f: simplex[0].1,
        iterations,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    pub max_iter: usize,
    /// Relative step for the forward-difference Jacobian.
    pub fd_step: f64,
    pub tol: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            max_iter: 50,
            fd_step: 1e-7,
            tol: 1e-14,
        }
    }
}

/// Damped Newton on a 2-vector residual `r(x)` with a finite-difference
/// Jacobian, minimising `‖W r‖²` along the Newton direction by step
/// halving. `weights` scales the residual components in the merit function.
/// Returns the best point seen.
pub fn damped_newton_2(
    mut r: impl FnMut(&[f64; 2]) -> Option<[f64; 2]>,
    x0: [f64; 2],
    weights: [f64; 2],
    opts: NewtonOptions,
) -> Minimum<2> {
    let merit = |v: [f64; 2]| weights[0] * v[0] * v[0] + weights[1] * v[1] * v[1];
    let Some(mut rx) = r(&x0) else {
        return Minimum {
            x: x0,
            f: f64::INFINITY,
            iterations: 0,
        };
    };
    let mut x = x0;
    let mut fx = merit(rx);
    let mut iterations = 0;
    while iterations < opts.max_iter && fx > opts.tol * opts.tol {
        iterations += 1;
        let mut jac = [[0.0; 2]; 2];
        let mut ok = true;
        for k in 0..2 {
            let h = opts.fd_step * x[k].abs().max(1.0);
            let mut xp = x;
            xp[k] += h;
            match r(&xp) {
                Some(rp) => {
                    jac[0][k] = (rp[0] - rx[0]) / h;
                    jac[1][k] = (rp[1] - rx[1]) / h;
                }
                None => ok = false,
            }
        }
        if !ok {
            break;
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let dx = [
            -(jac[1][1] * rx[0] - jac[0][1] * rx[1]) / det,
            -(-jac[1][0] * rx[0] + jac[0][0] * rx[1]) / det,
        ];
        let mut t = 1.0;
        let mut improved = false;
        for _ in 0..30 {
            let xn = [x[0] + t * dx[0], x[1] + t * dx[1]];
            if let Some(rn) = r(&xn) {
                let fnew = merit(rn);
                if fnew < fx {
                    x = xn;
                    rx = rn;
                    fx = fnew;
                    improved = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !improved {
            break;
        }
    }
    Minimum {
        x,
        f: fx,
        iterations,
    }
}
