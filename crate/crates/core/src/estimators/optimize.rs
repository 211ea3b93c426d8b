//! Box-constrained quasi-Newton maximization for low-dimensional smooth
//! objectives.

#[derive(Debug, Clone, Copy)]
pub struct OptimOptions {
    /// Convergence threshold on the infinity norm of the projected gradient.
    pub grad_tol: f64,
    pub max_iter: usize,
    /// Largest coordinate change of a single step.
    pub max_step: f64,
}

impl Default for OptimOptions {
    fn default() -> Self {
        OptimOptions {
            grad_tol: 1e-8,
            max_iter: 500,
            max_step: 2.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub value: f64,
    /// Infinity norm of the projected gradient at `x`.
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn clamp_into(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for i in 0..x.len() {
        x[i] = x[i].clamp(lo[i], hi[i]);
    }
}

/// Gradient of the minimized function `−f` with components that would push
/// through an active bound set to zero.
fn projected(g: &[f64], x: &[f64], lo: &[f64], hi: &[f64]) -> Vec<f64> {
    g.iter()
        .enumerate()
        .map(|(i, &gi)| {
            let blocked = (x[i] <= lo[i] && gi > 0.0) || (x[i] >= hi[i] && gi < 0.0);
            if blocked {
                0.0
            } else {
                gi
            }
        })
        .collect()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Maximizes `f` over the box `[lo, hi]` from `x0` with a projected BFGS
/// iteration. `grad` must return the gradient of `f`.
pub fn maximize<F, G>(f: F, grad: G, x0: &[f64], lo: &[f64], hi: &[f64], opts: OptimOptions) -> OptimResult
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    let dim = x0.len();
    // minimize phi = −f
    let phi = |x: &[f64]| -f(x);
    let dphi = |x: &[f64]| grad(x).into_iter().map(|g| -g).collect::<Vec<_>>();

    let mut x = x0.to_vec();
    clamp_into(&mut x, lo, hi);
    let mut fx = phi(&x);
    let mut g = dphi(&x);
    let mut h_inv = identity(dim);
    let mut iterations = 0;
    let mut pg = projected(&g, &x, lo, hi);

    while iterations < opts.max_iter {
        if inf_norm(&pg) <= opts.grad_tol {
            break;
        }
        iterations += 1;

        let free: Vec<bool> = (0..dim).map(|i| pg[i] != 0.0 || g[i] == 0.0).collect();
        let mut d = vec![0.0; dim];
        for i in 0..dim {
            if !free[i] {
                continue;
            }
            for j in 0..dim {
                if free[j] {
                    d[i] -= h_inv[i][j] * pg[j];
                }
            }
        }
        if dot(&d, &pg) >= 0.0 {
            h_inv = identity(dim);
            d = pg.iter().map(|v| -v).collect();
        }
        let scale = inf_norm(&d);
        if scale > opts.max_step {
            d.iter_mut().for_each(|v| *v *= opts.max_step / scale);
        }

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let mut xn: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + t * di).collect();
            clamp_into(&mut xn, lo, hi);
            let step: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
            if inf_norm(&step) == 0.0 {
                break;
            }
            let fn_ = phi(&xn);
            let armijo = fn_ <= fx + 1e-4 * dot(&g, &step);
            let mut gn = None;
            // Near the optimum the decrease drops below the rounding of f;
            // accept steps that reduce the projected gradient instead.
            let rounding_ok = if !armijo && fn_ <= fx + 1e-12 * fx.abs().max(1.0) {
                let gtry = dphi(&xn);
                let ok = inf_norm(&projected(&gtry, &xn, lo, hi)) < inf_norm(&pg);
                gn = Some(gtry);
                ok
            } else {
                false
            };
            if armijo || rounding_ok {
                let gn = gn.unwrap_or_else(|| dphi(&xn));
                accepted = Some((xn, fn_, gn, step));
                break;
            }
            t *= 0.5;
        }

        let Some((xn, fn_, gn, s)) = accepted else {
            break;
        };
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-14 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            bfgs_update(&mut h_inv, &s, &y, sy);
        }
        x = xn;
        fx = fn_;
        g = gn;
        pg = projected(&g, &x, lo, hi);
    }

    let grad_norm = inf_norm(&pg);
    OptimResult {
        x,
        value: -fx,
        grad_norm,
        iterations,
        converged: grad_norm <= opts.grad_tol,
    }
}

fn identity(dim: usize) -> Vec<Vec<f64>> {
    (0..dim)
        .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

/// `H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ`
fn bfgs_update(h: &mut [Vec<f64>], s: &[f64], y: &[f64], sy: f64) {
    let dim = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..dim).map(|i| dot(&h[i], y)).collect();
    let yhy = dot(y, &hy);
    for i in 0..dim {
        for j in 0..dim {
            h[i][j] += -rho * (s[i] * hy[j] + hy[i] * s[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}

/// Central first derivative with a fourth-order stencil.
pub fn central_gradient<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        let mut at = |delta: f64| {
            probe[i] = x[i] + delta;
            let v = f(&probe);
            probe[i] = x[i];
            v
        };
        let d = (-at(2.0 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2.0 * h)) / (12.0 * h);
        out.push(d);
    }
    out
}

/// Second-difference Hessian with step `h`.
pub fn central_hessian<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], h: f64) -> Vec<Vec<f64>> {
    let dim = x.len();
    let f0 = f(x);
    let mut hess = vec![vec![0.0; dim]; dim];
    let mut p = x.to_vec();
    for i in 0..dim {
        p[i] = x[i] + h;
        let fp = f(&p);
        p[i] = x[i] - h;
        let fm = f(&p);
        p[i] = x[i];
        hess[i][i] = (fp - 2.0 * f0 + fm) / (h * h);
        for j in 0..i {
            let mut corner = |si: f64, sj: f64| {
                p[i] = x[i] + si * h;
                p[j] = x[j] + sj * h;
                let v = f(&p);
                p[i] = x[i];
                p[j] = x[j];
                v
            };
            let v = (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0) + corner(-1.0, -1.0)) / (4.0 * h * h);
            hess[i][j] = v;
            hess[j][i] = v;
        }
    }
    hess
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_interior_maximum_of_quadratic() {
        let f = |x: &[f64]| -(x[0] - 1.0).powi(2) - 3.0 * (x[1] + 2.0).powi(2) - x[0] * x[1];
        let g = |x: &[f64]| vec![-2.0 * (x[0] - 1.0) - x[1], -6.0 * (x[1] + 2.0) - x[0]];
        let r = maximize(
            f,
            g,
            &[5.0, 5.0],
            &[-10.0, -10.0],
            &[10.0, 10.0],
            OptimOptions::default(),
        );
        assert!(r.converged);
        // stationary point of the quadratic
        let (x0, x1) = (24.0 / 11.0, -26.0 / 11.0);
        assert!((r.x[0] - x0).abs() < 1e-8 && (r.x[1] - x1).abs() < 1e-8, "{:?}", r.x);
    }

    #[test]
    fn stops_on_active_bound() {
        let f = |x: &[f64]| x[0] - (x[1] - 0.5).powi(2);
        let g = |x: &[f64]| vec![1.0, -2.0 * (x[1] - 0.5)];
        let r = maximize(f, g, &[0.0, 0.0], &[-1.0, -1.0], &[3.0, 3.0], OptimOptions::default());
        assert!(r.converged);
        assert_eq!(r.x[0], 3.0);
        assert!((r.x[1] - 0.5).abs() < 1e-8);
    }

    #[test]
    fn rosenbrock_like_valley() {
        let f = |x: &[f64]| -(1.0 - x[0]).powi(2) - 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let g = |x: &[f64]| {
            vec![
                2.0 * (1.0 - x[0]) + 400.0 * x[0] * (x[1] - x[0] * x[0]),
                -200.0 * (x[1] - x[0] * x[0]),
            ]
        };
        let opts = OptimOptions {
            max_iter: 2000,
            ..Default::default()
        };
        let r = maximize(f, g, &[-1.2, 1.0], &[-5.0, -5.0], &[5.0, 5.0], opts);
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6, "{r:?}");
    }

    #[test]
    fn numerical_derivatives() {
        let f = |x: &[f64]| (x[0] * 1.3).sin() * x[1].exp();
        let x = [0.4, -0.2];
        let g = central_gradient(&f, &x, 1e-3);
        let want = [
            1.3 * (0.52f64).cos() * (-0.2f64).exp(),
            (0.52f64).sin() * (-0.2f64).exp(),
        ];
        assert!((g[0] - want[0]).abs() < 1e-10 && (g[1] - want[1]).abs() < 1e-10);
        let h = central_hessian(&f, &x, 1e-3);
        let hxy = 1.3 * (0.52f64).cos() * (-0.2f64).exp();
        assert!((h[0][1] - hxy).abs() < 1e-5 && (h[1][1] - want[1]).abs() < 1e-5);
    }
}
