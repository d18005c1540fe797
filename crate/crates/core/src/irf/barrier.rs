//! Log-barrier interior-point method for small convex programs over products
//! of probability simplices.
//!
//! A program is `min f(z)` subject to `h_j(z) ≤ 0` and `E z = b`, where each
//! `h_j` is affine plus an optional KL term. Centering uses equality-constrained
//! Newton steps, so the row-sum equalities hold along the whole path.

use nalgebra::{DMatrix, DVector};

/// `Σ_j target_j ln(target_j / ⟨form_j, z⟩)`, scaled.
#[derive(Debug, Clone)]
pub(crate) struct KlTerm {
    pub forms: Vec<Vec<f64>>,
    pub target: Vec<f64>,
    pub scale: f64,
}

impl KlTerm {
    fn value(&self, z: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (form, &t) in self.forms.iter().zip(&self.target) {
            if t <= 0.0 {
                continue;
            }
            let l = dot(form, z);
            if l <= 0.0 {
                return f64::INFINITY;
            }
            acc += t * (t / l).ln();
        }
        self.scale * acc
    }

    fn add_grad_hess(
        &self,
        z: &[f64],
        coef_g: f64,
        g: &mut [f64],
        coef_h: f64,
        h: &mut DMatrix<f64>,
    ) {
        for (form, &t) in self.forms.iter().zip(&self.target) {
            if t <= 0.0 {
                continue;
            }
            let l = dot(form, z);
            let dg = -self.scale * t / l;
            let dh = self.scale * t / (l * l);
            for (i, &fi) in form.iter().enumerate() {
                if fi == 0.0 {
                    continue;
                }
                g[i] += coef_g * dg * fi;
                for (k, &fk) in form.iter().enumerate() {
                    if fk != 0.0 {
                        h[(i, k)] += coef_h * dh * fi * fk;
                    }
                }
            }
        }
    }

    fn extend(&mut self, extra: usize) {
        for f in &mut self.forms {
            f.extend(std::iter::repeat_n(0.0, extra));
        }
    }
}

/// `h(z) = ⟨lin, z⟩ + kl(z) − rhs ≤ 0`.
#[derive(Debug, Clone)]
pub(crate) struct Ineq {
    pub lin: Vec<f64>,
    pub rhs: f64,
    pub kl: Option<KlTerm>,
    /// Whether phase I may relax this inequality. Positivity of channel
    /// entries is never relaxed since the objective needs it.
    pub relaxable: bool,
}

impl Ineq {
    pub fn value(&self, z: &[f64]) -> f64 {
        let mut v = dot(&self.lin, z) - self.rhs;
        if let Some(kl) = &self.kl {
            v += kl.value(z);
        }
        v
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Program {
    pub dim: usize,
    pub ineqs: Vec<Ineq>,
    pub eq: DMatrix<f64>,
    pub eq_rhs: Vec<f64>,
}

pub(crate) trait Objective {
    fn value(&self, z: &[f64]) -> f64;
    /// Adds `scale ·` gradient and Hessian into the buffers.
    fn add_grad_hess(&self, z: &[f64], scale: f64, g: &mut [f64], h: &mut DMatrix<f64>);
}

/// `z[index]`, used as the phase-I objective.
pub(crate) struct Coordinate(pub usize);

impl Objective for Coordinate {
    fn value(&self, z: &[f64]) -> f64 {
        z[self.0]
    }

    fn add_grad_hess(&self, _z: &[f64], scale: f64, g: &mut [f64], _h: &mut DMatrix<f64>) {
        g[self.0] += scale;
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Limits {
    pub max_outer: usize,
    pub max_newton: usize,
    pub mu: f64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_outer: 1_000,
            max_newton: 10_000,
            mu: 10.0,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct PathPoint {
    pub z: Vec<f64>,
    /// Certified bound on `obj(z) − optimum`; `m / t` when the last
    /// centering completed.
    pub gap: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Program {
    fn strictly_feasible(&self, z: &[f64]) -> bool {
        self.ineqs.iter().all(|q| q.value(z) < 0.0)
    }

    fn barrier_value(&self, obj: &dyn Objective, t: f64, z: &[f64]) -> f64 {
        let mut v = t * obj.value(z);
        for q in &self.ineqs {
            let h = q.value(z);
            if h.is_nan() || h >= 0.0 {
                return f64::INFINITY;
            }
            v -= (-h).ln();
        }
        v
    }

    fn barrier_grad_hess(
        &self,
        obj: &dyn Objective,
        t: f64,
        z: &[f64],
    ) -> (Vec<f64>, DMatrix<f64>) {
        let n = self.dim;
        let mut g = vec![0.0; n];
        let mut h = DMatrix::zeros(n, n);
        obj.add_grad_hess(z, t, &mut g, &mut h);
        let mut grad_q = vec![0.0; n];
        for q in &self.ineqs {
            let hv = q.value(z);
            let inv = 1.0 / (-hv);
            grad_q.copy_from_slice(&q.lin);
            let mut kl_h = DMatrix::zeros(0, 0);
            if let Some(kl) = &q.kl {
                kl_h = DMatrix::zeros(n, n);
                kl.add_grad_hess(z, 1.0, &mut grad_q, 1.0, &mut kl_h);
            }
            for i in 0..n {
                if grad_q[i] == 0.0 {
                    continue;
                }
                g[i] += inv * grad_q[i];
                for k in 0..n {
                    if grad_q[k] != 0.0 {
                        h[(i, k)] += inv * inv * grad_q[i] * grad_q[k];
                    }
                }
            }
            if q.kl.is_some() {
                h += kl_h * inv;
            }
        }
        (g, h)
    }

    /// Newton direction for the equality-constrained model. The lower block
    /// carries the residual `b − A z`, so rounding drift off the affine set is
    /// removed by the next step. The system is symmetrically equilibrated
    /// before factorization since barrier Hessians span many magnitudes.
    fn newton_step(&self, z: &[f64], g: &[f64], h: &DMatrix<f64>) -> Option<Vec<f64>> {
        let n = self.dim;
        let p = self.eq.nrows();
        let mut kkt = DMatrix::zeros(n + p, n + p);
        kkt.view_mut((0, 0), (n, n)).copy_from(h);
        kkt.view_mut((n, 0), (p, n)).copy_from(&self.eq);
        kkt.view_mut((0, n), (n, p)).copy_from(&self.eq.transpose());
        let mut rhs = DVector::zeros(n + p);
        for i in 0..n {
            rhs[i] = -g[i];
        }
        for r in 0..p {
            let az: f64 = (0..n).map(|c| self.eq[(r, c)] * z[c]).sum();
            rhs[n + r] = self.eq_rhs[r] - az;
        }
        let d: Vec<f64> = (0..n + p)
            .map(|i| {
                let k = if i < n { h[(i, i)].abs() } else { 0.0 };
                if k > 0.0 {
                    1.0 / k.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        for i in 0..n + p {
            rhs[i] *= d[i];
            for j in 0..n + p {
                kkt[(i, j)] *= d[i] * d[j];
            }
        }
        let sol = kkt.clone().lu().solve(&rhs).or_else(|| {
            // Regularize a singular Hessian block and retry.
            for i in 0..n {
                kkt[(i, i)] += 1e-12;
            }
            kkt.lu().solve(&rhs)
        })?;
        let step: Vec<f64> = (0..n).map(|i| sol[i] * d[i]).collect();
        step.iter().all(|v| v.is_finite()).then_some(step)
    }

    /// Minimizes `t·f + barrier` from a strictly feasible `z`. Returns whether
    /// the Newton decrement reached the target.
    fn center(&self, obj: &dyn Objective, t: f64, z: &mut Vec<f64>, budget: &mut usize) -> bool {
        const DECREMENT_TOL: f64 = 1e-11;
        // Accept a decrement that has hit its rounding floor.
        const FLOOR_DECREMENT: f64 = 1e-6;
        const FLOOR_PATIENCE: usize = 50;
        let mut stalls = 0;
        let mut best = f64::INFINITY;
        let mut since_best = 0;
        while *budget > 0 {
            *budget -= 1;
            let (g, h) = self.barrier_grad_hess(obj, t, z);
            let Some(dz) = self.newton_step(z, &g, &h) else {
                return false;
            };
            let decrement = -dot(&g, &dz);
            if decrement / 2.0 <= DECREMENT_TOL {
                return true;
            }
            if decrement < 0.5 * best {
                best = decrement;
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= FLOOR_PATIENCE && best < FLOOR_DECREMENT {
                    return true;
                }
            }
            // Back off until the trial point stays strictly inside.
            let mut step = 1.0;
            let mut trial: Vec<f64> = Vec::with_capacity(z.len());
            loop {
                trial.clear();
                trial.extend(z.iter().zip(&dz).map(|(a, b)| a + step * b));
                if self.strictly_feasible(&trial) {
                    break;
                }
                step *= 0.5;
                if step < 1e-20 {
                    return false;
                }
            }
            // Armijo only while the decrease is resolvable in floating point;
            // near the center a full Newton step is taken.
            if decrement > 1e-3 {
                let f0 = self.barrier_value(obj, t, z);
                loop {
                    let f1 = self.barrier_value(obj, t, &trial);
                    if f1 <= f0 - 0.25 * step * decrement {
                        break;
                    }
                    step *= 0.5;
                    if step < 1e-20 {
                        return false;
                    }
                    trial.clear();
                    trial.extend(z.iter().zip(&dz).map(|(a, b)| a + step * b));
                }
            }
            let moved = trial.iter().zip(z.iter()).any(|(a, b)| a != b);
            *z = trial;
            if !moved {
                stalls += 1;
                if stalls > 3 {
                    return true;
                }
            }
        }
        false
    }

    /// Follows the central path until `m/t ≤ gap_target` or `stop(z, gap)`
    /// returns true.
    pub fn solve(
        &self,
        obj: &dyn Objective,
        mut z: Vec<f64>,
        t0: f64,
        gap_target: f64,
        limits: Limits,
        mut stop: impl FnMut(&[f64], f64) -> bool,
    ) -> PathPoint {
        debug_assert!(self.strictly_feasible(&z));
        let m = self.ineqs.len() as f64;
        let mut t = t0;
        // Certified lower bound from the last completed centering.
        let mut lower = f64::NEG_INFINITY;
        for _ in 0..limits.max_outer {
            let mut budget = limits.max_newton;
            if !self.center(obj, t, &mut z, &mut budget) {
                let gap = obj.value(&z) - lower;
                return PathPoint { z, gap };
            }
            let gap = m / t;
            lower = obj.value(&z) - gap;
            if gap <= gap_target || stop(&z, gap) {
                return PathPoint { z, gap };
            }
            t *= limits.mu;
        }
        let gap = obj.value(&z) - lower;
        PathPoint { z, gap }
    }

    /// Phase-I program: every relaxable inequality gets `− s` and `s` is
    /// appended as the last coordinate.
    pub fn with_slack(&self) -> Program {
        let dim = self.dim + 1;
        let ineqs = self
            .ineqs
            .iter()
            .map(|q| {
                let mut q = q.clone();
                q.lin.push(if q.relaxable { -1.0 } else { 0.0 });
                if let Some(kl) = &mut q.kl {
                    kl.extend(1);
                }
                q
            })
            .collect();
        let eq = self.eq.clone().insert_column(self.dim, 0.0);
        Program {
            dim,
            ineqs,
            eq,
            eq_rhs: self.eq_rhs.clone(),
        }
    }

    /// Largest relaxable violation at `z`.
    pub fn max_violation(&self, z: &[f64]) -> f64 {
        self.ineqs
            .iter()
            .filter(|q| q.relaxable)
            .map(|q| q.value(z))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}
