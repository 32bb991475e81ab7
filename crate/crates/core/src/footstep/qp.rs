//! Dense strictly convex QP with sparse constraint rows.
//!
//! Goldfarb-Idnani dual active-set method: start from the unconstrained
//! minimum and add violated constraints one at a time, keeping the active set
//! dual feasible. The factor `J = L^-T Q` and the triangular `R` are updated
//! with Givens rotations. Pivoting is deterministic (most violated row, lowest
//! index on ties).

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Constraints violated by less than this are treated as satisfied.
const VIOLATION_TOL: f64 = 1e-12;
const ZERO: f64 = f64::EPSILON;

/// `coeffs · x (<= | =) rhs`, stored sparsely.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRow {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl SparseRow {
    pub fn new(coeffs: Vec<(usize, f64)>, rhs: f64) -> Self {
        Self { coeffs, rhs }
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }
}

/// `min ½ xᵀ G x + gᵀ x` subject to `equalities` and `inequalities` (`<=`).
#[derive(Debug, Clone)]
pub struct QuadraticProgram {
    pub hessian: DMatrix<f64>,
    pub linear: DVector<f64>,
    pub equalities: Vec<SparseRow>,
    pub inequalities: Vec<SparseRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    /// Indices of the inequalities active at the solution.
    pub active: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QpError {
    #[error("hessian is not positive definite")]
    NotPositiveDefinite,
    #[error("equality constraints are linearly dependent")]
    DependentEqualities,
    #[error("constraints are infeasible")]
    Infeasible,
    #[error("iteration limit reached")]
    IterationLimit,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

struct State {
    n: usize,
    /// Row-major n×n.
    j: Vec<f64>,
    /// Row-major n×n, upper triangular in its first `iq` columns.
    r: Vec<f64>,
    iq: usize,
    r_norm: f64,
}

impl State {
    /// `d = Jᵀ np` for a sparse `np`.
    fn d(&self, np: &[(usize, f64)]) -> Vec<f64> {
        let n = self.n;
        let mut d = vec![0.0; n];
        for &(k, a) in np {
            let row = &self.j[k * n..(k + 1) * n];
            for (dj, jk) in d.iter_mut().zip(row) {
                *dj += a * jk;
            }
        }
        d
    }

    /// Primal step direction `z = J₂ d₂`.
    fn z(&self, d: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|k| {
                let row = &self.j[k * n..(k + 1) * n];
                (self.iq..n).map(|c| row[c] * d[c]).sum()
            })
            .collect()
    }

    /// Dual step direction `r = R⁻¹ d₁`.
    fn dual(&self, d: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut r = vec![0.0; self.iq];
        for i in (0..self.iq).rev() {
            let s = (i + 1..self.iq).fold(d[i], |s, c| s - self.r[i * n + c] * r[c]);
            r[i] = s / self.r[i * n + i];
        }
        r
    }

    /// Appends a constraint with `d = Jᵀ np`. Fails if it is linearly
    /// dependent on the active set.
    fn add(&mut self, mut d: Vec<f64>) -> bool {
        let n = self.n;
        for c in (self.iq + 1..n).rev() {
            let (mut cc, mut ss) = (d[c - 1], d[c]);
            let h = cc.hypot(ss);
            if h == 0.0 {
                continue;
            }
            d[c] = 0.0;
            ss /= h;
            cc /= h;
            if cc < 0.0 {
                cc = -cc;
                ss = -ss;
                d[c - 1] = -h;
            } else {
                d[c - 1] = h;
            }
            let xny = ss / (1.0 + cc);
            for k in 0..n {
                let t1 = self.j[k * n + c - 1];
                let t2 = self.j[k * n + c];
                let a = t1 * cc + t2 * ss;
                self.j[k * n + c - 1] = a;
                self.j[k * n + c] = xny * (t1 + a) - t2;
            }
        }
        let col = self.iq;
        for (i, di) in d.iter().enumerate().take(col + 1) {
            self.r[i * n + col] = *di;
        }
        if d[col].abs() <= ZERO * self.r_norm {
            for i in 0..=col {
                self.r[i * n + col] = 0.0;
            }
            return false;
        }
        self.r_norm = self.r_norm.max(d[col].abs());
        self.iq += 1;
        true
    }

    /// Removes active column `qq` and restores the triangular form.
    fn remove(&mut self, qq: usize) {
        let n = self.n;
        for c in qq..self.iq - 1 {
            for i in 0..n {
                self.r[i * n + c] = self.r[i * n + c + 1];
            }
        }
        for i in 0..n {
            self.r[i * n + self.iq - 1] = 0.0;
        }
        self.iq -= 1;
        for c in qq..self.iq {
            let (mut cc, mut ss) = (self.r[c * n + c], self.r[(c + 1) * n + c]);
            let h = cc.hypot(ss);
            if h == 0.0 {
                continue;
            }
            cc /= h;
            ss /= h;
            self.r[(c + 1) * n + c] = 0.0;
            if cc < 0.0 {
                self.r[c * n + c] = -h;
                cc = -cc;
                ss = -ss;
            } else {
                self.r[c * n + c] = h;
            }
            let xny = ss / (1.0 + cc);
            for k in c + 1..self.iq {
                let t1 = self.r[c * n + k];
                let t2 = self.r[(c + 1) * n + k];
                let a = t1 * cc + t2 * ss;
                self.r[c * n + k] = a;
                self.r[(c + 1) * n + k] = xny * (t1 + a) - t2;
            }
            for k in 0..n {
                let t1 = self.j[k * n + c];
                let t2 = self.j[k * n + c + 1];
                let a = t1 * cc + t2 * ss;
                self.j[k * n + c] = a;
                self.j[k * n + c + 1] = xny * (a + t1) - t2;
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sparse_dot(row: &[(usize, f64)], x: &[f64]) -> f64 {
    row.iter().map(|&(j, a)| a * x[j]).sum()
}

/// Internal form `np · x - e >= 0` of a `<=` row.
fn negated(row: &SparseRow) -> Vec<(usize, f64)> {
    row.coeffs.iter().map(|&(j, a)| (j, -a)).collect()
}

pub fn solve_qp(qp: &QuadraticProgram) -> Result<QpSolution, QpError> {
    let n = qp.linear.len();
    if qp.hessian.nrows() != n || qp.hessian.ncols() != n {
        return Err(QpError::Dimension(format!("hessian is {}x{}, expected {n}x{n}", qp.hessian.nrows(), qp.hessian.ncols())));
    }
    for row in qp.equalities.iter().chain(&qp.inequalities) {
        if let Some(&(j, _)) = row.coeffs.iter().find(|(j, _)| *j >= n) {
            return Err(QpError::Dimension(format!("row references variable {j} of {n}")));
        }
    }
    let chol = qp.hessian.clone().cholesky().ok_or(QpError::NotPositiveDefinite)?;
    let l = chol.l();
    // J = L^-T
    let linv = l
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or(QpError::NotPositiveDefinite)?;
    let jt = linv.transpose();
    let mut st = State { n, j: vec![0.0; n * n], r: vec![0.0; n * n], iq: 0, r_norm: 1.0 };
    for i in 0..n {
        for k in 0..n {
            st.j[i * n + k] = jt[(i, k)];
        }
    }
    let x0 = chol.solve(&(-&qp.linear));
    let mut x: Vec<f64> = x0.iter().copied().collect();

    let meq = qp.equalities.len();
    let mi = qp.inequalities.len();
    // active[k] = constraint at column k: equalities first, then inequality indices
    let mut active: Vec<usize> = Vec::with_capacity(n);
    let mut u: Vec<f64> = Vec::with_capacity(n + 1);

    for (i, row) in qp.equalities.iter().enumerate() {
        let np = negated(row);
        let d = st.d(&np);
        let z = st.z(&d);
        let r = st.dual(&d);
        let zn = sparse_dot(&np, &z);
        let mut t2 = 0.0;
        if dot(&z, &z) > ZERO {
            t2 = -(sparse_dot(&np, &x) + row.rhs) / zn;
        }
        for (xk, zk) in x.iter_mut().zip(&z) {
            *xk += t2 * zk;
        }
        for (uk, rk) in u.iter_mut().zip(&r) {
            *uk -= t2 * rk;
        }
        u.push(t2);
        active.push(i);
        if !st.add(d) {
            return Err(QpError::DependentEqualities);
        }
    }

    let ineq: Vec<Vec<(usize, f64)>> = qp.inequalities.iter().map(negated).collect();
    let mut is_active = vec![false; mi];
    let mut excluded = vec![false; mi];
    let max_iter = 20 * (n + mi) + 100;
    let mut iterations = 0;

    loop {
        iterations += 1;
        if iterations > max_iter {
            return Err(QpError::IterationLimit);
        }
        // most violated inactive inequality
        let mut ip = usize::MAX;
        let mut worst = -VIOLATION_TOL;
        for (i, np) in ineq.iter().enumerate() {
            if is_active[i] || excluded[i] {
                continue;
            }
            let s = sparse_dot(np, &x) + qp.inequalities[i].rhs;
            if s < worst {
                worst = s;
                ip = i;
            }
        }
        if ip == usize::MAX {
            break;
        }
        let np = &ineq[ip];
        u.push(0.0);
        active.push(meq + ip);
        // inner loop: steps until `ip` is added
        loop {
            iterations += 1;
            if iterations > max_iter {
                return Err(QpError::IterationLimit);
            }
            let d = st.d(np);
            let z = st.z(&d);
            let r = st.dual(&d);
            let iq = st.iq;
            let mut t1 = f64::INFINITY;
            let mut drop: Option<usize> = None;
            for k in meq..iq {
                if r[k] > 0.0 {
                    let t = u[k] / r[k];
                    if t < t1 {
                        t1 = t;
                        drop = Some(k);
                    }
                }
            }
            let zn = sparse_dot(np, &z);
            let t2 = if dot(&z, &z) > ZERO && zn > 0.0 {
                -(sparse_dot(np, &x) + qp.inequalities[ip].rhs) / zn
            } else {
                f64::INFINITY
            };
            let t = t1.min(t2);
            if t.is_infinite() {
                return Err(QpError::Infeasible);
            }
            if t2.is_infinite() {
                // dual step only
                for k in 0..iq {
                    u[k] -= t * r[k];
                }
                u[iq] += t;
                let qq = drop.expect("finite t1");
                remove_column(&mut st, &mut active, &mut u, &mut is_active, meq, qq);
                continue;
            }
            for (xk, zk) in x.iter_mut().zip(&z) {
                *xk += t * zk;
            }
            for k in 0..iq {
                u[k] -= t * r[k];
            }
            u[iq] += t;
            if t == t2 {
                if st.add(d) {
                    is_active[ip] = true;
                } else {
                    excluded[ip] = true;
                    u.pop();
                    active.pop();
                }
                break;
            }
            let qq = drop.expect("partial step has a blocking constraint");
            remove_column(&mut st, &mut active, &mut u, &mut is_active, meq, qq);
        }
    }

    let gx = &qp.hessian * DVector::from_column_slice(&x);
    let value = 0.5 * dot(gx.as_slice(), &x) + dot(qp.linear.as_slice(), &x);
    let mut act: Vec<usize> = active[meq..].iter().map(|&a| a - meq).collect();
    act.sort_unstable();
    Ok(QpSolution { x, value, iterations, active: act })
}

/// Drops active column `qq`; the pending constraint's multiplier sits at
/// `u[st.iq]` and moves down with it.
fn remove_column(
    st: &mut State,
    active: &mut Vec<usize>,
    u: &mut Vec<f64>,
    is_active: &mut [bool],
    meq: usize,
    qq: usize,
) {
    is_active[active[qq] - meq] = false;
    active.remove(qq);
    u.remove(qq);
    st.remove(qq);
}
