//! Small dense linear programs.
//!
//! Two-phase tableau simplex with Bland's rule. Meant for problems with tens
//! of variables: Chebyshev centers, degenerate containment, test oracles.

const PIVOT_TOL: f64 = 1e-11;
const MAX_PIVOTS: usize = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(coeffs: Vec<f64>, relation: Relation, rhs: f64) -> Self {
        Self { coeffs, relation, rhs }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
    /// Pivot limit reached (cycling or a badly scaled problem).
    Stalled,
}

/// Minimizes `cost · x` subject to `constraints`. Variable `j` is
/// unrestricted when `free[j]`, otherwise `x_j >= 0`.
pub fn minimize(cost: &[f64], constraints: &[Constraint], free: &[bool]) -> LpOutcome {
    let nvar = cost.len();
    assert_eq!(free.len(), nvar);
    // column map: original var -> (pos column, optional neg column)
    let mut col_of = Vec::with_capacity(nvar);
    let mut ncols = 0;
    for &f in free {
        if f {
            col_of.push((ncols, Some(ncols + 1)));
            ncols += 2;
        } else {
            col_of.push((ncols, None));
            ncols += 1;
        }
    }
    let structural = ncols;
    let m = constraints.len();

    // normalized rows with rhs >= 0
    let mut rows: Vec<(Vec<f64>, Relation, f64)> = Vec::with_capacity(m);
    for c in constraints {
        assert_eq!(c.coeffs.len(), nvar);
        let mut row = vec![0.0; structural];
        for (j, &a) in c.coeffs.iter().enumerate() {
            let (p, n) = col_of[j];
            row[p] = a;
            if let Some(n) = n {
                row[n] = -a;
            }
        }
        let (mut rel, mut rhs) = (c.relation, c.rhs);
        if rhs < 0.0 {
            row.iter_mut().for_each(|a| *a = -*a);
            rhs = -rhs;
            rel = match rel {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
        rows.push((row, rel, rhs));
    }

    let n_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != Relation::Le).count();
    let total = structural + n_slack + n_art;
    let art_start = structural + n_slack;
    let width = total + 1;
    let mut tab = vec![0.0; m * width];
    let mut basis = vec![0usize; m];
    let (mut s_idx, mut a_idx) = (structural, art_start);
    for (i, (row, rel, rhs)) in rows.iter().enumerate() {
        let r = &mut tab[i * width..(i + 1) * width];
        r[..structural].copy_from_slice(row);
        r[total] = *rhs;
        match rel {
            Relation::Le => {
                r[s_idx] = 1.0;
                basis[i] = s_idx;
                s_idx += 1;
            }
            Relation::Ge => {
                r[s_idx] = -1.0;
                s_idx += 1;
                r[a_idx] = 1.0;
                basis[i] = a_idx;
                a_idx += 1;
            }
            Relation::Eq => {
                r[a_idx] = 1.0;
                basis[i] = a_idx;
                a_idx += 1;
            }
        }
    }

    let mut tableau = Tableau { tab, width, m, basis, active: vec![true; m] };

    if n_art > 0 {
        let mut phase1 = vec![0.0; total];
        phase1[art_start..].iter_mut().for_each(|c| *c = 1.0);
        match tableau.optimize(&phase1, total) {
            Some(true) => {}
            Some(false) => return LpOutcome::Unbounded,
            None => return LpOutcome::Stalled,
        }
        let infeas: f64 = (0..m)
            .filter(|&i| tableau.active[i] && tableau.basis[i] >= art_start)
            .map(|i| tableau.rhs(i))
            .sum();
        let scale = 1.0 + rows.iter().map(|r| r.2).fold(0.0, f64::max);
        if infeas > 1e-9 * scale {
            return LpOutcome::Infeasible;
        }
        // drive artificials out of the basis
        for i in 0..m {
            if !tableau.active[i] || tableau.basis[i] < art_start {
                continue;
            }
            let entering = (0..art_start).find(|&j| tableau.at(i, j).abs() > 1e-9);
            match entering {
                Some(j) => tableau.pivot(i, j),
                None => tableau.active[i] = false,
            }
        }
    }

    let mut phase2 = vec![0.0; total];
    for (j, &c) in cost.iter().enumerate() {
        let (p, n) = col_of[j];
        phase2[p] = c;
        if let Some(n) = n {
            phase2[n] = -c;
        }
    }
    match tableau.optimize(&phase2, art_start) {
        Some(true) => {}
        Some(false) => return LpOutcome::Unbounded,
        None => return LpOutcome::Stalled,
    }
    let mut cols = vec![0.0; total];
    for i in 0..m {
        if tableau.active[i] {
            cols[tableau.basis[i]] = tableau.rhs(i);
        }
    }
    let x: Vec<f64> = col_of
        .iter()
        .map(|&(p, n)| cols[p] - n.map_or(0.0, |n| cols[n]))
        .collect();
    let value = x.iter().zip(cost).map(|(a, b)| a * b).sum();
    LpOutcome::Optimal { x, value }
}

struct Tableau {
    tab: Vec<f64>,
    width: usize,
    m: usize,
    basis: Vec<usize>,
    active: Vec<bool>,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.tab[i * self.width + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.tab[i * self.width + self.width - 1]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let p = self.tab[r * w + c];
        for k in 0..w {
            self.tab[r * w + k] /= p;
        }
        let pivot_row: Vec<f64> = self.tab[r * w..(r + 1) * w].to_vec();
        for i in 0..self.m {
            if i == r || !self.active[i] {
                continue;
            }
            let f = self.tab[i * w + c];
            if f != 0.0 {
                let row = &mut self.tab[i * w..(i + 1) * w];
                for (x, pv) in row.iter_mut().zip(&pivot_row) {
                    *x -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
    }

    /// Runs primal simplex over columns `< ncols`. `Some(true)` on optimum,
    /// `Some(false)` when unbounded, `None` on pivot limit.
    fn optimize(&mut self, cost: &[f64], ncols: usize) -> Option<bool> {
        for _ in 0..MAX_PIVOTS {
            // reduced costs: c_j - c_B B^-1 a_j
            let mut entering = None;
            for j in 0..ncols {
                if self.basis.iter().zip(&self.active).any(|(&b, &a)| a && b == j) {
                    continue;
                }
                let mut red = cost[j];
                for i in 0..self.m {
                    if self.active[i] {
                        red -= cost[self.basis[i]] * self.at(i, j);
                    }
                }
                if red < -PIVOT_TOL {
                    entering = Some(j);
                    break;
                }
            }
            let Some(c) = entering else { return Some(true) };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                if !self.active[i] {
                    continue;
                }
                let a = self.at(i, c);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - 1e-14
                                || (ratio <= lr + 1e-14 && self.basis[i] < self.basis[li])
                            {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else { return Some(false) };
            self.pivot(r, c);
        }
        None
    }
}
