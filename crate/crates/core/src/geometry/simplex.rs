//! Dense two-phase tableau simplex for the tiny feasibility problems that
//! arise in hull certification.
//!
//! Problems are in standard form `min c·x  s.t.  A x = b, x ≥ 0`. Pivoting
//! uses Bland's rule throughout, so the routine never cycles and its result
//! is a deterministic function of the input.

const PIVOT_EPS: f64 = 1e-9;
const COST_EPS: f64 = 1e-11;

/// Outcome of a simplex solve.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum LpOutcome {
    /// Optimal basic solution and its objective value.
    Optimal {
        x: Vec<f64>,
        objective: f64,
    },
    /// Phase one ended with a positive L1 residual (two-phase solves only).
    Infeasible {
        residual: f64,
    },
    Unbounded,
    /// Iteration cap hit; the answer is unknown.
    IterationLimit,
    /// Roundoff left the tableau inconsistent with the original system.
    Unstable,
}

/// Standard-form linear program with a row-major constraint matrix.
#[derive(Debug, Clone)]
pub(crate) struct StandardLp {
    pub rows: usize,
    pub cols: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// `None` runs phase one only; the optimum reported is the minimal L1
    /// residual of `A x = b` over `x ≥ 0`.
    pub c: Option<Vec<f64>>,
}

struct Tableau {
    width: usize,
    // rows 0..m are constraints, row m is the objective row
    t: Vec<f64>,
    basis: Vec<usize>,
    m: usize,
}

impl Tableau {
    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.t[r * self.width + c]
    }

    fn rhs_col(&self) -> usize {
        self.width - 1
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width;
        let p = self.t[pr * w + pc];
        for c in 0..w {
            self.t[pr * w + c] /= p;
        }
        self.t[pr * w + pc] = 1.0;
        for r in 0..=self.m {
            if r == pr {
                continue;
            }
            let f = self.t[r * w + pc];
            if f != 0.0 {
                for c in 0..w {
                    let v = self.t[pr * w + c];
                    if v != 0.0 {
                        self.t[r * w + c] -= f * v;
                    }
                }
                self.t[r * w + pc] = 0.0;
            }
        }
        self.basis[pr] = pc;
    }

    /// Runs Bland-rule iterations over the columns `0..allowed`. Returns
    /// `Some(true)` at optimum, `Some(false)` if unbounded, `None` when the
    /// iteration budget runs out.
    fn iterate(&mut self, allowed: usize, budget: &mut usize) -> Option<bool> {
        let rhs = self.rhs_col();
        loop {
            let entering = (0..allowed).find(|&c| self.at(self.m, c) < -COST_EPS);
            let Some(pc) = entering else {
                return Some(true);
            };
            let mut best: Option<(usize, f64)> = None;
            for r in 0..self.m {
                let a = self.at(r, pc);
                if a > PIVOT_EPS {
                    let ratio = self.at(r, rhs) / a;
                    best = match best {
                        None => Some((r, ratio)),
                        Some((br, bratio)) => {
                            if ratio < bratio - 1e-15
                                || (ratio <= bratio + 1e-15 && self.basis[r] < self.basis[br])
                            {
                                Some((r, ratio))
                            } else {
                                Some((br, bratio))
                            }
                        }
                    };
                }
            }
            let Some((pr, _)) = best else {
                return Some(false);
            };
            if *budget == 0 {
                return None;
            }
            *budget -= 1;
            self.pivot(pr, pc);
        }
    }
}

impl StandardLp {
    /// Whether `x ≥ 0` solves `A x = b` to a scale-relative tolerance.
    fn satisfied_by(&self, x: &[f64]) -> bool {
        let scale = 1.0 + self.b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let xmax = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if x.iter().any(|v| *v < -1e-9 * (1.0 + xmax)) {
            return false;
        }
        (0..self.rows).all(|r| {
            let row = &self.a[r * self.cols..(r + 1) * self.cols];
            let lhs: f64 = row.iter().zip(x).map(|(a, v)| a * v).sum();
            (lhs - self.b[r]).abs() <= 1e-8 * scale * (1.0 + xmax)
        })
    }

    /// Solves the program with an iteration cap shared by both phases.
    pub(crate) fn solve(&self, max_iterations: usize) -> LpOutcome {
        let m = self.rows;
        let n = self.cols;
        let width = n + m + 1;
        let mut t = vec![0.0; (m + 1) * width];
        for r in 0..m {
            let sign = if self.b[r] < 0.0 { -1.0 } else { 1.0 };
            for c in 0..n {
                t[r * width + c] = sign * self.a[r * n + c];
            }
            t[r * width + n + r] = 1.0;
            t[r * width + width - 1] = sign * self.b[r];
        }
        // phase-one objective: sum of artificials, priced out
        for r in 0..m {
            for c in 0..n {
                t[m * width + c] -= t[r * width + c];
            }
            t[m * width + width - 1] -= t[r * width + width - 1];
        }
        let mut tab = Tableau {
            width,
            t,
            basis: (n..n + m).collect(),
            m,
        };
        let mut budget = max_iterations;
        match tab.iterate(n, &mut budget) {
            None => return LpOutcome::IterationLimit,
            // phase one is bounded below by zero, so this is roundoff
            Some(false) => return LpOutcome::Unstable,
            Some(true) => {}
        }
        let residual = -tab.at(m, width - 1);
        let Some(c) = &self.c else {
            // phase-one-only callers judge the residual against their own tolerance
            return LpOutcome::Optimal {
                x: extract(&tab, n),
                objective: residual.max(0.0),
            };
        };
        if residual > 1e-9 {
            return LpOutcome::Infeasible { residual };
        }
        // drive remaining artificials out of the basis where possible
        for r in 0..m {
            if tab.basis[r] >= n {
                if let Some(pc) = (0..n).find(|&c| tab.at(r, c).abs() > 1e-9) {
                    tab.pivot(r, pc);
                }
            }
        }
        // phase-two objective row
        for col in 0..width {
            tab.t[m * width + col] = 0.0;
        }
        for col in 0..n {
            tab.t[m * width + col] = c[col];
        }
        for r in 0..m {
            let bc = tab.basis[r];
            if bc < n && c[bc] != 0.0 {
                let f = c[bc];
                for col in 0..width {
                    let v = tab.t[r * width + col];
                    tab.t[m * width + col] -= f * v;
                }
            }
        }
        match tab.iterate(n, &mut budget) {
            None => LpOutcome::IterationLimit,
            Some(false) => LpOutcome::Unbounded,
            Some(true) => {
                let x = extract(&tab, n);
                if !self.satisfied_by(&x) {
                    return LpOutcome::Unstable;
                }
                let objective = x.iter().zip(c).map(|(a, b)| a * b).sum();
                LpOutcome::Optimal { x, objective }
            }
        }
    }
}

fn extract(tab: &Tableau, n: usize) -> Vec<f64> {
    let mut x = vec![0.0; n];
    let rhs = tab.rhs_col();
    for r in 0..tab.m {
        let bc = tab.basis[r];
        if bc < n {
            x[bc] = tab.at(r, rhs).max(0.0);
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_minimization() {
        // min -x0 - x1  s.t. x0 + x2 = 1, x1 + x3 = 2
        let lp = StandardLp {
            rows: 2,
            cols: 4,
            a: vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0],
            b: vec![1.0, 2.0],
            c: Some(vec![-1.0, -1.0, 0.0, 0.0]),
        };
        match lp.solve(100) {
            LpOutcome::Optimal { x, objective } => {
                assert!((objective + 3.0).abs() < 1e-12);
                assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 2.0).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reports_infeasibility_residual() {
        // x0 + x1 = 1 and x0 + x1 = 3 cannot both hold
        let lp = StandardLp {
            rows: 2,
            cols: 2,
            a: vec![1.0, 1.0, 1.0, 1.0],
            b: vec![1.0, 3.0],
            c: None,
        };
        match lp.solve(100) {
            LpOutcome::Optimal { objective, .. } => assert!((objective - 2.0).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn detects_unbounded() {
        // min -x0 s.t. x0 - x1 = 0
        let lp = StandardLp {
            rows: 1,
            cols: 2,
            a: vec![1.0, -1.0],
            b: vec![0.0],
            c: Some(vec![-1.0, 0.0]),
        };
        assert_eq!(lp.solve(100), LpOutcome::Unbounded);
    }

    #[test]
    fn iteration_cap_is_reported() {
        let lp = StandardLp {
            rows: 1,
            cols: 2,
            a: vec![1.0, 1.0],
            b: vec![1.0],
            c: None,
        };
        assert_eq!(lp.solve(0), LpOutcome::IterationLimit);
    }
}
