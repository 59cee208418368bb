//! Dense two-phase primal simplex over `min c'x, x >= 0` with row senses
//! `<=`, `>=`, `=`. Returns both the primal point and row duals, verifies
//! optimality certificates, and is deterministic for a fixed input.

use crate::model::SolverConfig;
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct LpRow {
    pub coeffs: Vec<f64>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub rows: Vec<LpRow>,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> LinearProgram {
        LinearProgram { objective, rows: Vec::new() }
    }

    pub fn add_row(&mut self, coeffs: Vec<f64>, sense: Sense, rhs: f64) {
        assert_eq!(coeffs.len(), self.objective.len(), "row width mismatch");
        self.rows.push(LpRow { coeffs, sense, rhs });
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Primal/dual solution. `y[i]` is the nonnegative price of inequality row
/// `i` (for either direction) and the signed multiplier of an equality row;
/// `dual_objective` equals `objective` at an optimum.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub objective: f64,
    pub dual_objective: f64,
}

impl LpSolution {
    fn non_optimal(status: LpStatus) -> LpSolution {
        LpSolution {
            status,
            x: Vec::new(),
            y: Vec::new(),
            objective: f64::NAN,
            dual_objective: f64::NAN,
        }
    }
}

const EPS_PIVOT: f64 = 1e-11;
const EPS_RC: f64 = 1e-9;
const RATIO_TIE: f64 = 1e-12;
const MAX_PIVOTS: usize = 100_000;

#[derive(Clone, Copy, PartialEq, Eq)]
enum ColKind {
    Structural,
    Slack(usize),
    Surplus(usize),
    Artificial(usize),
}

struct Tableau {
    t: Vec<Vec<f64>>,
    obj: Vec<f64>,
    basis: Vec<usize>,
    enterable: Vec<bool>,
    ncols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let piv = self.t[r][c];
        for v in &mut self.t[r] {
            *v /= piv;
        }
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * p;
                }
                row[c] = 0.0;
            }
        }
        let f = self.obj[c];
        if f != 0.0 {
            for (v, p) in self.obj.iter_mut().zip(&pivot_row) {
                *v -= f * p;
            }
            self.obj[c] = 0.0;
        }
        self.basis[r] = c;
    }

    fn entering(&self, bland: bool) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.ncols {
            if !self.enterable[j] || self.obj[j] >= -EPS_RC {
                continue;
            }
            if bland {
                return Some(j);
            }
            match best {
                Some((_, v)) if self.obj[j] >= v => {}
                _ => best = Some((j, self.obj[j])),
            }
        }
        best.map(|(j, _)| j)
    }

    fn leaving(&self, c: usize) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.t.len() {
            let a = self.t[i][c];
            if a <= EPS_PIVOT {
                continue;
            }
            let ratio = self.t[i][self.ncols] / a;
            match best {
                None => best = Some((i, ratio)),
                Some((bi, bv)) => {
                    if ratio < bv - RATIO_TIE
                        || ((ratio - bv).abs() <= RATIO_TIE && self.basis[i] < self.basis[bi])
                    {
                        best = Some((i, ratio));
                    }
                }
            }
        }
        best.map(|(i, _)| i)
    }

    fn objective_value(&self) -> f64 {
        -self.obj[self.ncols]
    }

    /// Rebuilds the tableau and objective row from the original data for the
    /// current basis, discarding accumulated pivot drift. `original` is the
    /// initial tableau (with the right-hand side in the last column) and
    /// `cost` the active phase's objective over all columns.
    fn refactor(&mut self, original: &[Vec<f64>], cost: &[f64]) -> Result<(), Error> {
        let m = self.t.len();
        let ncols = self.ncols;
        // Gauss-Jordan on [B | A | b] with partial pivoting leaves the right
        // block as B^-1 [A | b] in basis-row order.
        let mut aug: Vec<Vec<f64>> = (0..m)
            .map(|i| {
                let mut row = Vec::with_capacity(m + ncols + 1);
                for k in 0..m {
                    row.push(original[i][self.basis[k]]);
                }
                row.extend_from_slice(&original[i]);
                row
            })
            .collect();
        for k in 0..m {
            let mut piv = k;
            for r in k + 1..m {
                if aug[r][k].abs() > aug[piv][k].abs() {
                    piv = r;
                }
            }
            if aug[piv][k].abs() < EPS_PIVOT {
                return Err(Error::Numerical("singular basis during refactorization".into()));
            }
            aug.swap(k, piv);
            let p = aug[k][k];
            for v in &mut aug[k] {
                *v /= p;
            }
            let pivot_row = aug[k].clone();
            for r in 0..m {
                if r == k {
                    continue;
                }
                let f = aug[r][k];
                if f != 0.0 {
                    for (v, pv) in aug[r].iter_mut().zip(&pivot_row) {
                        *v -= f * pv;
                    }
                }
            }
        }
        for (i, row) in aug.iter().enumerate() {
            self.t[i].copy_from_slice(&row[m..]);
        }
        // Basic columns are units by construction; snap away the rounding.
        for k in 0..m {
            let j = self.basis[k];
            for i in 0..m {
                self.t[i][j] = if i == k { 1.0 } else { 0.0 };
            }
        }
        let mut obj = vec![0.0; ncols + 1];
        obj[..ncols].copy_from_slice(cost);
        for i in 0..m {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                let row = self.t[i].clone();
                for (v, r) in obj.iter_mut().zip(&row) {
                    *v -= cb * *r;
                }
            }
        }
        for i in 0..m {
            obj[self.basis[i]] = 0.0;
        }
        self.obj = obj;
        Ok(())
    }

    /// `optimize` plus refactorization rounds until optimality or an
    /// unbounded direction survives a rebuild from fresh data.
    fn optimize_refactored(&mut self, original: &[Vec<f64>], cost: &[f64]) -> Result<bool, Error> {
        for _ in 0..16 {
            let improved = self.optimize()?;
            self.refactor(original, cost)?;
            if !improved {
                match self.entering(false) {
                    None => return Ok(true),
                    Some(c) => {
                        if self.leaving(c).is_none() {
                            return Ok(false);
                        }
                        continue;
                    }
                }
            }
            if self.entering(false).is_none() {
                return Ok(true);
            }
        }
        Err(Error::Numerical("optimality did not hold up under refactorization".into()))
    }

    /// Runs the simplex loop to optimality of the current objective row.
    /// Dantzig's rule with a permanent switch to Bland's rule after a stall.
    fn optimize(&mut self) -> Result<bool, Error> {
        let mut bland = false;
        let mut stall = 0usize;
        let stall_limit = 2 * (self.t.len() + self.ncols) + 32;
        let mut last = self.objective_value();
        for _ in 0..MAX_PIVOTS {
            let Some(c) = self.entering(bland) else {
                return Ok(true);
            };
            let Some(r) = self.leaving(c) else {
                return Ok(false); // unbounded direction
            };
            self.pivot(r, c);
            let now = self.objective_value();
            if last - now > 1e-12 * (1.0 + last.abs()) {
                stall = 0;
                last = now;
            } else {
                stall += 1;
                if stall > stall_limit {
                    bland = true;
                }
            }
        }
        Err(Error::Numerical("simplex pivot cap exceeded".into()))
    }
}

/// Solves the program, verifying primal/dual feasibility, strong duality and
/// complementary slackness before reporting an optimum. Certificate failures
/// beyond `1e3 * lp_tolerance` surface as a numerical error.
pub fn solve_primal_dual(lp: &LinearProgram, config: &SolverConfig) -> Result<LpSolution, Error> {
    let n = lp.n_vars();
    let m = lp.n_rows();
    if lp.objective.iter().any(|v| !v.is_finite())
        || lp
            .rows
            .iter()
            .any(|r| !r.rhs.is_finite() || r.coeffs.iter().any(|v| !v.is_finite()))
    {
        return Err(Error::Numerical("non-finite coefficient in LP".into()));
    }

    // Row normalization: make every right-hand side nonnegative, remembering
    // the flip to undo on the duals.
    let mut flip = vec![1.0f64; m];
    let mut norm: Vec<LpRow> = lp.rows.clone();
    for (i, row) in norm.iter_mut().enumerate() {
        if row.rhs < 0.0 {
            flip[i] = -1.0;
            row.rhs = -row.rhs;
            for v in &mut row.coeffs {
                *v = -*v;
            }
            row.sense = match row.sense {
                Sense::Le => Sense::Ge,
                Sense::Ge => Sense::Le,
                Sense::Eq => Sense::Eq,
            };
        }
    }

    // Column layout: structurals, then one slack or surplus per inequality,
    // then one artificial per >= or = row.
    let mut kinds: Vec<ColKind> = vec![ColKind::Structural; n];
    let mut slack_col = vec![usize::MAX; m];
    let mut art_col = vec![usize::MAX; m];
    for (i, row) in norm.iter().enumerate() {
        match row.sense {
            Sense::Le => {
                slack_col[i] = kinds.len();
                kinds.push(ColKind::Slack(i));
            }
            Sense::Ge => {
                slack_col[i] = kinds.len();
                kinds.push(ColKind::Surplus(i));
            }
            Sense::Eq => {}
        }
    }
    for (i, row) in norm.iter().enumerate() {
        if matches!(row.sense, Sense::Ge | Sense::Eq) {
            art_col[i] = kinds.len();
            kinds.push(ColKind::Artificial(i));
        }
    }
    let ncols = kinds.len();

    let mut t = vec![vec![0.0; ncols + 1]; m];
    let mut basis = vec![0usize; m];
    for i in 0..m {
        t[i][..n].copy_from_slice(&norm[i].coeffs);
        t[i][ncols] = norm[i].rhs;
        match norm[i].sense {
            Sense::Le => {
                t[i][slack_col[i]] = 1.0;
                basis[i] = slack_col[i];
            }
            Sense::Ge => {
                t[i][slack_col[i]] = -1.0;
                t[i][art_col[i]] = 1.0;
                basis[i] = art_col[i];
            }
            Sense::Eq => {
                t[i][art_col[i]] = 1.0;
                basis[i] = art_col[i];
            }
        }
    }
    let mut enterable: Vec<bool> = kinds
        .iter()
        .map(|k| !matches!(k, ColKind::Artificial(_)))
        .collect();
    let original = t.clone();
    let mut cost1 = vec![0.0; ncols];
    let mut cost2 = vec![0.0; ncols];
    for (j, k) in kinds.iter().enumerate() {
        if matches!(k, ColKind::Artificial(_)) {
            cost1[j] = 1.0;
        }
    }
    cost2[..n].copy_from_slice(&lp.objective);

    // Phase 1: minimize the sum of artificials.
    let mut obj = vec![0.0; ncols + 1];
    for k in kinds.iter().enumerate() {
        if let (j, ColKind::Artificial(_)) = k {
            obj[j] = 1.0;
        }
    }
    let mut tab = Tableau { t, obj, basis, enterable: enterable.clone(), ncols };
    for i in 0..m {
        if matches!(kinds[tab.basis[i]], ColKind::Artificial(_)) {
            let row = tab.t[i].clone();
            for (v, r) in tab.obj.iter_mut().zip(&row) {
                *v -= *r;
            }
        }
    }
    if !tab.optimize_refactored(&original, &cost1)? {
        return Err(Error::Numerical("phase-1 objective unbounded".into()));
    }
    let b_scale = norm.iter().fold(1.0f64, |s, r| s.max(r.rhs.abs()));
    if tab.objective_value() > config.lp_tolerance * b_scale {
        return Ok(LpSolution::non_optimal(LpStatus::Infeasible));
    }

    // Drive remaining artificials out of the basis where possible; rows
    // where no real pivot exists are redundant and keep a zero artificial.
    for i in 0..m {
        if !matches!(kinds[tab.basis[i]], ColKind::Artificial(_)) {
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for j in 0..ncols {
            if matches!(kinds[j], ColKind::Artificial(_)) {
                continue;
            }
            let a = tab.t[i][j].abs();
            if a > EPS_PIVOT && best.map_or(true, |(_, bv)| a > bv) {
                best = Some((j, a));
            }
        }
        if let Some((j, _)) = best {
            tab.pivot(i, j);
        }
    }

    // Phase 2: the real objective, artificials locked out.
    enterable
        .iter_mut()
        .enumerate()
        .for_each(|(j, e)| *e = !matches!(kinds[j], ColKind::Artificial(_)));
    tab.enterable = enterable;
    tab.obj = vec![0.0; ncols + 1];
    tab.obj[..n].copy_from_slice(&lp.objective);
    for i in 0..m {
        let b = tab.basis[i];
        let cb = if b < n { lp.objective[b] } else { 0.0 };
        if cb != 0.0 {
            let row = tab.t[i].clone();
            for (v, r) in tab.obj.iter_mut().zip(&row) {
                *v -= cb * *r;
            }
        }
    }
    if !tab.optimize_refactored(&original, &cost2)? {
        return Ok(LpSolution::non_optimal(LpStatus::Unbounded));
    }

    // Primal extraction.
    let mut x = vec![0.0; n];
    for i in 0..m {
        if tab.basis[i] < n {
            x[tab.basis[i]] = tab.t[i][ncols];
        }
    }
    let objective: f64 = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();

    // Duals of the normalized equality system, read off the reduced costs of
    // each row's unit column, then mapped back through the normalization.
    let mut y = vec![0.0; m];
    let mut y_signed = vec![0.0; m];
    for i in 0..m {
        let unit = match norm[i].sense {
            Sense::Le => slack_col[i],
            Sense::Ge | Sense::Eq => art_col[i],
        };
        let y_norm = -tab.obj[unit];
        let y_orig = flip[i] * y_norm;
        y_signed[i] = y_orig;
        y[i] = match lp.rows[i].sense {
            Sense::Le => -y_orig,
            Sense::Ge | Sense::Eq => y_orig,
        };
    }
    let dual_objective: f64 = lp.rows.iter().zip(&y_signed).map(|(r, yi)| r.rhs * yi).sum();

    verify_certificates(lp, &x, &y, &y_signed, objective, dual_objective, config)?;

    Ok(LpSolution { status: LpStatus::Optimal, x, y, objective, dual_objective })
}

fn verify_certificates(
    lp: &LinearProgram,
    x: &[f64],
    y: &[f64],
    y_signed: &[f64],
    objective: f64,
    dual_objective: f64,
    config: &SolverConfig,
) -> Result<(), Error> {
    let tol = 1e3 * config.lp_tolerance;
    let scale = 1.0 + objective.abs();
    for (j, &v) in x.iter().enumerate() {
        if v < -tol {
            return Err(Error::Numerical(format!("negative primal value x[{j}] = {v}")));
        }
    }
    for (i, row) in lp.rows.iter().enumerate() {
        let lhs: f64 = row.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
        let slack = row.rhs - lhs;
        let row_tol = tol * (1.0 + row.rhs.abs());
        let feasible = match row.sense {
            Sense::Le => slack >= -row_tol,
            Sense::Ge => slack <= row_tol,
            Sense::Eq => slack.abs() <= row_tol,
        };
        if !feasible {
            return Err(Error::Numerical(format!("primal infeasibility {slack} in row {i}")));
        }
        if !matches!(row.sense, Sense::Eq) {
            if y[i] < -tol {
                return Err(Error::Numerical(format!("dual sign violation y[{i}] = {}", y[i])));
            }
            if slack.abs() > row_tol && y[i].abs() * slack.abs() > tol * scale {
                return Err(Error::Numerical(format!(
                    "complementary slackness violation in row {i}"
                )));
            }
        }
    }
    for j in 0..lp.n_vars() {
        let priced: f64 = lp.rows.iter().zip(y_signed).map(|(r, yi)| r.coeffs[j] * yi).sum();
        let rc = lp.objective[j] - priced;
        if rc < -tol * (1.0 + lp.objective[j].abs()) {
            return Err(Error::Numerical(format!("dual infeasibility: rc[{j}] = {rc}")));
        }
        if x[j].abs() * rc.abs() > tol * scale * (1.0 + x[j].abs()) {
            return Err(Error::Numerical(format!(
                "complementary slackness violation on variable {j}"
            )));
        }
    }
    if (objective - dual_objective).abs() > tol * scale {
        return Err(Error::Numerical(format!(
            "strong duality gap {} vs {}",
            objective, dual_objective
        )));
    }
    Ok(())
}
