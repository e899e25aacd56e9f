//! General-form linear programs and an exact bounded-variable simplex.
//!
//! Variables carry explicit `[lower, upper]` bounds and are kept nonbasic at
//! one of them, so the basis size equals the number of (non-redundant) rows.
//! Every optimal answer is therefore a vertex: at most `rows` variables lie
//! strictly between their bounds. Pivoting follows Bland's rule for both the
//! entering and the leaving choice, so the method terminates and is a pure
//! function of its input.

use std::cmp::Ordering;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::model::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl Relation {
    pub fn holds(self, lhs: &Rational, rhs: &Rational) -> bool {
        match self {
            Relation::Le => lhs <= rhs,
            Relation::Eq => lhs == rhs,
            Relation::Ge => lhs >= rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Row {
    pub coefficients: Vec<Rational>,
    pub relation: Relation,
    pub rhs: Rational,
}

/// `lower <= x <= upper`; `upper = None` means unbounded above.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bounds {
    pub lower: Rational,
    pub upper: Option<Rational>,
}

impl Bounds {
    pub fn unit() -> Self {
        Bounds { lower: Rational::zero(), upper: Some(Rational::one()) }
    }

    pub fn fixed(value: Rational) -> Self {
        Bounds { lower: value.clone(), upper: Some(value) }
    }

    pub fn is_fixed(&self) -> bool {
        self.upper.as_ref() == Some(&self.lower)
    }

    pub fn contains(&self, value: &Rational) -> bool {
        *value >= self.lower && self.upper.as_ref().is_none_or(|u| value <= u)
    }

    pub fn strictly_inside(&self, value: &Rational) -> bool {
        *value > self.lower && self.upper.as_ref().is_none_or(|u| value < u)
    }
}

/// `max objective·x` subject to `rows` and per-variable `bounds`.
///
/// `labels` are opaque tags carried alongside each variable so callers can map
/// solved values back to their own objects.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearProgram<L = ()> {
    pub objective: Vec<Rational>,
    pub rows: Vec<Row>,
    pub bounds: Vec<Bounds>,
    pub labels: Vec<L>,
}

impl<L> LinearProgram<L> {
    /// One variable per label, each bounded to `[0, 1]`, zero objective, no rows.
    pub fn with_unit_variables(labels: Vec<L>) -> Self {
        let n = labels.len();
        LinearProgram {
            objective: vec![Rational::zero(); n],
            rows: Vec::new(),
            bounds: vec![Bounds::unit(); n],
            labels,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_row(&mut self, coefficients: Vec<Rational>, relation: Relation, rhs: Rational) {
        self.rows.push(Row { coefficients, relation, rhs });
    }

    pub fn fix(&mut self, var: usize, value: Rational) {
        self.bounds[var] = Bounds::fixed(value);
    }

    fn validate(&self) -> Result<(), LpError> {
        let n = self.objective.len();
        if self.bounds.len() != n || self.labels.len() != n {
            return Err(LpError::Malformed(format!(
                "{} objective coefficients, {} bounds, {} labels",
                n,
                self.bounds.len(),
                self.labels.len()
            )));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.coefficients.len() != n {
                return Err(LpError::Malformed(format!(
                    "row {i} has {} coefficients, expected {n}",
                    row.coefficients.len()
                )));
            }
        }
        for (j, b) in self.bounds.iter().enumerate() {
            if b.upper.as_ref().is_some_and(|u| *u < b.lower) {
                return Err(LpError::Malformed(format!("variable {j} has lower > upper")));
            }
        }
        Ok(())
    }

    /// Exact check of every row and bound.
    pub fn is_feasible(&self, values: &[Rational]) -> bool {
        values.len() == self.num_vars()
            && self.bounds.iter().zip(values).all(|(b, v)| b.contains(v))
            && self.rows.iter().all(|row| row.relation.holds(&dot(&row.coefficients, values), &row.rhs))
    }

    pub fn objective_at(&self, values: &[Rational]) -> Rational {
        dot(&self.objective, values)
    }

    /// Number of variables strictly between their bounds.
    pub fn strictly_fractional(&self, values: &[Rational]) -> usize {
        self.bounds.iter().zip(values).filter(|(b, v)| b.strictly_inside(v)).count()
    }
}

fn dot(coefficients: &[Rational], values: &[Rational]) -> Rational {
    coefficients
        .iter()
        .zip(values)
        .filter(|(c, _)| !c.is_zero())
        .map(|(c, v)| c * v)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasicSolution {
    pub status: LpStatus,
    /// Variable values; empty unless optimal.
    pub values: Vec<Rational>,
    pub objective_value: Rational,
    pub pivots: usize,
}

impl BasicSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    fn infeasible(pivots: usize) -> Self {
        BasicSolution {
            status: LpStatus::Infeasible,
            values: Vec::new(),
            objective_value: Rational::zero(),
            pivots,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("objective is unbounded")]
    Unbounded,
    #[error("malformed linear program: {0}")]
    Malformed(String),
    #[error("pivot limit of {0} exceeded")]
    PivotLimit(usize),
}

const PIVOT_LIMIT: usize = 1_000_000;

/// Solves `lp` to an optimal vertex, or reports infeasibility.
pub fn solve_to_vertex<L>(lp: &LinearProgram<L>) -> Result<BasicSolution, LpError> {
    lp.validate()?;
    let n = lp.num_vars();

    // Fixed variables leave the problem; their contribution moves to the rhs.
    let free: Vec<usize> = (0..n).filter(|&j| !lp.bounds[j].is_fixed()).collect();
    let mut kept_rows = Vec::with_capacity(lp.rows.len());
    for row in &lp.rows {
        let mut rhs = row.rhs.clone();
        for j in 0..n {
            if lp.bounds[j].is_fixed() && !row.coefficients[j].is_zero() {
                rhs -= &row.coefficients[j] * &lp.bounds[j].lower;
            }
        }
        let coefficients: Vec<Rational> = free.iter().map(|&j| row.coefficients[j].clone()).collect();
        let (min_act, max_act) = activity_range(&coefficients, free.iter().map(|&j| &lp.bounds[j]));
        let (below, above) = (
            max_act.as_ref().is_some_and(|hi| *hi < rhs),
            min_act.as_ref().is_some_and(|lo| *lo > rhs),
        );
        let infeasible = match row.relation {
            Relation::Le => above,
            Relation::Ge => below,
            Relation::Eq => above || below,
        };
        if infeasible {
            return Ok(BasicSolution::infeasible(0));
        }
        let redundant = match row.relation {
            Relation::Le => max_act.as_ref().is_some_and(|hi| *hi <= rhs),
            Relation::Ge => min_act.as_ref().is_some_and(|lo| *lo >= rhs),
            Relation::Eq => min_act.is_some() && min_act == max_act,
        };
        if !redundant {
            kept_rows.push(Row { coefficients, relation: row.relation, rhs });
        }
    }

    let bounds: Vec<Bounds> = free.iter().map(|&j| lp.bounds[j].clone()).collect();
    let objective: Vec<Rational> = free.iter().map(|&j| lp.objective[j].clone()).collect();
    let mut tableau = Tableau::new(&kept_rows, &bounds);
    let reduced = match tableau.run(&objective) {
        Ok(true) => tableau.structural_values(),
        Ok(false) => return Ok(BasicSolution::infeasible(tableau.pivots)),
        Err(e) => return Err(e),
    };

    let mut values: Vec<Rational> = lp.bounds.iter().map(|b| b.lower.clone()).collect();
    for (k, &j) in free.iter().enumerate() {
        values[j] = reduced[k].clone();
    }
    let objective_value = lp.objective_at(&values);
    debug_assert!(lp.is_feasible(&values));
    Ok(BasicSolution { status: LpStatus::Optimal, values, objective_value, pivots: tableau.pivots })
}

/// `(min, max)` of `coefficients·x` over the box; `None` where infinite.
fn activity_range<'a>(
    coefficients: &[Rational],
    bounds: impl Iterator<Item = &'a Bounds>,
) -> (Option<Rational>, Option<Rational>) {
    let mut lo = Some(Rational::zero());
    let mut hi = Some(Rational::zero());
    for (c, b) in coefficients.iter().zip(bounds) {
        if c.is_zero() {
            continue;
        }
        let at_lower = c * &b.lower;
        let at_upper = b.upper.as_ref().map(|u| c * u);
        let (small, large) = if c.is_positive() { (Some(at_lower), at_upper) } else { (at_upper, Some(at_lower)) };
        lo = lo.zip(small).map(|(x, y)| x + y);
        hi = hi.zip(large).map(|(x, y)| x + y);
    }
    (lo, hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic(usize),
    AtLower,
    AtUpper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Structural,
    Slack,
    Artificial,
}

/// Dense tableau `B^-1 A` over structural, slack and artificial columns.
struct Tableau {
    coeffs: Vec<Vec<Rational>>,
    basic_values: Vec<Rational>,
    basis: Vec<usize>,
    lower: Vec<Rational>,
    upper: Vec<Option<Rational>>,
    state: Vec<VarState>,
    kind: Vec<Kind>,
    structural: usize,
    pivots: usize,
}

enum Step {
    Optimal,
    Unbounded,
    Moved,
}

impl Tableau {
    fn new(rows: &[Row], bounds: &[Bounds]) -> Self {
        let structural = bounds.len();
        let mut lower: Vec<Rational> = bounds.iter().map(|b| b.lower.clone()).collect();
        let mut upper: Vec<Option<Rational>> = bounds.iter().map(|b| b.upper.clone()).collect();
        let mut kind = vec![Kind::Structural; structural];
        let mut state = vec![VarState::AtLower; structural];

        // Column layout: structurals, then one slack per inequality row, then artificials.
        let mut slack_of = vec![None; rows.len()];
        for (i, row) in rows.iter().enumerate() {
            if row.relation != Relation::Eq {
                slack_of[i] = Some(lower.len());
                lower.push(Rational::zero());
                upper.push(None);
                kind.push(Kind::Slack);
                state.push(VarState::AtLower);
            }
        }

        let mut basis = Vec::with_capacity(rows.len());
        let mut signs = Vec::with_capacity(rows.len());
        let mut basic_values = Vec::with_capacity(rows.len());
        let mut artificial_of = vec![None; rows.len()];
        for (i, row) in rows.iter().enumerate() {
            let residual = &row.rhs - dot(&row.coefficients, &lower[..structural]);
            let slack_fits = match row.relation {
                Relation::Le => !residual.is_negative(),
                Relation::Ge => !residual.is_positive(),
                Relation::Eq => false,
            };
            // The basic column of row i gets coefficient `sign`; the row is
            // scaled by `sign` so that column becomes a unit vector.
            let (col, sign) = if slack_fits {
                let sign = if row.relation == Relation::Le { 1 } else { -1 };
                (slack_of[i].expect("inequality row has a slack"), sign)
            } else {
                let col = lower.len();
                artificial_of[i] = Some(col);
                lower.push(Rational::zero());
                upper.push(None);
                kind.push(Kind::Artificial);
                state.push(VarState::AtLower);
                (col, if residual.is_negative() { -1 } else { 1 })
            };
            basis.push(col);
            signs.push(sign);
            basic_values.push(if sign > 0 { residual } else { -residual });
        }

        let width = lower.len();
        let mut coeffs = Vec::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            let sign = Rational::from_integer(signs[i].into());
            let mut line = vec![Rational::zero(); width];
            for (j, c) in row.coefficients.iter().enumerate() {
                if !c.is_zero() {
                    line[j] = c * &sign;
                }
            }
            if let Some(s) = slack_of[i] {
                let coefficient = if row.relation == Relation::Le { 1 } else { -1 };
                line[s] = Rational::from_integer((coefficient * signs[i]).into());
            }
            if let Some(a) = artificial_of[i] {
                line[a] = Rational::one();
            }
            coeffs.push(line);
        }
        for (i, &col) in basis.iter().enumerate() {
            state[col] = VarState::Basic(i);
        }

        Tableau { coeffs, basic_values, basis, lower, upper, state, kind, structural, pivots: 0 }
    }

    fn width(&self) -> usize {
        self.lower.len()
    }

    fn nonbasic_value(&self, j: usize) -> &Rational {
        match self.state[j] {
            VarState::AtUpper => self.upper[j].as_ref().expect("at upper implies finite upper"),
            _ => &self.lower[j],
        }
    }

    /// Runs both phases. `Ok(false)` means infeasible.
    fn run(&mut self, objective: &[Rational]) -> Result<bool, LpError> {
        let has_artificials = self.kind.contains(&Kind::Artificial);
        if has_artificials {
            let phase_one: Vec<Rational> = self
                .kind
                .iter()
                .map(|k| if *k == Kind::Artificial { -Rational::one() } else { Rational::zero() })
                .collect();
            let mut reduced = self.reduced_costs(&phase_one);
            self.optimize(&mut reduced, false)?;
            let infeasibility: Rational = self
                .basis
                .iter()
                .zip(&self.basic_values)
                .filter(|(&col, _)| self.kind[col] == Kind::Artificial)
                .map(|(_, v)| v.clone())
                .sum();
            if infeasibility.is_positive() {
                return Ok(false);
            }
            self.expel_artificials();
        }
        let mut cost = vec![Rational::zero(); self.width()];
        cost[..self.structural].clone_from_slice(objective);
        let mut reduced = self.reduced_costs(&cost);
        match self.optimize(&mut reduced, true) {
            Ok(()) => Ok(true),
            Err(e) => Err(e),
        }
    }

    fn reduced_costs(&self, cost: &[Rational]) -> Vec<Rational> {
        let mut reduced = cost.to_vec();
        for (i, &col) in self.basis.iter().enumerate() {
            let cb = &cost[col];
            if cb.is_zero() {
                continue;
            }
            for (j, t) in self.coeffs[i].iter().enumerate() {
                if !t.is_zero() {
                    reduced[j] -= cb * t;
                }
            }
        }
        reduced
    }

    fn optimize(&mut self, reduced: &mut [Rational], phase_two: bool) -> Result<(), LpError> {
        loop {
            if self.pivots >= PIVOT_LIMIT {
                return Err(LpError::PivotLimit(PIVOT_LIMIT));
            }
            match self.step(reduced, phase_two) {
                Step::Optimal => return Ok(()),
                Step::Unbounded => return Err(LpError::Unbounded),
                Step::Moved => self.pivots += 1,
            }
        }
    }

    fn step(&mut self, reduced: &mut [Rational], phase_two: bool) -> Step {
        // Bland: lowest-index improving column.
        let entering = (0..self.width()).find(|&j| {
            if phase_two && self.kind[j] == Kind::Artificial {
                return false;
            }
            match self.state[j] {
                VarState::Basic(_) => false,
                VarState::AtLower => {
                    reduced[j].is_positive() && self.upper[j].as_ref() != Some(&self.lower[j])
                }
                VarState::AtUpper => reduced[j].is_negative(),
            }
        });
        let Some(q) = entering else { return Step::Optimal };
        let increasing = self.state[q] == VarState::AtLower;

        // Ratio test; ties go to the lowest variable index.
        let mut best: Option<(Rational, usize, Option<usize>)> = None;
        let mut offer = |limit: Rational, var: usize, row: Option<usize>| {
            let better = match &best {
                None => true,
                Some((t, v, _)) => match limit.cmp(t) {
                    Ordering::Less => true,
                    Ordering::Equal => var < *v,
                    Ordering::Greater => false,
                },
            };
            if better {
                best = Some((limit, var, row));
            }
        };
        if let Some(u) = &self.upper[q] {
            offer(u - &self.lower[q], q, None);
        }
        for i in 0..self.basis.len() {
            let t = &self.coeffs[i][q];
            if t.is_zero() {
                continue;
            }
            // x_B(i) changes at rate -t per unit increase of x_q.
            let rate = if increasing { -t } else { t.clone() };
            let k = self.basis[i];
            if rate.is_negative() {
                offer((&self.basic_values[i] - &self.lower[k]) / -&rate, k, Some(i));
            } else if let Some(u) = &self.upper[k] {
                offer((u - &self.basic_values[i]) / &rate, k, Some(i));
            }
        }
        let Some((step, _, row)) = best else { return Step::Unbounded };

        let entering_value = if increasing {
            self.nonbasic_value(q) + &step
        } else {
            self.nonbasic_value(q) - &step
        };
        if !step.is_zero() {
            for i in 0..self.basis.len() {
                let t = &self.coeffs[i][q];
                if t.is_zero() {
                    continue;
                }
                let delta = t * &step;
                if increasing {
                    self.basic_values[i] -= delta;
                } else {
                    self.basic_values[i] += delta;
                }
            }
        }

        match row {
            None => {
                self.state[q] = if increasing { VarState::AtUpper } else { VarState::AtLower };
            }
            Some(r) => {
                let leaving = self.basis[r];
                let at_lower = self.basic_values[r] == self.lower[leaving];
                self.state[leaving] = if at_lower { VarState::AtLower } else { VarState::AtUpper };
                self.pivot(r, q, reduced);
                self.basic_values[r] = entering_value;
            }
        }
        Step::Moved
    }

    /// Makes column `q` basic in row `r`; updates the tableau and `reduced`.
    fn pivot(&mut self, r: usize, q: usize, reduced: &mut [Rational]) {
        let pivot = self.coeffs[r][q].clone();
        if !pivot.is_one() {
            for t in self.coeffs[r].iter_mut() {
                if !t.is_zero() {
                    *t /= &pivot;
                }
            }
        }
        let pivot_row = std::mem::take(&mut self.coeffs[r]);
        let support: Vec<usize> = (0..pivot_row.len()).filter(|&j| !pivot_row[j].is_zero()).collect();
        for (i, line) in self.coeffs.iter_mut().enumerate() {
            if i == r || line[q].is_zero() {
                continue;
            }
            let factor = line[q].clone();
            for &j in &support {
                line[j] -= &factor * &pivot_row[j];
            }
        }
        if !reduced[q].is_zero() {
            let factor = reduced[q].clone();
            for &j in &support {
                reduced[j] -= &factor * &pivot_row[j];
            }
        }
        self.coeffs[r] = pivot_row;
        self.state[self.basis[r]] = match self.state[self.basis[r]] {
            VarState::Basic(_) => VarState::AtLower,
            s => s,
        };
        self.basis[r] = q;
        self.state[q] = VarState::Basic(r);
    }

    /// After a successful phase one every artificial sits at zero. Pivot each
    /// basic one out on any non-artificial column; rows where none exists are
    /// redundant and keep an artificial pinned to `[0, 0]`.
    fn expel_artificials(&mut self) {
        for j in 0..self.width() {
            if self.kind[j] == Kind::Artificial {
                self.upper[j] = Some(Rational::zero());
            }
        }
        for r in 0..self.basis.len() {
            if self.kind[self.basis[r]] != Kind::Artificial {
                continue;
            }
            let replacement = (0..self.width()).find(|&j| {
                self.kind[j] != Kind::Artificial
                    && !matches!(self.state[j], VarState::Basic(_))
                    && !self.coeffs[r][j].is_zero()
            });
            if let Some(q) = replacement {
                let value = self.nonbasic_value(q).clone();
                let mut scratch = vec![Rational::zero(); self.width()];
                self.state[self.basis[r]] = VarState::AtLower;
                self.pivot(r, q, &mut scratch);
                self.basic_values[r] = value;
                self.pivots += 1;
            }
        }
    }

    fn structural_values(&self) -> Vec<Rational> {
        (0..self.structural)
            .map(|j| match self.state[j] {
                VarState::Basic(i) => self.basic_values[i].clone(),
                _ => self.nonbasic_value(j).clone(),
            })
            .collect()
    }
}

/// Optimum of `max p·x, w·x <= capacity, x in [0,1]^n` by density-greedy.
/// Reference value for single-row programs.
pub fn fractional_knapsack_oracle(profits: &[Rational], weights: &[Rational], capacity: &Rational) -> Rational {
    let mut total = Rational::zero();
    let mut room = capacity.clone();
    let mut weighted = Vec::new();
    for (i, (p, w)) in profits.iter().zip(weights).enumerate() {
        if w.is_zero() {
            total += p;
        } else {
            weighted.push(i);
        }
    }
    weighted.sort_by(|&x, &y| {
        let dx = &profits[x] / &weights[x];
        let dy = &profits[y] / &weights[y];
        dy.cmp(&dx).then(x.cmp(&y))
    });
    for i in weighted {
        if !room.is_positive() {
            break;
        }
        if weights[i] <= room {
            total += &profits[i];
            room -= &weights[i];
        } else {
            total += &profits[i] * &room / &weights[i];
            room = Rational::zero();
        }
    }
    total
}
