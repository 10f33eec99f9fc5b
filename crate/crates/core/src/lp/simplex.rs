//! Dense tableau implementation of the two-phase primal simplex method, generic
//! over `f64` and exact rationals.

use num::{BigRational, Signed, ToPrimitive, Zero};

use super::{
    Arithmetic, LinearProgram, LpError, LpSolution, LpStatus, Pricing, Relation, SolverOptions, VarBound,
};

/// Consecutive degenerate pivots tolerated before switching to the
/// smallest-index rule.
const DEGENERATE_RUN: usize = 30;

pub(super) trait Scalar: Clone + PartialOrd + Signed + std::fmt::Debug {
    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;
    /// Flushes rounding noise to zero.
    fn snap(self) -> Self;
}

impl Scalar for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn snap(self) -> Self {
        if self.abs() < 1e-13 {
            0.0
        } else {
            self
        }
    }
}

impl Scalar for BigRational {
    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("finite input")
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn snap(self) -> Self {
        self
    }
}

struct Tols<T> {
    feas: T,
    opt: T,
    piv: T,
    tie: T,
}

struct Tableau<T> {
    m: usize,
    n: usize,
    w: usize,
    a: Vec<T>,
    d: Vec<T>,
    z: T,
    basis: Vec<usize>,
    enterable: Vec<bool>,
    pivots: usize,
    /// Costs currently priced, kept for reinversion.
    cost: Vec<T>,
    /// Initial tableau; when present the working tableau is periodically
    /// recomputed from it to shed accumulated rounding error.
    orig: Option<Vec<T>>,
    since_refresh: usize,
    /// Unperturbed right-hand side of the initial tableau.
    base_rhs: Vec<T>,
}

/// Pivots between reinversions of the float tableau.
const REFRESH_EVERY: usize = 100;

enum Outcome {
    Optimal,
    Unbounded,
}

impl<T: Scalar> Tableau<T> {
    fn at(&self, i: usize, j: usize) -> &T {
        &self.a[i * self.w + j]
    }

    fn rhs(&self, i: usize) -> &T {
        &self.a[i * self.w + self.n]
    }

    fn pivot(&mut self, p: usize, q: usize) {
        let w = self.w;
        let piv = self.a[p * w + q].clone();
        let mut nz = Vec::new();
        for j in 0..w {
            let v = &mut self.a[p * w + j];
            if !v.is_zero() {
                *v = (v.clone() / piv.clone()).snap();
                nz.push(j);
            }
        }
        self.a[p * w + q] = T::one();
        let (before, rest) = self.a.split_at_mut(p * w);
        let (prow, after) = rest.split_at_mut(w);
        for row in before.chunks_mut(w).chain(after.chunks_mut(w)) {
            let f = row[q].clone();
            if f.is_zero() {
                continue;
            }
            for &j in &nz {
                row[j] = (row[j].clone() - f.clone() * prow[j].clone()).snap();
            }
            row[q] = T::zero();
        }
        let f = self.d[q].clone();
        if !f.is_zero() {
            for &j in &nz {
                if j < self.n {
                    self.d[j] = (self.d[j].clone() - f.clone() * prow[j].clone()).snap();
                } else {
                    self.z = self.z.clone() + f.clone() * prow[j].clone();
                }
            }
            self.d[q] = T::zero();
        }
        self.basis[p] = q;
        self.pivots += 1;
        self.since_refresh += 1;
    }

    /// Recomputes `B^-1 [A | b]` from the initial tableau by Gauss-Jordan
    /// elimination with partial pivoting. Leaves the tableau untouched if the
    /// basis looks singular.
    fn refresh(&mut self) {
        let Some(orig) = &self.orig else { return };
        self.since_refresh = 0;
        let (m, w) = (self.m, self.w);
        let width = m + w;
        let mut aug = vec![T::zero(); m * width];
        for i in 0..m {
            for (k, &col) in self.basis.iter().enumerate() {
                aug[i * width + k] = orig[i * w + col].clone();
            }
            for j in 0..w {
                aug[i * width + m + j] = orig[i * w + j].clone();
            }
        }
        for k in 0..m {
            let mut best = k;
            for i in k + 1..m {
                if aug[i * width + k].abs() > aug[best * width + k].abs() {
                    best = i;
                }
            }
            if aug[best * width + k].abs().to_f64() < 1e-11 {
                return;
            }
            if best != k {
                for j in 0..width {
                    aug.swap(k * width + j, best * width + j);
                }
            }
            let piv = aug[k * width + k].clone();
            let nz: Vec<usize> = (k..width).filter(|&j| !aug[k * width + j].is_zero()).collect();
            for &j in &nz {
                aug[k * width + j] = aug[k * width + j].clone() / piv.clone();
            }
            let (before, rest) = aug.split_at_mut(k * width);
            let (prow, after) = rest.split_at_mut(width);
            for row in before.chunks_mut(width).chain(after.chunks_mut(width)) {
                let f = row[k].clone();
                if f.is_zero() {
                    continue;
                }
                for &j in &nz {
                    row[j] = row[j].clone() - f.clone() * prow[j].clone();
                }
            }
        }
        for i in 0..m {
            for j in 0..w {
                self.a[i * w + j] = aug[i * width + m + j].clone().snap();
            }
            self.a[i * w + self.basis[i]] = T::one();
        }
        let c = self.cost.clone();
        self.price(&c);
    }

    /// Recomputes reduced costs and objective for column costs `c`.
    fn price(&mut self, c: &[T]) {
        self.cost = c.to_vec();
        let mut d = c.to_vec();
        let mut z = T::zero();
        for i in 0..self.m {
            let cb = &c[self.basis[i]];
            if cb.is_zero() {
                continue;
            }
            for (j, dj) in d.iter_mut().enumerate() {
                let a = self.at(i, j);
                if !a.is_zero() {
                    *dj = dj.clone() - cb.clone() * a.clone();
                }
            }
            z = z + cb.clone() * self.rhs(i).clone();
        }
        self.d = d;
        self.z = z;
    }

    /// Shifts the values of the non-artificial basic variables by small
    /// distinct amounts so that phase two meets no degenerate vertices. The
    /// shift is mirrored in the stored right-hand side so that reinversion
    /// preserves it. Only applies when reinversion data is kept.
    fn perturb(&mut self) -> bool {
        let Some(orig) = self.orig.as_mut() else { return false };
        let (w, n) = (self.w, self.n);
        self.base_rhs = (0..self.m).map(|i| orig[i * w + n].clone()).collect();
        let mut state: u64 = 0x9e37_79b9_7f4a_7c15;
        for i in 0..self.m {
            let col = self.basis[i];
            if !self.enterable[col] {
                continue;
            }
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let u = (state >> 11) as f64 / (1u64 << 53) as f64;
            let delta = T::from_f64(1e-6 * (1.0 + u));
            self.a[i * w + n] = self.a[i * w + n].clone() + delta.clone();
            for r in 0..self.m {
                let v = orig[r * w + col].clone();
                if !v.is_zero() {
                    orig[r * w + n] = orig[r * w + n].clone() + v * delta.clone();
                }
            }
        }
        true
    }

    /// Removes the perturbation and recomputes the basic solution.
    fn restore(&mut self) {
        if let Some(orig) = self.orig.as_mut() {
            for (i, b) in self.base_rhs.iter().enumerate() {
                orig[i * self.w + self.n] = b.clone();
            }
        }
        self.refresh();
    }

    /// Dual simplex pivots restoring primal feasibility of a dual feasible
    /// basis. Returns `false` when a row proves the program infeasible.
    fn dual_cleanup(&mut self, tols: &Tols<T>, max_pivots: usize) -> Result<bool, LpError> {
        loop {
            if self.pivots >= max_pivots {
                return Err(LpError::Stall { pivots: self.pivots });
            }
            let mut r: Option<usize> = None;
            for i in 0..self.m {
                let b = self.rhs(i);
                if *b < -tols.feas.clone() && r.map_or(true, |k| b < self.rhs(k)) {
                    r = Some(i);
                }
            }
            let Some(r) = r else {
                if self.since_refresh > 0 {
                    self.refresh();
                    continue;
                }
                return Ok(true);
            };
            let mut best: Option<(usize, T)> = None;
            for j in 0..self.n {
                let a = self.at(r, j);
                if !self.enterable[j] || *a >= -tols.piv.clone() {
                    continue;
                }
                let dj = if self.d[j].is_positive() { T::zero() } else { self.d[j].clone() };
                let ratio = dj / a.clone();
                let replace = match &best {
                    None => true,
                    Some((k, br)) => ratio < *br || (ratio == *br && a.abs() > self.at(r, *k).abs()),
                };
                if replace {
                    best = Some((j, ratio));
                }
            }
            let Some((q, _)) = best else { return Ok(false) };
            self.pivot(r, q);
            if self.since_refresh >= REFRESH_EVERY {
                self.refresh();
            }
        }
    }

    /// Minimum ratio with ties broken by smallest basic index.
    fn ratio_bland(&self, q: usize, tols: &Tols<T>) -> Option<(usize, T)> {
        let mut best: Option<(usize, T)> = None;
        for i in 0..self.m {
            let aiq = self.at(i, q);
            if *aiq <= tols.piv {
                continue;
            }
            let b = self.rhs(i);
            let r = if b.is_negative() { T::zero() } else { b.clone() / aiq.clone() };
            let replace = match &best {
                None => true,
                Some((bi, br)) => {
                    let slack = tols.tie.clone() * (T::one() + br.abs());
                    r < br.clone() - slack.clone() || (r <= br.clone() + slack && self.basis[i] < self.basis[*bi])
                }
            };
            if replace {
                best = Some((i, r));
            }
        }
        best
    }

    /// Two-pass ratio test: among rows whose ratio is within the feasibility
    /// tolerance of the minimum, take the largest pivot.
    fn ratio_harris(&self, q: usize, tols: &Tols<T>) -> Option<(usize, T)> {
        let mut bound: Option<T> = None;
        for i in 0..self.m {
            let aiq = self.at(i, q);
            if *aiq <= tols.piv {
                continue;
            }
            let r = (self.rhs(i).clone() + tols.feas.clone()) / aiq.clone();
            if bound.as_ref().map_or(true, |b| r < *b) {
                bound = Some(r);
            }
        }
        let bound = bound?;
        let mut best: Option<usize> = None;
        for i in 0..self.m {
            let aiq = self.at(i, q);
            if *aiq <= tols.piv {
                continue;
            }
            let r = self.rhs(i).clone() / aiq.clone();
            if r <= bound && best.map_or(true, |k| aiq > self.at(k, q)) {
                best = Some(i);
            }
        }
        best.map(|i| {
            let b = self.rhs(i);
            let r = if b.is_negative() { T::zero() } else { b.clone() / self.at(i, q).clone() };
            (i, r)
        })
    }

    fn optimize(&mut self, tols: &Tols<T>, pricing: Pricing, max_pivots: usize) -> Result<Outcome, LpError> {
        let mut bland = pricing == Pricing::Bland;
        let mut run = 0usize;
        loop {
            if self.pivots >= max_pivots {
                return Err(LpError::Stall { pivots: self.pivots });
            }
            let mut q = None;
            for j in 0..self.n {
                if !self.enterable[j] || self.d[j] <= tols.opt {
                    continue;
                }
                if bland {
                    q = Some(j);
                    break;
                }
                match q {
                    Some(k) if self.d[k] >= self.d[j] => {}
                    _ => q = Some(j),
                }
            }
            let Some(q) = q else {
                if self.orig.is_some() && self.since_refresh > 0 {
                    self.refresh();
                    continue;
                }
                return Ok(Outcome::Optimal);
            };

            let best = if bland { self.ratio_bland(q, tols) } else { self.ratio_harris(q, tols) };
            let Some((p, ratio)) = best else {
                if self.orig.is_some() && self.since_refresh > 0 {
                    self.refresh();
                    continue;
                }
                return Ok(Outcome::Unbounded);
            };
            let degenerate = ratio <= tols.feas;
            self.pivot(p, q);
            if self.orig.is_some() && self.since_refresh >= REFRESH_EVERY {
                self.refresh();
            }
            if pricing == Pricing::Hybrid {
                if degenerate {
                    run += 1;
                    if run > DEGENERATE_RUN {
                        bland = true;
                    }
                } else {
                    run = 0;
                    bland = false;
                }
            }
        }
    }
}

pub(super) fn run(lp: &LinearProgram, opts: &SolverOptions) -> Result<LpSolution, LpError> {
    match opts.arithmetic {
        Arithmetic::Float => {
            let tols = Tols { feas: opts.feasibility_tol, opt: opts.optimality_tol, piv: 1e-7, tie: 1e-12 };
            run_generic::<f64>(lp, opts, &tols, true)
        }
        Arithmetic::Exact => {
            let z = BigRational::zero();
            let tols = Tols { feas: z.clone(), opt: z.clone(), piv: z.clone(), tie: z };
            run_generic::<BigRational>(lp, opts, &tols, false)
        }
    }
}

fn run_generic<T: Scalar>(lp: &LinearProgram, opts: &SolverOptions, tols: &Tols<T>, scale_rows: bool) -> Result<LpSolution, LpError> {
    let nv = lp.num_vars();
    let m = lp.num_rows();

    // structural columns: one per variable plus a negative part for free ones
    let mut pos = Vec::with_capacity(nv);
    let mut neg = vec![None; nv];
    let mut ns = 0;
    for j in 0..nv {
        pos.push(ns);
        ns += 1;
        if lp.bounds[j] == VarBound::Free {
            neg[j] = Some(ns);
            ns += 1;
        }
    }

    // normalise rows to non-negative right-hand sides and unit max coefficient
    let mut factor = Vec::with_capacity(m);
    let mut rel = Vec::with_capacity(m);
    for r in &lp.constraints {
        let sign = if r.rhs < 0.0 { -1.0 } else { 1.0 };
        let scale = if scale_rows {
            r.coeffs.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max)
        } else {
            0.0
        };
        let f = if scale > 0.0 { sign / scale } else { sign };
        factor.push(f);
        rel.push(match (r.relation, sign < 0.0) {
            (Relation::Le, true) => Relation::Ge,
            (Relation::Ge, true) => Relation::Le,
            (x, _) => x,
        });
    }
    let n_slack = rel.iter().filter(|r| **r != Relation::Eq).count();
    let n_art = rel.iter().filter(|r| **r != Relation::Le).count();
    let n = ns + n_slack + n_art;
    let first_art = ns + n_slack;
    let w = n + 1;

    let mut a = vec![T::zero(); m * w];
    let mut basis = vec![0; m];
    let mut ident = vec![0; m];
    let mut next_slack = ns;
    let mut next_art = first_art;
    for (i, r) in lp.constraints.iter().enumerate() {
        let f = factor[i];
        let row = &mut a[i * w..(i + 1) * w];
        for &(j, v) in &r.coeffs {
            // in exact mode f is +-1, so the product is exact
            let x = T::from_f64(v * f);
            row[pos[j]] = x.clone();
            if let Some(k) = neg[j] {
                row[k] = -x;
            }
        }
        row[n] = T::from_f64(r.rhs * f);
        match rel[i] {
            Relation::Le => {
                row[next_slack] = T::one();
                basis[i] = next_slack;
                ident[i] = next_slack;
                next_slack += 1;
            }
            Relation::Ge => {
                row[next_slack] = -T::one();
                next_slack += 1;
                row[next_art] = T::one();
                basis[i] = next_art;
                ident[i] = next_art;
                next_art += 1;
            }
            Relation::Eq => {
                row[next_art] = T::one();
                basis[i] = next_art;
                ident[i] = next_art;
                next_art += 1;
            }
        }
    }

    let mut tab = Tableau {
        m,
        n,
        w,
        a,
        d: vec![T::zero(); n],
        z: T::zero(),
        basis,
        enterable: (0..n).map(|j| j < first_art).collect(),
        pivots: 0,
        cost: vec![T::zero(); n],
        orig: None,
        since_refresh: 0,
        base_rhs: Vec::new(),
    };
    if scale_rows {
        tab.orig = Some(tab.a.clone());
    }

    // Degenerate crash: rows with zero right-hand side take a structural or
    // slack column into the basis straight away, which leaves the basic
    // solution unchanged and spares phase one most of its work.
    for i in 0..m {
        if tab.basis[i] < first_art || !tab.rhs(i).is_zero() {
            continue;
        }
        let mut best: Option<usize> = None;
        for j in 0..first_art {
            let v = tab.at(i, j).abs();
            if v > tols.piv && best.map_or(true, |k| v > tab.at(i, k).abs()) {
                best = Some(j);
            }
        }
        if let Some(j) = best {
            tab.pivot(i, j);
        }
    }
    tab.pivots = 0;
    tab.refresh();
    let max_pivots = opts.max_pivots.unwrap_or_else(|| 50_000usize.max(20 * (m + n)));

    if n_art > 0 {
        let mut c1 = vec![T::zero(); n];
        for c in c1.iter_mut().skip(first_art) {
            *c = -T::one();
        }
        tab.price(&c1);
        let initial = -tab.z.clone();
        tab.optimize(tols, opts.pricing, max_pivots)?;
        let threshold = tols.feas.clone() * (T::one() + initial);
        if -tab.z.clone() > threshold {
            return Ok(LpSolution::without_point(LpStatus::Infeasible, nv, m, tab.pivots));
        }
        // drive remaining artificials out of the basis where possible
        for i in 0..m {
            if tab.basis[i] < first_art {
                continue;
            }
            let mut best: Option<usize> = None;
            for j in 0..first_art {
                let v = tab.at(i, j).abs();
                if v > tols.piv && best.map_or(true, |k| v > tab.at(i, k).abs()) {
                    best = Some(j);
                }
            }
            if let Some(j) = best {
                tab.pivot(i, j);
            }
        }
    }

    let mut c = vec![T::zero(); n];
    for j in 0..nv {
        c[pos[j]] = T::from_f64(lp.objective[j]);
        if let Some(k) = neg[j] {
            c[k] = -T::from_f64(lp.objective[j]);
        }
    }
    tab.price(&c);
    let perturbed = tab.perturb();
    if let Outcome::Unbounded = tab.optimize(tols, opts.pricing, max_pivots)? {
        return Ok(LpSolution::without_point(LpStatus::Unbounded, nv, m, tab.pivots));
    }
    if perturbed {
        tab.restore();
        if !tab.dual_cleanup(tols, max_pivots)? {
            return Ok(LpSolution::without_point(LpStatus::Infeasible, nv, m, tab.pivots));
        }
        if let Outcome::Unbounded = tab.optimize(tols, opts.pricing, max_pivots)? {
            return Ok(LpSolution::without_point(LpStatus::Unbounded, nv, m, tab.pivots));
        }
    }

    let mut col_value = vec![0.0; n];
    for i in 0..m {
        col_value[tab.basis[i]] = tab.rhs(i).to_f64();
    }
    let primal: Vec<f64> = (0..nv)
        .map(|j| col_value[pos[j]] - neg[j].map_or(0.0, |k| col_value[k]))
        .collect();
    let dual: Vec<f64> = (0..m)
        .map(|i| {
            (-tab.d[ident[i]].clone()).to_f64() * factor[i]
        })
        .collect();
    let value = if scale_rows {
        lp.objective_value(&primal)
    } else {
        tab.z.to_f64()
    };
    Ok(LpSolution { status: LpStatus::Optimal, value, primal, dual, pivots: tab.pivots })
}

#[cfg(test)]
mod tests {
    use super::super::*;

    /// A classic cycling example for the largest-coefficient rule.
    fn beale() -> LinearProgram {
        let mut lp = LinearProgram::new();
        let x: Vec<usize> = [0.75, -150.0, 0.02, -6.0]
            .iter()
            .enumerate()
            .map(|(k, &c)| lp.add_var(format!("x{k}"), VarBound::NonNegative, c))
            .collect();
        lp.add_constraint("r0", [(x[0], 0.25), (x[1], -60.0), (x[2], -0.04), (x[3], 9.0)], Relation::Le, 0.0);
        lp.add_constraint("r1", [(x[0], 0.5), (x[1], -90.0), (x[2], -0.02), (x[3], 3.0)], Relation::Le, 0.0);
        lp.add_constraint("r2", [(x[2], 1.0)], Relation::Le, 1.0);
        lp
    }

    #[test]
    fn beale_terminates_under_every_rule() {
        for pricing in [Pricing::Bland, Pricing::Hybrid] {
            for arithmetic in [Arithmetic::Float, Arithmetic::Exact] {
                let opts = SolverOptions { pricing, arithmetic, dualize: Dualize::Never, ..Default::default() };
                let s = solve_with(&beale(), &opts).unwrap();
                assert!((s.value - 0.05).abs() < 1e-12, "{pricing:?} {arithmetic:?}: {}", s.value);
            }
        }
    }

    #[test]
    fn exact_mode_reports_exact_value() {
        // max x + y st 3x + y <= 1, x + 3y <= 1: optimum 1/2 at (1/4, 1/4)
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", VarBound::NonNegative, 1.0);
        let y = lp.add_var("y", VarBound::NonNegative, 1.0);
        lp.add_constraint("a", [(x, 3.0), (y, 1.0)], Relation::Le, 1.0);
        lp.add_constraint("b", [(x, 1.0), (y, 3.0)], Relation::Le, 1.0);
        let s = solve_with(&lp, &SolverOptions { arithmetic: Arithmetic::Exact, ..Default::default() }).unwrap();
        assert_eq!(s.value, 0.5);
        assert_eq!(s.primal, vec![0.25, 0.25]);
        assert_eq!(s.dual, vec![0.25, 0.25]);
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", VarBound::NonNegative, 1.0);
        let y = lp.add_var("y", VarBound::NonNegative, 2.0);
        lp.add_constraint("e1", [(x, 1.0), (y, 1.0)], Relation::Eq, 1.0);
        lp.add_constraint("e2", [(x, 2.0), (y, 2.0)], Relation::Eq, 2.0);
        let s = solve(&lp).unwrap();
        assert!((s.value - 2.0).abs() < 1e-12);
        assert!(lp.dual_residual(&s.dual) < 1e-12);
        let b: f64 = lp.constraints.iter().zip(&s.dual).map(|(r, y)| r.rhs * y).sum();
        assert!((b - 2.0).abs() < 1e-12);
    }
}
