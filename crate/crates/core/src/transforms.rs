//! Stochastic transforms of a single player's mixed strategy and the
//! generator pairs `(Q, q)` whose gradient fields they realise.
//!
//! A transform `P` is column-stochastic: column `a` is the distribution the
//! action `a` is sent to. A generator pair acts on mixed strategies through
//! the field `x -> Q x + q`, equivalently through the matrix `G = Q + q 1'`
//! with `G[a', a] = Q[a', a] + q[a']`.

use ndarray::{Array1, Array2};
use serde::ser::SerializeStruct;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

const STOCHASTIC_TOL: f64 = 1e-9;

/// Largest action count for which the canonical family is enumerated.
pub const MAX_ENUMERATION_ACTIONS: usize = 20;

#[derive(Clone, Debug, PartialEq)]
pub struct TransformMatrix(Array2<f64>);

impl TransformMatrix {
    pub fn new(p: Array2<f64>) -> Result<Self> {
        let (r, c) = p.dim();
        if r != c || r == 0 {
            return Err(Error::Shape(format!("transform must be a non-empty square matrix, got {r}x{c}")));
        }
        for a in 0..c {
            let col = p.column(a);
            if let Some(v) = col.iter().find(|v| !v.is_finite() || **v < -STOCHASTIC_TOL) {
                return Err(Error::NotStochastic(format!("column {a} has entry {v}")));
            }
            let s: f64 = col.sum();
            if (s - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::NotStochastic(format!("column {a} sums to {s}")));
            }
        }
        Ok(TransformMatrix(p))
    }

    pub fn identity(m: usize) -> Self {
        TransformMatrix(Array2::eye(m))
    }

    /// Deterministic map sending action `a` to `image[a]`.
    pub fn from_map(image: &[usize]) -> Result<Self> {
        let m = image.len();
        let mut p = Array2::zeros((m, m));
        for (a, &b) in image.iter().enumerate() {
            if b >= m {
                return Err(Error::Invalid(format!("image {b} out of range for {m} actions")));
            }
            p[(b, a)] = 1.0;
        }
        Ok(TransformMatrix(p))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.0
    }

    /// Probability that action `from` is sent to `to`.
    pub fn get(&self, to: usize, from: usize) -> f64 {
        self.0[(to, from)]
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.0.dot(&Array1::from(x.to_vec())).to_vec()
    }

    /// Relabels actions: entry `(a', a)` moves to `(perm[a'], perm[a])`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let m = self.dim();
        let mut p = Array2::zeros((m, m));
        for i in 0..m {
            for j in 0..m {
                p[(perm[i], perm[j])] = self.0[(i, j)];
            }
        }
        TransformMatrix(p)
    }
}

fn rows(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn from_rows(rows: Vec<Vec<f64>>) -> Result<Array2<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::Shape("ragged matrix".into()));
    }
    Array2::from_shape_vec((n, m), rows.concat()).map_err(|e| Error::Shape(e.to_string()))
}

impl Serialize for TransformMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        rows(&self.0).serialize(s)
    }
}

impl<'de> Deserialize<'de> for TransformMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = Vec::<Vec<f64>>::deserialize(d)?;
        from_rows(r)
            .and_then(TransformMatrix::new)
            .map_err(serde::de::Error::custom)
    }
}

/// Generator of a quadratic potential `h(x) = x'Qx/2 + q'x` whose gradient
/// field is `Q x + q`.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorPair {
    pub quadratic: Array2<f64>,
    pub linear: Array1<f64>,
}

impl GeneratorPair {
    pub fn new(quadratic: Array2<f64>, linear: Array1<f64>) -> Result<Self> {
        let (r, c) = quadratic.dim();
        if r != c || r != linear.len() || r == 0 {
            return Err(Error::Shape(format!(
                "generator needs square Q matching q, got {r}x{c} and {}",
                linear.len()
            )));
        }
        Ok(GeneratorPair { quadratic, linear })
    }

    pub fn zero(m: usize) -> Self {
        GeneratorPair { quadratic: Array2::zeros((m, m)), linear: Array1::zeros(m) }
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    /// `G[a', a] = Q[a', a] + q[a']`.
    pub fn column_matrix(&self) -> Array2<f64> {
        let m = self.dim();
        let mut g = self.quadratic.clone();
        for a2 in 0..m {
            for a in 0..m {
                g[(a2, a)] += self.linear[a2];
            }
        }
        g
    }

    /// Field `Q x + q (1'x)` at a mixed strategy.
    pub fn field(&self, x: &[f64]) -> Vec<f64> {
        self.column_matrix().dot(&Array1::from(x.to_vec())).to_vec()
    }

    pub fn scaled(&self, c: f64) -> Self {
        GeneratorPair { quadratic: &self.quadratic * c, linear: &self.linear * c }
    }

    pub fn add(&self, other: &GeneratorPair) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::Shape("generators of different dimension".into()));
        }
        Ok(GeneratorPair {
            quadratic: &self.quadratic + &other.quadratic,
            linear: &self.linear + &other.linear,
        })
    }
}

impl Serialize for GeneratorPair {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("GeneratorPair", 2)?;
        st.serialize_field("Q", &rows(&self.quadratic))?;
        st.serialize_field("q", &self.linear.to_vec())?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for GeneratorPair {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            #[serde(rename = "Q")]
            quadratic: Vec<Vec<f64>>,
            q: Vec<f64>,
        }
        let r = Raw::deserialize(d)?;
        from_rows(r.quadratic)
            .and_then(|m| GeneratorPair::new(m, Array1::from(r.q)))
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GeneratorCondition {
    /// Each column of `Q + q 1'` sums to zero.
    Conservation,
    /// Off-diagonal entries of `Q + q 1'` are non-negative.
    Tangency,
    /// `Q` is symmetric.
    Symmetry,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorViolation {
    pub condition: GeneratorCondition,
    pub row: usize,
    pub col: usize,
    pub amount: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorReport {
    pub violations: Vec<GeneratorViolation>,
}

impl GeneratorReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, c: GeneratorCondition) -> bool {
        self.violations.iter().any(|v| v.condition == c)
    }
}

pub fn validate_generator(pair: &GeneratorPair, tol: f64) -> GeneratorReport {
    let mut violations = Vec::new();
    let m = pair.dim();
    let g = pair.column_matrix();
    for a in 0..m {
        let s = g.column(a).sum();
        if s.abs() > tol {
            violations.push(GeneratorViolation { condition: GeneratorCondition::Conservation, row: a, col: a, amount: s });
        }
        for a2 in 0..m {
            if a2 != a && g[(a2, a)] < -tol {
                violations.push(GeneratorViolation {
                    condition: GeneratorCondition::Tangency,
                    row: a2,
                    col: a,
                    amount: g[(a2, a)],
                });
            }
            if a2 < a {
                let d = pair.quadratic[(a2, a)] - pair.quadratic[(a, a2)];
                if d.abs() > tol {
                    violations.push(GeneratorViolation { condition: GeneratorCondition::Symmetry, row: a2, col: a, amount: d });
                }
            }
        }
    }
    GeneratorReport { violations }
}

/// Stochastic matrix `I + delta (Q + q 1')` realising the same field up to the
/// positive factor `delta`, chosen as large as possible.
pub fn to_stochastic(pair: &GeneratorPair) -> Result<(TransformMatrix, f64)> {
    let report = validate_generator(pair, 1e-9);
    if report.has(GeneratorCondition::Conservation) || report.has(GeneratorCondition::Tangency) {
        return Err(Error::Precondition(format!(
            "generator violates conservation or tangency: {:?}",
            report.violations.first()
        )));
    }
    let g = pair.column_matrix();
    let m = pair.dim();
    let outflow = (0..m)
        .map(|a| (0..m).filter(|&a2| a2 != a).map(|a2| g[(a2, a)]).sum::<f64>())
        .fold(0.0, f64::max);
    let delta = if outflow > 0.0 { 1.0 / outflow } else { 1.0 };
    let mut p = Array2::eye(m) + &g * delta;
    // clean up rounding so columns are exactly non-negative
    p.mapv_inplace(|v| if v < 0.0 && v > -1e-12 { 0.0 } else { v });
    Ok((TransformMatrix::new(p)?, delta))
}

/// Generator with `Q + q 1' = P - I`, normalised at the reference action 0.
pub fn generator_from_transform(p: &TransformMatrix) -> GeneratorPair {
    let m = p.dim();
    let linear = Array1::from_iter((0..m).map(|a2| p.get(a2, 0) - p.get(0, a2)));
    let mut quadratic = Array2::zeros((m, m));
    for a2 in 0..m {
        for a in 0..m {
            let eye = if a == a2 { 1.0 } else { 0.0 };
            quadratic[(a2, a)] = p.get(a2, a) - eye - linear[a2];
        }
    }
    GeneratorPair { quadratic, linear }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TripletCheck {
    pub holds: bool,
    /// First failing triplet `(a, b, c)` with the two cyclic sums
    /// `P(a,b)+P(b,c)+P(c,a)` and `P(a,c)+P(c,b)+P(b,a)`.
    pub witness: Option<(usize, usize, usize, f64, f64)>,
}

/// Tests whether `P - I` admits a symmetric `Q`, i.e. whether the transform is
/// the gradient field of a quadratic potential on the simplex.
pub fn is_semicoarse_transform(p: &TransformMatrix) -> TripletCheck {
    let m = p.dim();
    for a in 0..m {
        for b in a + 1..m {
            for c in b + 1..m {
                let fwd = p.get(a, b) + p.get(b, c) + p.get(c, a);
                let back = p.get(a, c) + p.get(c, b) + p.get(b, a);
                if (fwd - back).abs() > 1e-9 {
                    return TripletCheck { holds: false, witness: Some((a, b, c, fwd, back)) };
                }
            }
        }
    }
    TripletCheck { holds: true, witness: None }
}

fn check_members(m: usize, set: &[usize], what: &str) -> Result<()> {
    let mut seen = vec![false; m];
    for &a in set {
        if a >= m {
            return Err(Error::Invalid(format!("{what}: action {a} out of range for {m} actions")));
        }
        if seen[a] {
            return Err(Error::Invalid(format!("{what}: action {a} repeated")));
        }
        seen[a] = true;
    }
    Ok(())
}

fn check_weights(w: &[f64]) -> Result<()> {
    if w.is_empty() {
        return Err(Error::Empty("weight vector".into()));
    }
    if let Some(v) = w.iter().find(|v| !v.is_finite() || **v <= 0.0) {
        return Err(Error::Invalid(format!("weights must be positive, got {v}")));
    }
    Ok(())
}

/// Sends every action in `subset` to the uniform distribution on the actions
/// outside it.
pub fn subset_transform(m: usize, subset: &[usize]) -> Result<TransformMatrix> {
    weighted_subset_transform(subset, &vec![1.0; m])
}

/// Sends every action in `subset` to the distribution proportional to `w` on
/// the complement.
pub fn weighted_subset_transform(subset: &[usize], w: &[f64]) -> Result<TransformMatrix> {
    check_weights(w)?;
    let m = w.len();
    check_members(m, subset, "subset")?;
    if subset.len() == m {
        return Err(Error::Invalid("subset must leave at least one action outside".into()));
    }
    let mut inside = vec![false; m];
    subset.iter().for_each(|&a| inside[a] = true);
    let outside: Vec<usize> = (0..m).filter(|&a| !inside[a]).collect();
    let mass: f64 = outside.iter().map(|&a| w[a]).sum();
    // equal weights give exactly the uniform split
    let flat = outside.iter().all(|&b| w[b] == w[outside[0]]);
    let mut p = Array2::zeros((m, m));
    for a in 0..m {
        if inside[a] {
            for &b in &outside {
                p[(b, a)] = if flat { 1.0 / outside.len() as f64 } else { w[b] / mass };
            }
        } else {
            p[(a, a)] = 1.0;
        }
    }
    Ok(TransformMatrix(p))
}

/// Sends each action on `cycle` half to each of its two cyclic neighbours (a
/// two-cycle is a swap).
pub fn cycle_transform(m: usize, cycle: &[usize]) -> Result<TransformMatrix> {
    weighted_cycle_transform(cycle, &vec![1.0; m])
}

/// Weighted cycle: with `d` the smallest weight on the cycle, action `a`
/// keeps mass `1 - d/w(a)` and sends `d/(2 w(a))` to each neighbour.
pub fn weighted_cycle_transform(cycle: &[usize], w: &[f64]) -> Result<TransformMatrix> {
    check_weights(w)?;
    let m = w.len();
    check_members(m, cycle, "cycle")?;
    let k = cycle.len();
    if k < 2 {
        return Err(Error::Invalid("a cycle needs at least two actions".into()));
    }
    let d = cycle.iter().map(|&a| w[a]).fold(f64::INFINITY, f64::min);
    let mut p = Array2::eye(m);
    for (l, &a) in cycle.iter().enumerate() {
        let next = cycle[(l + 1) % k];
        let prev = cycle[(l + k - 1) % k];
        let out = d / w[a];
        p[(a, a)] = 1.0 - out;
        p[(next, a)] += out / 2.0;
        p[(prev, a)] += out / 2.0;
    }
    Ok(TransformMatrix(p))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TransformKind {
    Subset(Vec<usize>),
    Cycle(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CanonicalTransform {
    pub kind: TransformKind,
    pub matrix: TransformMatrix,
}

impl CanonicalTransform {
    pub fn name(&self) -> String {
        let join = |v: &[usize]| v.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(",");
        match &self.kind {
            TransformKind::Subset(s) => format!("subset{{{}}}", join(s)),
            TransformKind::Cycle(c) => format!("cycle({})", join(c)),
        }
    }
}

/// Number of transforms produced by [`enumerate_canonical`] with no cycle
/// length cap: `2^m - 2` subsets and `C(m,k) (k-1)!/2` cycles of each length
/// `k >= 3`, plus the `C(m,2)` swaps.
pub fn canonical_count(m: usize) -> u128 {
    if m < 2 {
        return 0;
    }
    let mut total: u128 = (1u128 << m) - 2;
    for k in 2..=m {
        total += cycle_count(m, k);
    }
    total
}

fn cycle_count(m: usize, k: usize) -> u128 {
    let mut binom: u128 = 1;
    for j in 0..k {
        binom = binom * (m - j) as u128 / (j + 1) as u128;
    }
    if k == 2 {
        return binom;
    }
    let fact: u128 = (1..k as u128).product();
    binom * fact / 2
}

/// The canonical semicoarse transforms for `m` actions: every non-trivial
/// subset transform followed by every cycle (each cycle listed once, starting
/// at its smallest action and oriented towards the smaller neighbour).
pub fn enumerate_canonical(m: usize, max_cycle_len: Option<usize>) -> Result<Vec<CanonicalTransform>> {
    enumerate_weighted_canonical(&vec![1.0; m], max_cycle_len)
}

pub fn enumerate_weighted_canonical(w: &[f64], max_cycle_len: Option<usize>) -> Result<Vec<CanonicalTransform>> {
    check_weights(w)?;
    let m = w.len();
    if m > MAX_ENUMERATION_ACTIONS {
        return Err(Error::TooLarge(format!(
            "{m} actions: 2^{m} subsets exceeds the limit of 2^{MAX_ENUMERATION_ACTIONS}"
        )));
    }
    let mut out = Vec::new();
    for mask in 1u32..(1u32 << m) - 1 {
        let subset: Vec<usize> = (0..m).filter(|&a| mask & (1 << a) != 0).collect();
        let matrix = weighted_subset_transform(&subset, w)?;
        out.push(CanonicalTransform { kind: TransformKind::Subset(subset), matrix });
    }
    let max_len = max_cycle_len.unwrap_or(m).min(m);
    for cycle in canonical_cycles(m, max_len) {
        let matrix = weighted_cycle_transform(&cycle, w)?;
        out.push(CanonicalTransform { kind: TransformKind::Cycle(cycle), matrix });
    }
    Ok(out)
}

/// Cycles of length `2..=max_len` in canonical form.
pub fn canonical_cycles(m: usize, max_len: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for k in 2..=max_len {
        for set in combinations(m, k) {
            let first = set[0];
            let mut rest = set[1..].to_vec();
            permutations(&mut rest, 0, &mut |p| {
                if p.len() < 2 || p[0] < p[p.len() - 1] {
                    let mut c = vec![first];
                    c.extend_from_slice(p);
                    out.push(c);
                }
            });
        }
    }
    out
}

fn combinations(m: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, m: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for a in start..m {
            cur.push(a);
            go(a + 1, m, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, m, k, &mut Vec::new(), &mut out);
    out
}

fn permutations(v: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == v.len() {
        f(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permutations(v, k + 1, f);
        v.swap(k, i);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn close(a: &Array2<f64>, b: &Array2<f64>) -> bool {
        a.iter().zip(b.iter()).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn subset_example() {
        let p = subset_transform(3, &[0]).unwrap();
        assert_eq!(p.matrix().column(0).to_vec(), vec![0.0, 0.5, 0.5]);
        assert_eq!(p.matrix().column(1).to_vec(), vec![0.0, 1.0, 0.0]);
        assert!(subset_transform(3, &[0, 1, 2]).is_err());
        assert_eq!(subset_transform(3, &[]).unwrap(), TransformMatrix::identity(3));
    }

    #[test]
    fn swap_generator() {
        let p = cycle_transform(2, &[0, 1]).unwrap();
        assert_eq!(p.matrix(), &array![[0.0, 1.0], [1.0, 0.0]]);
        let g = generator_from_transform(&p);
        assert_eq!(g.linear.to_vec(), vec![0.0, 0.0]);
        assert_eq!(g.quadratic, array![[-1.0, 1.0], [1.0, -1.0]]);
        assert!(validate_generator(&g, 1e-12).passed());
    }

    #[test]
    fn weighted_cycle_example() {
        let p = weighted_cycle_transform(&[0, 1], &[2.0, 4.0]).unwrap();
        assert_eq!(p.matrix().column(0).to_vec(), vec![0.0, 1.0]);
        assert_eq!(p.matrix().column(1).to_vec(), vec![0.5, 0.5]);
    }

    #[test]
    fn stochastic_round_trip_on_subset() {
        let p = subset_transform(3, &[0]).unwrap();
        let (back, delta) = to_stochastic(&generator_from_transform(&p)).unwrap();
        assert_eq!(delta, 1.0);
        assert!(close(back.matrix(), p.matrix()));
    }

    #[test]
    fn zero_generator_gives_identity() {
        let (p, delta) = to_stochastic(&GeneratorPair::zero(4)).unwrap();
        assert_eq!(delta, 1.0);
        assert_eq!(p, TransformMatrix::identity(4));
    }

    #[test]
    fn asymmetric_generator_is_flagged() {
        let g = GeneratorPair::new(array![[-1.0, 2.0], [1.0, -2.0]], array![0.0, 0.0]).unwrap();
        let r = validate_generator(&g, 1e-12);
        assert!(r.has(GeneratorCondition::Symmetry));
        assert!(!r.has(GeneratorCondition::Conservation));
    }

    #[test]
    fn three_cycle_permutation_fails_triplet() {
        // 0 -> 1 -> 2 -> 0
        let p = TransformMatrix::from_map(&[1, 2, 0]).unwrap();
        let c = is_semicoarse_transform(&p);
        assert!(!c.holds);
        assert_eq!(c.witness, Some((0, 1, 2, 0.0, 3.0)));
        assert!(to_stochastic(&generator_from_transform(&p)).is_ok());
        assert!(validate_generator(&generator_from_transform(&p), 1e-12).has(GeneratorCondition::Symmetry));
    }

    #[test]
    fn non_stochastic_rejected() {
        assert!(matches!(
            TransformMatrix::new(array![[0.5, 0.0], [0.4, 1.0]]),
            Err(Error::NotStochastic(_))
        ));
    }

    #[test]
    fn counts() {
        assert_eq!(canonical_count(3), 10);
        assert_eq!(canonical_count(4), 14 + 6 + 4 + 3);
        for m in 2..=6 {
            assert_eq!(enumerate_canonical(m, None).unwrap().len() as u128, canonical_count(m));
        }
        assert!(matches!(enumerate_canonical(21, Some(2)), Err(Error::TooLarge(_))));
    }

    #[test]
    fn canonical_cycles_are_distinct_and_normalised() {
        let cs = canonical_cycles(5, 5);
        for c in &cs {
            assert_eq!(c[0], *c.iter().min().unwrap());
            if c.len() > 2 {
                assert!(c[1] < c[c.len() - 1]);
            }
        }
        let mut mats: Vec<String> = cs
            .iter()
            .map(|c| format!("{:?}", cycle_transform(5, c).unwrap().matrix()))
            .collect();
        mats.sort();
        mats.dedup();
        assert_eq!(mats.len(), cs.len());
    }

    #[test]
    fn canonical_transforms_satisfy_triplet_condition() {
        for t in enumerate_canonical(5, None).unwrap() {
            assert!(is_semicoarse_transform(&t.matrix).holds, "{}", t.name());
            assert!(validate_generator(&generator_from_transform(&t.matrix), 1e-12).passed());
        }
        for t in enumerate_weighted_canonical(&[1.0, 2.0, 3.0, 5.0], None).unwrap() {
            let p = &t.matrix;
            assert!(TransformMatrix::new(p.matrix().clone()).is_ok());
        }
    }

    #[test]
    fn json_forms() {
        let p = cycle_transform(3, &[0, 1, 2]).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, "[[0.0,0.5,0.5],[0.5,0.0,0.5],[0.5,0.5,0.0]]");
        let g = generator_from_transform(&p);
        let back: GeneratorPair = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
        assert_eq!(back, g);
    }
}
