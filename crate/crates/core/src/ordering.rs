//! Exact layer ordering: choose the stacking that rewards covering each
//! part's extra region and penalizes hiding visible pixels.
//!
//! Relation convention: `x[i][j]` is true when part `i` is drawn above `j`.
//! Permutations list part indices from bottom (position 0) to top.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::raster::{extra_region, fill_region, BinaryMask, RasterError};
use crate::svg::CompoundPath;

/// Largest part count the solver accepts; sets are kept as `u64` bitmasks.
pub const MAX_PARTS: usize = 64;
/// Above this part count the search still runs but may take factorial time.
pub const EXACT_PART_LIMIT: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OrderingError {
    #[error("no parts to order")]
    EmptyPartSet,
    #[error("{0} parts exceed the supported maximum of {MAX_PARTS}")]
    TooManyParts(usize),
    #[error("per-part inputs disagree in length: {0}")]
    LengthMismatch(String),
    #[error("relation is not a strict total order: {0}")]
    InvalidRelation(String),
    #[error("not a permutation of 0..{0}")]
    NotAPermutation(usize),
    #[error("invalid weight: {0}")]
    InvalidWeight(String),
    #[error(transparent)]
    Raster(#[from] RasterError),
}

/// Nonnegative rational weight `num / den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Weight {
    num: u32,
    den: u32,
}

impl Weight {
    pub const ONE: Weight = Weight { num: 1, den: 1 };

    pub fn new(num: u32, den: u32) -> Result<Self, OrderingError> {
        if den == 0 {
            return Err(OrderingError::InvalidWeight(format!("{num}/0")));
        }
        let g = gcd(num, den);
        Ok(Weight { num: num / g, den: den / g })
    }

    pub fn num(self) -> u32 {
        self.num
    }

    pub fn den(self) -> u32 {
        self.den
    }

    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl Default for Weight {
    fn default() -> Self {
        Weight::ONE
    }
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a.max(1)
    } else {
        gcd(b, a % b)
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// Accepts `3`, `0.25` and `3/2`.
impl FromStr for Weight {
    type Err = OrderingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || OrderingError::InvalidWeight(s.to_string());
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            return Weight::new(n.trim().parse().map_err(|_| bad())?, d.trim().parse().map_err(|_| bad())?);
        }
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if frac.len() > 6 || (int.is_empty() && frac.is_empty()) || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let den = 10u32.pow(frac.len() as u32);
        let int: u32 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
        let frac: u32 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
        let num = int.checked_mul(den).and_then(|v| v.checked_add(frac)).ok_or_else(bad)?;
        Weight::new(num, den)
    }
}

impl Serialize for Weight {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Where fill regions come from.
#[derive(Debug, Clone, Copy)]
pub enum FillSource<'a> {
    /// Region enclosed by the outermost contours of each traced amodal path,
    /// clipped to the amodal mask with holes filled so fitting error cannot
    /// reach neighbouring parts' pixels.
    Paths(&'a [CompoundPath]),
    /// The raw amodal masks with holes filled.
    RawMasks,
}

#[derive(Debug, Clone)]
pub struct OrderingProblem {
    pub extra: Vec<BinaryMask>,
    pub visible: Vec<BinaryMask>,
    pub fill: Vec<BinaryMask>,
    pub lambda: Weight,
    /// `c[i][j]`: `E_i` meets `F_j`. Diagonal is false.
    pub c: Vec<Vec<bool>>,
    /// `d[i][j]`: `V_i` meets `F_j`. Diagonal is false.
    pub d: Vec<Vec<bool>>,
}

impl OrderingProblem {
    /// Problem from per-part region masks; relations follow from them.
    pub fn from_regions(
        extra: Vec<BinaryMask>,
        visible: Vec<BinaryMask>,
        fill: Vec<BinaryMask>,
        lambda: Weight,
    ) -> Result<Self, OrderingError> {
        let k = extra.len();
        if k == 0 {
            return Err(OrderingError::EmptyPartSet);
        }
        if k > MAX_PARTS {
            return Err(OrderingError::TooManyParts(k));
        }
        if visible.len() != k || fill.len() != k {
            return Err(OrderingError::LengthMismatch(format!(
                "extra {k}, visible {}, fill {}",
                visible.len(),
                fill.len()
            )));
        }
        for m in visible.iter().chain(&fill) {
            extra[0].check_dims(m)?;
        }
        for m in &extra {
            extra[0].check_dims(m)?;
        }
        let relation = |a: &[BinaryMask]| -> Vec<Vec<bool>> {
            (0..k).map(|i| (0..k).map(|j| i != j && a[i].intersects(&fill[j])).collect()).collect()
        };
        let c = relation(&extra);
        let d = relation(&visible);
        Ok(OrderingProblem { extra, visible, fill, lambda, c, d })
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    pub fn has_extra(&self, i: usize) -> bool {
        !self.extra[i].is_empty()
    }

    fn scale(&self, y: usize, z: usize) -> i64 {
        self.lambda.den as i64 * y as i64 - self.lambda.num as i64 * z as i64
    }
}

/// Build the ordering problem: `E_k = A_k \ I`, `V_k` as given, and `F_k`
/// from `fill_source`.
pub fn build_problem(
    amodal: &[BinaryMask],
    visible: &[BinaryMask],
    silhouette: &BinaryMask,
    fill_source: FillSource<'_>,
    lambda: Weight,
) -> Result<OrderingProblem, OrderingError> {
    if amodal.is_empty() {
        return Err(OrderingError::EmptyPartSet);
    }
    if visible.len() != amodal.len() {
        return Err(OrderingError::LengthMismatch(format!("amodal {}, visible {}", amodal.len(), visible.len())));
    }
    let extra = amodal.iter().map(|a| extra_region(a, silhouette)).collect::<Result<Vec<_>, _>>()?;
    let fill = match fill_source {
        FillSource::RawMasks => amodal.iter().map(BinaryMask::fill_holes).collect(),
        FillSource::Paths(paths) => {
            if paths.len() != amodal.len() {
                return Err(OrderingError::LengthMismatch(format!("amodal {}, paths {}", amodal.len(), paths.len())));
            }
            paths
                .iter()
                .zip(amodal)
                .map(|(p, a)| fill_region(p, silhouette.width(), silhouette.height()).and(&a.fill_holes()))
                .collect::<Result<Vec<_>, _>>()?
        }
    };
    OrderingProblem::from_regions(extra, visible.to_vec(), fill, lambda)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderingSolution {
    /// Part index at each stack position, bottom first.
    pub permutation: Vec<usize>,
    /// `x[i][j]`: part `i` is above part `j`.
    pub x: Vec<Vec<bool>>,
    pub y: Vec<bool>,
    pub z: Vec<bool>,
    /// `den·Σy − num·Σz` for `λ = num/den`; equals `Σy − λΣz` when `den = 1`.
    pub objective: i64,
    /// `Σy − λΣz` as a float.
    pub objective_value: f64,
}

impl OrderingSolution {
    pub fn from_permutation(problem: &OrderingProblem, order: &[usize]) -> Result<Self, OrderingError> {
        let x = relation_from_permutation(order, problem.len())?;
        let (y, z) = coverage_flags(&x, problem)?;
        let sy = y.iter().filter(|&&v| v).count();
        let sz = z.iter().filter(|&&v| v).count();
        Ok(OrderingSolution {
            permutation: order.to_vec(),
            x,
            y,
            z,
            objective: problem.scale(sy, sz),
            objective_value: sy as f64 - problem.lambda.value() * sz as f64,
        })
    }
}

/// The above-relation of a bottom-to-top order.
pub fn relation_from_permutation(order: &[usize], k: usize) -> Result<Vec<Vec<bool>>, OrderingError> {
    let mut pos = vec![usize::MAX; k];
    if order.len() != k {
        return Err(OrderingError::NotAPermutation(k));
    }
    for (p, &i) in order.iter().enumerate() {
        if i >= k || pos[i] != usize::MAX {
            return Err(OrderingError::NotAPermutation(k));
        }
        pos[i] = p;
    }
    Ok((0..k).map(|i| (0..k).map(|j| pos[i] > pos[j]).collect()).collect())
}

/// Per-part flags: `y_i` when `E_i` is nonempty and some part above `i`
/// fills over it, `z_i` when some part above `i` fills over `V_i`.
pub fn coverage_flags(x: &[Vec<bool>], problem: &OrderingProblem) -> Result<(Vec<bool>, Vec<bool>), OrderingError> {
    let k = problem.len();
    if x.len() != k || x.iter().any(|r| r.len() != k) {
        return Err(OrderingError::InvalidRelation(format!("expected {k}x{k} matrix")));
    }
    for i in 0..k {
        if x[i][i] {
            return Err(OrderingError::InvalidRelation(format!("x[{i}][{i}] set")));
        }
        for j in 0..k {
            if i != j && x[i][j] == x[j][i] {
                return Err(OrderingError::InvalidRelation(format!("antisymmetry fails for ({i}, {j})")));
            }
            for l in 0..k {
                if i != j && j != l && l != i && x[i][j] && x[j][l] && x[l][i] {
                    return Err(OrderingError::InvalidRelation(format!("cycle {i} > {j} > {l} > {i}")));
                }
            }
        }
    }
    let y = (0..k).map(|i| problem.has_extra(i) && (0..k).any(|j| problem.c[i][j] && x[j][i])).collect();
    let z = (0..k).map(|i| (0..k).any(|j| problem.d[i][j] && x[j][i])).collect();
    Ok((y, z))
}

/// Objective of a given bottom-to-top order, scaled as in
/// [`OrderingSolution::objective`].
pub fn enumerate_objective(problem: &OrderingProblem, order: &[usize]) -> Result<i64, OrderingError> {
    Ok(OrderingSolution::from_permutation(problem, order)?.objective)
}

struct Search<'a> {
    problem: &'a OrderingProblem,
    den: i64,
    num: i64,
    c_rows: Vec<u64>,
    d_rows: Vec<u64>,
    stack: Vec<usize>,
    best: Option<(i64, Vec<usize>)>,
}

impl Search<'_> {
    /// Parts in `remaining` whose extra region some other remaining part can
    /// still cover.
    fn coverable(&self, remaining: u64) -> i64 {
        let mut n = 0;
        let mut bits = remaining;
        while bits != 0 {
            let r = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            if self.problem.has_extra(r) && self.c_rows[r] & remaining != 0 {
                n += 1;
            }
        }
        n
    }

    fn descend(&mut self, remaining: u64, score: i64) {
        if remaining == 0 {
            if self.best.as_ref().is_none_or(|(b, _)| score > *b) {
                self.best = Some((score, self.stack.clone()));
            }
            return;
        }
        if let Some((b, _)) = &self.best {
            if score + self.den * self.coverable(remaining) <= *b {
                return;
            }
        }
        let mut bits = remaining;
        while bits != 0 {
            let p = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let above = remaining & !(1u64 << p);
            let y = self.problem.has_extra(p) && self.c_rows[p] & above != 0;
            let z = self.d_rows[p] & above != 0;
            let gain = if y { self.den } else { 0 } - if z { self.num } else { 0 };
            self.stack.push(p);
            self.descend(above, score + gain);
            self.stack.pop();
        }
    }
}

/// Exact optimum by depth-first search over bottom-to-top placements with
/// branch-and-bound pruning. Among optima the lexicographically smallest
/// permutation is returned.
pub fn solve(problem: &OrderingProblem) -> OrderingSolution {
    let k = problem.len();
    if k > EXACT_PART_LIMIT {
        log::warn!("ordering {k} parts; search time grows factorially beyond {EXACT_PART_LIMIT}");
    }
    let row = |m: &Vec<Vec<bool>>, i: usize| (0..k).filter(|&j| m[i][j]).fold(0u64, |acc, j| acc | 1 << j);
    let mut search = Search {
        problem,
        den: problem.lambda.den as i64,
        num: problem.lambda.num as i64,
        c_rows: (0..k).map(|i| row(&problem.c, i)).collect(),
        d_rows: (0..k).map(|i| row(&problem.d, i)).collect(),
        stack: Vec::with_capacity(k),
        best: None,
    };
    let all = if k == 64 { u64::MAX } else { (1u64 << k) - 1 };
    search.descend(all, 0);
    let (_, order) = search.best.expect("at least one permutation exists");
    OrderingSolution::from_permutation(problem, &order).expect("search emits permutations")
}

/// Debug dump of a solved problem.
#[derive(Debug, Serialize)]
pub struct OrderingDump<'a> {
    pub parts: usize,
    pub lambda: Weight,
    pub extra_nonempty: Vec<bool>,
    pub c: &'a [Vec<bool>],
    pub d: &'a [Vec<bool>],
    pub permutation: &'a [usize],
    pub y: &'a [bool],
    pub z: &'a [bool],
    pub objective: i64,
    pub objective_value: f64,
}

pub fn dump_json(problem: &OrderingProblem, solution: &OrderingSolution) -> String {
    let dump = OrderingDump {
        parts: problem.len(),
        lambda: problem.lambda,
        extra_nonempty: (0..problem.len()).map(|i| problem.has_extra(i)).collect(),
        c: &problem.c,
        d: &problem.d,
        permutation: &solution.permutation,
        y: &solution.y,
        z: &solution.z,
        objective: solution.objective,
        objective_value: solution.objective_value,
    };
    serde_json::to_string_pretty(&dump).expect("dump serializes")
}

/// Painter's-algorithm re-render: bottom to top, blank each part's fill
/// region then draw its amodal mask.
pub fn render_stack(amodal: &[BinaryMask], fill: &[BinaryMask], order: &[usize]) -> Result<BinaryMask, RasterError> {
    let (w, h) = amodal[0].dims();
    let mut canvas = BinaryMask::new(w, h);
    for &k in order {
        canvas = canvas.and_not(&fill[k])?.or(&amodal[k])?;
    }
    Ok(canvas)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn all_permutations(k: usize) -> Vec<Vec<usize>> {
        if k == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in all_permutations(k - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, k - 1);
                out.push(q);
            }
        }
        out.sort();
        out
    }

    fn disk(w: usize, cx: f64, cy: f64, r: f64) -> BinaryMask {
        BinaryMask::from_fn(w, w, |x, y| (x as f64 + 0.5 - cx).hypot(y as f64 + 0.5 - cy) < r)
    }

    fn frame(w: usize, x0: usize, y0: usize, x1: usize, y1: usize, t: usize) -> BinaryMask {
        BinaryMask::from_fn(w, w, |x, y| {
            (x0..x1).contains(&x) && (y0..y1).contains(&y) && !((x0 + t..x1 - t).contains(&x) && (y0 + t..y1 - t).contains(&y))
        })
    }

    /// Circle drawn first, outline square on top: the square's interior
    /// blanks part of the circle.
    fn circle_behind_square() -> (Vec<BinaryMask>, Vec<BinaryMask>, BinaryMask) {
        let circle = disk(64, 22.0, 22.0, 14.0);
        let square = frame(64, 20, 20, 56, 56, 3);
        let fills = [circle.fill_holes(), square.fill_holes()];
        let sil = render_stack(&[circle.clone(), square.clone()], &fills, &[0, 1]).unwrap();
        let vis_circle = circle.and_not(&fills[1]).unwrap();
        (vec![circle, square.clone()], vec![vis_circle, square], sil)
    }

    #[test]
    fn disjoint_parts_have_no_relations() {
        let a = disk(32, 8.0, 8.0, 5.0);
        let b = disk(32, 24.0, 24.0, 5.0);
        let sil = a.or(&b).unwrap();
        let p = build_problem(&[a.clone(), b.clone()], &[a, b], &sil, FillSource::RawMasks, Weight::ONE).unwrap();
        assert!(p.c.iter().flatten().chain(p.d.iter().flatten()).all(|&v| !v));
        let s = solve(&p);
        assert_eq!(s.permutation, vec![0, 1]);
        assert_eq!(s.objective, 0);
    }

    #[test]
    fn circle_behind_square_relations() {
        let (amodal, visible, sil) = circle_behind_square();
        let p = build_problem(&amodal, &visible, &sil, FillSource::RawMasks, Weight::default()).unwrap();
        assert!(p.c[0][1]);
        assert!(!p.d[0][1]);
        assert!(!p.has_extra(1));
        assert_eq!(p.lambda, Weight::ONE);
        let s = solve(&p);
        assert_eq!(s.permutation, vec![0, 1]);
        assert_eq!(s.objective, 1);
    }

    #[test]
    fn two_part_asymmetry_is_one_plus_lambda() {
        let (amodal, visible, sil) = circle_behind_square();
        for lambda in [Weight::ONE, Weight::new(1, 2).unwrap(), Weight::new(3, 1).unwrap()] {
            let p = build_problem(&amodal, &visible, &sil, FillSource::RawMasks, lambda).unwrap();
            let fwd = OrderingSolution::from_permutation(&p, &[0, 1]).unwrap();
            let rev = OrderingSolution::from_permutation(&p, &[1, 0]).unwrap();
            assert!((fwd.objective_value - rev.objective_value - (1.0 + lambda.value())).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_inputs_rejected() {
        let sil = BinaryMask::new(4, 4);
        assert!(matches!(build_problem(&[], &[], &sil, FillSource::RawMasks, Weight::ONE), Err(OrderingError::EmptyPartSet)));
    }

    #[test]
    fn single_part() {
        let a = disk(16, 8.0, 8.0, 4.0);
        let p = build_problem(&[a.clone()], &[a.clone()], &a, FillSource::RawMasks, Weight::ONE).unwrap();
        let (y, z) = coverage_flags(&[vec![false]], &p).unwrap();
        assert_eq!((y, z), (vec![false], vec![false]));
        let s = solve(&p);
        assert_eq!((s.permutation, s.objective), (vec![0], 0));
    }

    #[test]
    fn invalid_relations_and_orders() {
        let (amodal, visible, sil) = circle_behind_square();
        let mut three = amodal.clone();
        three.push(disk(64, 50.0, 10.0, 4.0));
        let mut vis3 = visible.clone();
        vis3.push(three[2].clone());
        let sil3 = sil.or(&three[2]).unwrap();
        let p = build_problem(&three, &vis3, &sil3, FillSource::RawMasks, Weight::ONE).unwrap();
        let both = vec![vec![false, true, false], vec![true, false, false], vec![true, true, false]];
        assert!(matches!(coverage_flags(&both, &p), Err(OrderingError::InvalidRelation(_))));
        let cycle = vec![vec![false, true, false], vec![false, false, true], vec![true, false, false]];
        assert!(matches!(coverage_flags(&cycle, &p), Err(OrderingError::InvalidRelation(_))));
        assert_eq!(enumerate_objective(&p, &[0, 0, 1]), Err(OrderingError::NotAPermutation(3)));
        assert_eq!(enumerate_objective(&p, &[0, 1]), Err(OrderingError::NotAPermutation(3)));
        assert_eq!(enumerate_objective(&p, &[0, 1, 3]), Err(OrderingError::NotAPermutation(3)));
    }

    #[test]
    fn weight_parsing() {
        assert_eq!("1".parse::<Weight>().unwrap(), Weight::ONE);
        assert_eq!("0.5".parse::<Weight>().unwrap(), Weight::new(1, 2).unwrap());
        assert_eq!("6/4".parse::<Weight>().unwrap(), Weight::new(3, 2).unwrap());
        assert_eq!(Weight::new(6, 4).unwrap().to_string(), "3/2");
        for bad in ["", "-1", "1/0", "abc", "1.2.3", "0.1234567"] {
            assert!(bad.parse::<Weight>().is_err(), "{bad}");
        }
    }

    /// Three stacked outline frames, bottom to top 2, 0, 1.
    fn three_chain() -> (Vec<BinaryMask>, Vec<BinaryMask>, BinaryMask, Vec<usize>) {
        let parts = vec![frame(48, 14, 14, 34, 34, 3), frame(48, 22, 22, 44, 44, 3), frame(48, 4, 4, 24, 24, 3)];
        let order = vec![2, 0, 1];
        let fills: Vec<_> = parts.iter().map(BinaryMask::fill_holes).collect();
        let sil = render_stack(&parts, &fills, &order).unwrap();
        let visible = (0..3)
            .map(|k| {
                let pos = order.iter().position(|&o| o == k).unwrap();
                order[pos + 1..].iter().fold(parts[k].clone(), |acc, &j| acc.and_not(&fills[j]).unwrap())
            })
            .collect();
        (parts, visible, sil, order)
    }

    #[test]
    fn flags_match_pixel_simulation() {
        let (parts, visible, sil, truth) = three_chain();
        let p = build_problem(&parts, &visible, &sil, FillSource::RawMasks, Weight::ONE).unwrap();
        for order in all_permutations(3) {
            let x = relation_from_permutation(&order, 3).unwrap();
            let (y, z) = coverage_flags(&x, &p).unwrap();
            for k in 0..3 {
                let pos = order.iter().position(|&o| o == k).unwrap();
                let blanked_above = order[pos + 1..].iter().fold(BinaryMask::new(48, 48), |acc, &j| acc.or(&p.fill[j]).unwrap());
                assert_eq!(y[k], p.extra[k].intersects(&blanked_above), "y {order:?} {k}");
                assert_eq!(z[k], visible[k].intersects(&blanked_above), "z {order:?} {k}");
            }
        }
        let s = solve(&p);
        assert_eq!(s.permutation, truth);
        assert_eq!(s.z, vec![false; 3]);
        assert_eq!(render_stack(&parts, &p.fill, &s.permutation).unwrap(), sil);
    }

    fn random_problem(bits: &[bool], k: usize, lambda: Weight) -> OrderingProblem {
        let cell = 9;
        let mask = |off: usize| BinaryMask::from_bits(3, 3, bits[off..off + cell].to_vec()).unwrap();
        let mut extra = Vec::new();
        let mut visible = Vec::new();
        let mut fill = Vec::new();
        for i in 0..k {
            let e = mask(i * 27);
            let v = mask(i * 27 + 9).and_not(&e).unwrap();
            extra.push(e);
            visible.push(v.clone());
            fill.push(mask(i * 27 + 18).or(&v).unwrap());
        }
        OrderingProblem::from_regions(extra, visible, fill, lambda).unwrap()
    }

    fn brute_force(p: &OrderingProblem) -> (i64, Vec<usize>) {
        let mut best: Option<(i64, Vec<usize>)> = None;
        for order in all_permutations(p.len()) {
            let obj = enumerate_objective(p, &order).unwrap();
            if best.as_ref().is_none_or(|(b, _)| obj > *b) {
                best = Some((obj, order));
            }
        }
        best.unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(96))]
        #[test]
        fn solve_matches_exhaustive(
            bits in proptest::collection::vec(proptest::bool::weighted(0.3), 7 * 27),
            k in 1usize..=6,
            lnum in 0u32..4, lden in 1u32..3,
        ) {
            let p = random_problem(&bits, k, Weight::new(lnum, lden).unwrap());
            let s = solve(&p);
            let (obj, order) = brute_force(&p);
            prop_assert_eq!(s.objective, obj);
            prop_assert_eq!(&s.permutation, &order);
            for i in 0..k {
                for j in 0..k {
                    if i != j {
                        prop_assert!(s.x[i][j] ^ s.x[j][i]);
                    }
                    for l in 0..k {
                        if i != j && j != l && l != i {
                            prop_assert!((s.x[i][j] as u8 + s.x[j][l] as u8 + s.x[l][i] as u8) <= 2);
                        }
                    }
                }
            }
            let sy = s.y.iter().filter(|&&v| v).count() as f64;
            let sz = s.z.iter().filter(|&&v| v).count() as f64;
            prop_assert!((s.objective_value - (sy - p.lambda.value() * sz)).abs() < 1e-12);
        }

        #[test]
        fn optimum_invariant_under_relabeling(
            bits in proptest::collection::vec(proptest::bool::weighted(0.3), 7 * 27),
            k in 2usize..=6,
            shift in 1usize..6,
        ) {
            let p = random_problem(&bits, k, Weight::ONE);
            let relabel: Vec<usize> = (0..k).map(|i| (i + shift) % k).collect();
            let q = OrderingProblem::from_regions(
                relabel.iter().map(|&i| p.extra[i].clone()).collect(),
                relabel.iter().map(|&i| p.visible[i].clone()).collect(),
                relabel.iter().map(|&i| p.fill[i].clone()).collect(),
                Weight::ONE,
            ).unwrap();
            let sq = solve(&q);
            let mapped: Vec<usize> = sq.permutation.iter().map(|&i| relabel[i]).collect();
            prop_assert_eq!(solve(&p).objective, sq.objective);
            prop_assert_eq!(enumerate_objective(&p, &mapped).unwrap(), sq.objective);
        }

        #[test]
        fn no_extra_means_zero_optimum(
            bits in proptest::collection::vec(proptest::bool::weighted(0.3), 7 * 27),
            k in 1usize..=6,
        ) {
            // Visible regions consistent with the identity stacking.
            let p = random_problem(&bits, k, Weight::ONE);
            let visible = (0..k)
                .map(|i| p.fill[i + 1..].iter().fold(p.visible[i].clone(), |acc, f| acc.and_not(f).unwrap()))
                .collect();
            let p = OrderingProblem::from_regions(vec![BinaryMask::new(3, 3); k], visible, p.fill, Weight::ONE).unwrap();
            let s = solve(&p);
            prop_assert_eq!(s.objective, 0);
            prop_assert!(s.z.iter().all(|&v| !v));
        }
    }

    #[test]
    fn all_zero_relations_give_identity() {
        let e = BinaryMask::new(2, 2);
        let p = OrderingProblem::from_regions(vec![e.clone(); 5], vec![e.clone(); 5], vec![e; 5], Weight::ONE).unwrap();
        let s = solve(&p);
        assert_eq!(s.permutation, vec![0, 1, 2, 3, 4]);
        assert_eq!(s.objective, 0);
    }

    #[test]
    fn dump_has_matrices() {
        let (amodal, visible, sil) = circle_behind_square();
        let p = build_problem(&amodal, &visible, &sil, FillSource::RawMasks, Weight::ONE).unwrap();
        let json: serde_json::Value = serde_json::from_str(&dump_json(&p, &solve(&p))).unwrap();
        assert_eq!(json["lambda"], "1");
        assert_eq!(json["c"][0][1], true);
        assert_eq!(json["permutation"], serde_json::json!([0, 1]));
        assert_eq!(json["objective"], 1);
    }
}
