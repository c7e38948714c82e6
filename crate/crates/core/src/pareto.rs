//! Bi-objective primitives: Pareto dominance, non-dominated sorting, exact
//! two-dimensional hypervolume and an incrementally maintained archive.
//!
//! Everything here follows the minimization convention.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::io::BufRead;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of the search space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchPoint(Vec<f64>);

impl SearchPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("search point coordinate".into()));
        }
        Ok(SearchPoint(coords))
    }

    pub fn zeros(n: usize) -> Self {
        SearchPoint(vec![0.0; n])
    }

    /// Builds a point from coordinates the caller already knows to be finite.
    pub(crate) fn from_vec_unchecked(coords: Vec<f64>) -> Self {
        debug_assert!(coords.iter().all(|c| c.is_finite()));
        SearchPoint(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for SearchPoint {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// The pair of objective values `(f1, f2)` of a search point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    pub f1: f64,
    pub f2: f64,
}

impl ObjectiveVector {
    pub fn new(f1: f64, f2: f64) -> Self {
        ObjectiveVector { f1, f2 }
    }

    pub fn is_finite(&self) -> bool {
        self.f1.is_finite() && self.f2.is_finite()
    }

    /// True when the vector lies strictly inside the box bounded by `reference`.
    pub fn strictly_dominates_ref(&self, reference: &ObjectiveVector) -> bool {
        self.f1 < reference.f1 && self.f2 < reference.f2
    }
}

/// An evaluated search point. `eval_index` is the 1-based evaluation count
/// at which the point was evaluated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub point: SearchPoint,
    pub value: ObjectiveVector,
    pub eval_index: u64,
}

/// Weak Pareto dominance: `a` is no worse in both objectives and strictly
/// better in at least one.
pub fn dominates(a: &ObjectiveVector, b: &ObjectiveVector) -> bool {
    a.f1 <= b.f1 && a.f2 <= b.f2 && (a.f1 < b.f1 || a.f2 < b.f2)
}

/// Non-dominated sorting. Rank 0 is the non-dominated front, rank `r + 1` the
/// front obtained after removing all members of rank `<= r`.
pub fn nondominated_sort(pop: &[ObjectiveVector]) -> Vec<usize> {
    let n = pop.len();
    let mut rank = vec![0usize; n];
    if n == 0 {
        return rank;
    }
    // Sorting by (f1, f2) guarantees a dominator always precedes the points it
    // dominates, so each point only has to be compared with earlier ones.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        pop[a]
            .f1
            .total_cmp(&pop[b].f1)
            .then(pop[a].f2.total_cmp(&pop[b].f2))
    });
    // fronts[r] holds the minimal f2 among members of rank r processed so far.
    // A point belongs to the first front whose minimal f2 does not dominate it.
    let mut fronts: Vec<Vec<usize>> = Vec::new();
    for &i in &order {
        let p = &pop[i];
        let r = fronts.partition_point(|members| members.iter().any(|&j| dominates(&pop[j], p)));
        if r == fronts.len() {
            fronts.push(Vec::new());
        }
        fronts[r].push(i);
        rank[i] = r;
    }
    rank
}

/// Indices of the non-dominated members of `pop` (first occurrence of exact
/// duplicates only), sorted by ascending f1.
pub fn nondominated_indices(pop: &[ObjectiveVector]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..pop.len()).collect();
    order.sort_by(|&a, &b| {
        pop[a]
            .f1
            .total_cmp(&pop[b].f1)
            .then(pop[a].f2.total_cmp(&pop[b].f2))
            .then(a.cmp(&b))
    });
    let mut out = Vec::new();
    let mut best_f2 = f64::INFINITY;
    for i in order {
        if pop[i].f2 < best_f2 {
            best_f2 = pop[i].f2;
            out.push(i);
        }
    }
    out
}

/// Exact dominated hypervolume of `front` with respect to `reference`.
/// Points that do not strictly dominate the reference contribute nothing.
pub fn hv2d(front: &[ObjectiveVector], reference: &ObjectiveVector) -> f64 {
    let mut pts: Vec<ObjectiveVector> = front
        .iter()
        .filter(|p| p.strictly_dominates_ref(reference))
        .copied()
        .collect();
    pts.sort_by(|a, b| a.f1.total_cmp(&b.f1).then(a.f2.total_cmp(&b.f2)));
    let mut area = 0.0;
    let mut last_f2 = reference.f2;
    for p in &pts {
        if p.f2 < last_f2 {
            area += (reference.f1 - p.f1) * (last_f2 - p.f2);
            last_f2 = p.f2;
        }
    }
    area
}

/// Hypervolume lost by removing member `i` from `front`, which must be sorted
/// by ascending f1 and mutually non-dominated (exact duplicates allowed).
pub fn hv_contribution(i: usize, front: &[ObjectiveVector], reference: &ObjectiveVector) -> Result<f64> {
    if i >= front.len() {
        return Err(Error::IndexOutOfRange {
            index: i,
            len: front.len(),
        });
    }
    Ok(contribution_unchecked(i, front, reference))
}

fn contribution_unchecked(i: usize, front: &[ObjectiveVector], reference: &ObjectiveVector) -> f64 {
    let p = &front[i];
    if !p.strictly_dominates_ref(reference) {
        return 0.0;
    }
    let right = front.get(i + 1).map_or(reference.f1, |q| q.f1.min(reference.f1));
    let upper = if i > 0 {
        front[i - 1].f2.min(reference.f2)
    } else {
        reference.f2
    };
    (right - p.f1).max(0.0) * (upper - p.f2).max(0.0)
}

/// How far a point lies outside the reference box, summed over objectives.
/// Used to order zero-contribution points during selection.
fn ref_excess(p: &ObjectiveVector, reference: &ObjectiveVector) -> f64 {
    let scale = |r: f64| r.abs().max(1e-12);
    ((p.f1 - reference.f1) / scale(reference.f1)).max(0.0) + ((p.f2 - reference.f2) / scale(reference.f2)).max(0.0)
}

/// Picks the member of a single non-dominated front to discard: smallest
/// hypervolume contribution, then largest excess over the reference box, then
/// the highest original index. `members` indexes into `values`.
fn worst_in_front(members: &[usize], values: &[ObjectiveVector], reference: &ObjectiveVector) -> usize {
    let mut sorted: Vec<usize> = members.to_vec();
    sorted.sort_by(|&a, &b| {
        values[a]
            .f1
            .total_cmp(&values[b].f1)
            .then(values[a].f2.total_cmp(&values[b].f2))
            .then(a.cmp(&b))
    });
    let front: Vec<ObjectiveVector> = sorted.iter().map(|&i| values[i]).collect();
    let mut worst = 0;
    let mut worst_key = (f64::INFINITY, f64::NEG_INFINITY, 0usize);
    for (pos, &idx) in sorted.iter().enumerate() {
        let key = (
            contribution_unchecked(pos, &front, reference),
            ref_excess(&values[idx], reference),
            idx,
        );
        let worse = match key.0.total_cmp(&worst_key.0) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => match key.1.total_cmp(&worst_key.1) {
                Ordering::Greater => true,
                Ordering::Less => false,
                Ordering::Equal => key.2 > worst_key.2,
            },
        };
        if worse {
            worst = idx;
            worst_key = key;
        }
    }
    worst
}

/// Index of the member to discard from `values`: the least hypervolume
/// contributor of the worst non-dominated front.
pub fn select_worst(values: &[ObjectiveVector], reference: &ObjectiveVector) -> usize {
    assert!(!values.is_empty(), "select_worst on empty population");
    let ranks = nondominated_sort(values);
    let max_rank = *ranks.iter().max().unwrap();
    let last: Vec<usize> = (0..values.len()).filter(|&i| ranks[i] == max_rank).collect();
    if last.len() == 1 {
        return last[0];
    }
    worst_in_front(&last, values, reference)
}

/// Environmental selection: returns the indices of the `keep` best members,
/// ordered by rank and then by index. Whole fronts are taken while they fit;
/// the critical front is reduced by repeatedly dropping its least
/// hypervolume contributor.
pub fn select_best(values: &[ObjectiveVector], keep: usize, reference: &ObjectiveVector) -> Vec<usize> {
    if keep >= values.len() {
        return (0..values.len()).collect();
    }
    let ranks = nondominated_sort(values);
    let mut chosen = Vec::with_capacity(keep);
    let mut rank = 0;
    while chosen.len() < keep {
        let mut front: Vec<usize> = (0..values.len()).filter(|&i| ranks[i] == rank).collect();
        if chosen.len() + front.len() > keep {
            while chosen.len() + front.len() > keep {
                let w = worst_in_front(&front, values, reference);
                front.retain(|&i| i != w);
            }
        }
        chosen.extend(front);
        rank += 1;
    }
    chosen
}

/// All-time non-dominated set with an incrementally maintained hypervolume.
///
/// Members are kept sorted by strictly increasing f1 (hence strictly
/// decreasing f2). Members outside the reference box are retained but add no
/// volume.
#[derive(Clone, Debug)]
pub struct ParetoArchive {
    members: Vec<Solution>,
    reference: ObjectiveVector,
    hv: f64,
}

impl ParetoArchive {
    pub fn new(reference: ObjectiveVector) -> Self {
        ParetoArchive {
            members: Vec::new(),
            reference,
            hv: 0.0,
        }
    }

    pub fn reference(&self) -> &ObjectiveVector {
        &self.reference
    }

    pub fn hv(&self) -> f64 {
        self.hv
    }

    pub fn members(&self) -> &[Solution] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn values(&self) -> Vec<ObjectiveVector> {
        self.members.iter().map(|s| s.value).collect()
    }

    // Volume of the strip owned by member i: from its f1 to the next member's
    // f1 (or the reference), from its f2 up to the reference.
    fn strip(&self, i: usize) -> f64 {
        let p = &self.members[i].value;
        if !p.strictly_dominates_ref(&self.reference) {
            return 0.0;
        }
        let right = self
            .members
            .get(i + 1)
            .map_or(self.reference.f1, |q| q.value.f1.min(self.reference.f1));
        (right - p.f1) * (self.reference.f2 - p.f2)
    }

    /// Offers a solution to the archive. Returns true when the archive changed.
    pub fn insert(&mut self, s: Solution) -> bool {
        let v = s.value;
        debug_assert!(v.is_finite());
        // First member with f1 > v.f1.
        let after = self.members.partition_point(|m| m.value.f1 <= v.f1);
        if after > 0 && self.members[after - 1].value.f2 <= v.f2 {
            return false;
        }
        let start = self.members.partition_point(|m| m.value.f1 < v.f1);
        let mut end = start;
        while end < self.members.len() && self.members[end].value.f2 >= v.f2 {
            end += 1;
        }
        let lo = start.saturating_sub(1);
        let old: f64 = (lo..end).map(|i| self.strip(i)).sum();
        self.members.splice(start..end, std::iter::once(s));
        let new: f64 = (lo..=start).map(|i| self.strip(i)).sum();
        self.hv += new - old;
        if self.hv < 0.0 {
            self.hv = 0.0;
        }
        true
    }

    /// Hypervolume recomputed from scratch.
    pub fn recompute_hv(&self) -> f64 {
        hv2d(&self.values(), &self.reference)
    }

    /// Writes the archive as `f1 f2 eval_index` lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for m in &self.members {
            let _ = writeln!(out, "{} {} {}", fmt_f64(m.value.f1), fmt_f64(m.value.f2), m.eval_index);
        }
        out
    }
}

/// One `f1 f2 eval_index` entry of the archive text format.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrontEntry {
    pub value: ObjectiveVector,
    pub eval_index: u64,
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Parses one archive triple line. `line_no` is used for error reporting.
pub fn parse_front_line(line: &str, line_no: usize) -> Result<FrontEntry> {
    let mut it = line.split_whitespace();
    let mut next_f = |what: &str| -> Result<f64> {
        let tok = it
            .next()
            .ok_or_else(|| Error::parse(line_no, format!("missing {what}")))?;
        let v: f64 = tok
            .parse()
            .map_err(|_| Error::parse(line_no, format!("bad {what}: {tok:?}")))?;
        if !v.is_finite() {
            return Err(Error::parse(line_no, format!("non-finite {what}")));
        }
        Ok(v)
    };
    let f1 = next_f("f1")?;
    let f2 = next_f("f2")?;
    let tok = it
        .next()
        .ok_or_else(|| Error::parse(line_no, "missing eval_index"))?;
    let eval_index = tok
        .parse()
        .map_err(|_| Error::parse(line_no, format!("bad eval_index: {tok:?}")))?;
    Ok(FrontEntry {
        value: ObjectiveVector::new(f1, f2),
        eval_index,
    })
}

/// Reads archive triples, skipping blank lines.
pub fn read_front<R: BufRead>(reader: R) -> Result<Vec<FrontEntry>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_front_line(&line, i + 1)?);
    }
    Ok(out)
}
