//! Scalable bi-objective test problems.
//!
//! Each problem pairs two of ten single-objective base functions. The base
//! functions cover five categories (separable, moderate, ill-conditioned,
//! multi-modal, weakly structured), two functions each, and every one of them
//! attains its global minimum 0 at the origin of its transformed coordinates
//! and is strictly positive elsewhere. An instance applies a shift and, for
//! non-separable functions, a rotation drawn from a deterministic generator
//! keyed by `(k, n, instance)`.

use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pareto::{fmt_f64, hv2d, parse_front_line, FrontEntry, ObjectiveVector, SearchPoint};

/// Number of distinct base-function pairs.
pub const NUM_PROBLEMS: usize = 55;
/// Number of gaussian peaks of the Gallagher-type function.
const GALLAGHER_PEAKS: usize = 21;
/// The reference point is the start-point objective vector scaled by this factor.
pub const REF_POINT_FACTOR: f64 = 1.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Separable,
    Moderate,
    IllConditioned,
    Multimodal,
    WeakStructure,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::Separable,
        Category::Moderate,
        Category::IllConditioned,
        Category::Multimodal,
        Category::WeakStructure,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Category::Separable => "separable",
            Category::Moderate => "moderate",
            Category::IllConditioned => "ill-cond.",
            Category::Multimodal => "multimodal",
            Category::WeakStructure => "weakstructure",
        }
    }
}

/// Label of a category pair, e.g. `separable-multimodal`. The pair is ordered
/// by category rank so that every unordered pair has one label.
pub fn group_label(a: Category, b: Category) -> String {
    let (lo, hi) = if (a as usize) <= (b as usize) { (a, b) } else { (b, a) };
    format!("{}-{}", lo.label(), hi.label())
}

/// The 15 category-pair labels, in canonical order.
pub fn group_labels() -> Vec<String> {
    let mut out = Vec::with_capacity(15);
    for (i, &a) in Category::ALL.iter().enumerate() {
        for &b in &Category::ALL[i..] {
            out.push(group_label(a, b));
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseFunctionId {
    Sphere,
    Ellipsoid,
    AttrSector,
    Rosenbrock,
    SharpRidge,
    DiffPowers,
    Rastrigin,
    SchafferLike,
    GriewankRosenbrock,
    GallagherLike,
}

impl BaseFunctionId {
    /// Canonical order used by the pair enumeration.
    pub const ALL: [BaseFunctionId; 10] = [
        BaseFunctionId::Sphere,
        BaseFunctionId::Ellipsoid,
        BaseFunctionId::AttrSector,
        BaseFunctionId::Rosenbrock,
        BaseFunctionId::SharpRidge,
        BaseFunctionId::DiffPowers,
        BaseFunctionId::Rastrigin,
        BaseFunctionId::SchafferLike,
        BaseFunctionId::GriewankRosenbrock,
        BaseFunctionId::GallagherLike,
    ];

    pub fn category(self) -> Category {
        use BaseFunctionId::*;
        match self {
            Sphere | Ellipsoid => Category::Separable,
            AttrSector | Rosenbrock => Category::Moderate,
            SharpRidge | DiffPowers => Category::IllConditioned,
            Rastrigin | SchafferLike => Category::Multimodal,
            GriewankRosenbrock | GallagherLike => Category::WeakStructure,
        }
    }

    pub fn is_separable(self) -> bool {
        self.category() == Category::Separable
    }

    pub fn name(self) -> &'static str {
        use BaseFunctionId::*;
        match self {
            Sphere => "sphere",
            Ellipsoid => "ellipsoid",
            AttrSector => "attr_sector",
            Rosenbrock => "rosenbrock",
            SharpRidge => "sharp_ridge",
            DiffPowers => "diff_powers",
            Rastrigin => "rastrigin",
            SchafferLike => "schaffer_like",
            GriewankRosenbrock => "griewank_rosenbrock",
            GallagherLike => "gallagher_like",
        }
    }
}

impl fmt::Display for BaseFunctionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Maps a problem index `k` in `1..=55` to its pair of base functions
/// (upper-triangle enumeration including the diagonal).
pub fn pair_of(k: usize) -> Result<(BaseFunctionId, BaseFunctionId)> {
    if !(1..=NUM_PROBLEMS).contains(&k) {
        return Err(Error::InvalidArgument(format!("problem index k={k} outside 1..=55")));
    }
    let mut idx = 1;
    for i in 0..10 {
        for j in i..10 {
            if idx == k {
                return Ok((BaseFunctionId::ALL[i], BaseFunctionId::ALL[j]));
            }
            idx += 1;
        }
    }
    unreachable!()
}

/// Inverse of [`pair_of`] for an unordered pair.
pub fn index_of_pair(a: BaseFunctionId, b: BaseFunctionId) -> usize {
    let pos = |f| BaseFunctionId::ALL.iter().position(|&g| g == f).unwrap();
    let (i, j) = {
        let (i, j) = (pos(a), pos(b));
        (i.min(j), i.max(j))
    };
    // rows before i hold 10 + 9 + ... + (10 - i + 1) entries
    (0..i).map(|r| 10 - r).sum::<usize>() + (j - i) + 1
}

#[derive(Clone, Debug)]
struct GallagherPeaks {
    centers: Vec<Vec<f64>>,
    weights: Vec<f64>,
    // diagonal of the per-peak conditioning matrix
    scales: Vec<Vec<f64>>,
}

/// A base function together with any instance-specific parameters.
#[derive(Clone, Debug)]
pub struct BaseFunction {
    id: BaseFunctionId,
    n: usize,
    peaks: Option<GallagherPeaks>,
}

impl BaseFunction {
    fn new(id: BaseFunctionId, n: usize, rng: &mut ChaCha8Rng) -> Self {
        let peaks = (id == BaseFunctionId::GallagherLike).then(|| {
            let m = GALLAGHER_PEAKS;
            let mut centers = vec![vec![0.0; n]];
            let mut weights = vec![10.0];
            for j in 1..m {
                centers.push((0..n).map(|_| rng.random_range(-4.0..4.0)).collect());
                weights.push(1.1 + 8.0 * (j - 1) as f64 / (m - 2) as f64);
            }
            let mut scales = Vec::with_capacity(m);
            for j in 0..m {
                let alpha: f64 = if j == 0 {
                    1000.0
                } else {
                    1000f64.powf(2.0 * rng.random_range(0..m) as f64 / (m - 1) as f64)
                };
                scales.push(
                    (0..n)
                        .map(|i| alpha.powf(i as f64 / (n - 1) as f64) / alpha.powf(0.25))
                        .collect(),
                );
            }
            GallagherPeaks {
                centers,
                weights,
                scales,
            }
        });
        BaseFunction { id, n, peaks }
    }

    pub fn id(&self) -> BaseFunctionId {
        self.id
    }

    /// Value at transformed coordinates `z` (optimum at `z = 0`).
    pub fn value(&self, z: &[f64]) -> f64 {
        use BaseFunctionId::*;
        let n = self.n;
        let ramp = |i: usize| if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
        match self.id {
            Sphere => z.iter().map(|v| v * v).sum(),
            Ellipsoid => z
                .iter()
                .enumerate()
                .map(|(i, v)| 10f64.powf(6.0 * ramp(i)) * v * v)
                .sum(),
            AttrSector => z
                .iter()
                .map(|&v| {
                    let s = if v > 0.0 { 100.0 } else { 1.0 };
                    (s * v) * (s * v)
                })
                .sum(),
            Rosenbrock => {
                let scale = 1f64.max((n as f64).sqrt() / 8.0);
                let y: Vec<f64> = z.iter().map(|v| scale * v + 1.0).collect();
                y.windows(2)
                    .map(|w| 100.0 * (w[0] * w[0] - w[1]).powi(2) + (w[0] - 1.0).powi(2))
                    .sum()
            }
            SharpRidge => {
                let tail: f64 = z[1..].iter().map(|v| v * v).sum();
                z[0] * z[0] + 100.0 * tail.sqrt()
            }
            DiffPowers => z
                .iter()
                .enumerate()
                .map(|(i, v)| v.abs().powf(2.0 + 4.0 * ramp(i)))
                .sum::<f64>()
                .sqrt(),
            Rastrigin => {
                let cos_sum: f64 = z.iter().map(|v| (2.0 * PI * v).cos()).sum();
                let sq: f64 = z.iter().map(|v| v * v).sum();
                10.0 * (n as f64 - cos_sum) + sq
            }
            SchafferLike => {
                let y: Vec<f64> = z
                    .iter()
                    .enumerate()
                    .map(|(i, v)| 10f64.powf(0.5 * ramp(i)) * v)
                    .collect();
                let mean: f64 = y
                    .windows(2)
                    .map(|w| {
                        let s = (w[0] * w[0] + w[1] * w[1]).sqrt();
                        s.sqrt() + s.sqrt() * (50.0 * s.powf(0.2)).sin().powi(2)
                    })
                    .sum::<f64>()
                    / (n - 1) as f64;
                mean * mean
            }
            GriewankRosenbrock => {
                let scale = 1f64.max((n as f64).sqrt() / 8.0);
                let y: Vec<f64> = z.iter().map(|v| scale * v + 1.0).collect();
                let sum: f64 = y
                    .windows(2)
                    .map(|w| {
                        let s = 100.0 * (w[0] * w[0] - w[1]).powi(2) + (w[0] - 1.0).powi(2);
                        s / 4000.0 - s.cos()
                    })
                    .sum();
                // each term is >= -1 with equality only at s = 0
                (10.0 / (n - 1) as f64 * sum + 10.0).max(0.0)
            }
            GallagherLike => {
                let p = self.peaks.as_ref().expect("gallagher peaks");
                let best = p
                    .centers
                    .iter()
                    .zip(&p.weights)
                    .zip(&p.scales)
                    .map(|((c, w), s)| {
                        let q: f64 = z
                            .iter()
                            .zip(c)
                            .zip(s)
                            .map(|((zi, ci), si)| si * (zi - ci) * (zi - ci))
                            .sum();
                        w * (-q / (2.0 * n as f64)).exp()
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                (10.0 - best).powi(2)
            }
        }
    }
}

/// One instance of a bi-objective test problem.
#[derive(Clone, Debug)]
pub struct BiObjectiveProblem {
    k: usize,
    n: usize,
    instance: usize,
    f1: BaseFunction,
    f2: BaseFunction,
    shift1: SearchPoint,
    shift2: SearchPoint,
    rot1: DMatrix<f64>,
    rot2: DMatrix<f64>,
    ref_point: ObjectiveVector,
}

fn instance_rng(k: usize, n: usize, instance: usize) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    seed[0..8].copy_from_slice(&(k as u64).to_le_bytes());
    seed[8..16].copy_from_slice(&(n as u64).to_le_bytes());
    seed[16..24].copy_from_slice(&(instance as u64).to_le_bytes());
    seed[24..32].copy_from_slice(b"biobjpb1");
    ChaCha8Rng::from_seed(seed)
}

/// Haar-distributed random orthogonal matrix (QR of a gaussian matrix with the
/// sign convention `diag(R) > 0`).
fn random_rotation(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Builds problem `k` (1..=55) in dimension `n` (>= 2), instance `instance` (>= 1).
pub fn make_problem(k: usize, n: usize, instance: usize) -> Result<BiObjectiveProblem> {
    let (id1, id2) = pair_of(k)?;
    if n < 2 {
        return Err(Error::InvalidArgument(format!("dimension n={n} must be >= 2")));
    }
    if instance < 1 {
        return Err(Error::InvalidArgument("instance must be >= 1".into()));
    }
    let mut rng = instance_rng(k, n, instance);
    let shift = |rng: &mut ChaCha8Rng| {
        SearchPoint::from_vec_unchecked((0..n).map(|_| rng.random_range(-4.0..=4.0)).collect())
    };
    let shift1 = shift(&mut rng);
    let mut shift2 = shift(&mut rng);
    while shift2 == shift1 {
        shift2 = shift(&mut rng);
    }
    let rotation = |id: BaseFunctionId, rng: &mut ChaCha8Rng| {
        if id.is_separable() {
            DMatrix::identity(n, n)
        } else {
            random_rotation(n, rng)
        }
    };
    let rot1 = rotation(id1, &mut rng);
    let rot2 = rotation(id2, &mut rng);
    let f1 = BaseFunction::new(id1, n, &mut rng);
    let f2 = BaseFunction::new(id2, n, &mut rng);
    let mut p = BiObjectiveProblem {
        k,
        n,
        instance,
        f1,
        f2,
        shift1,
        shift2,
        rot1,
        rot2,
        ref_point: ObjectiveVector::new(0.0, 0.0),
    };
    let f0 = p.evaluate(&vec![0.0; n])?;
    p.ref_point = ObjectiveVector::new(
        (REF_POINT_FACTOR * f0.f1).max(1e-12),
        (REF_POINT_FACTOR * f0.f2).max(1e-12),
    );
    Ok(p)
}

impl BiObjectiveProblem {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn instance(&self) -> usize {
        self.instance
    }

    pub fn key(&self) -> ProblemKey {
        ProblemKey {
            k: self.k,
            n: self.n,
            instance: self.instance,
        }
    }

    pub fn base_functions(&self) -> (BaseFunctionId, BaseFunctionId) {
        (self.f1.id, self.f2.id)
    }

    pub fn shifts(&self) -> (&SearchPoint, &SearchPoint) {
        (&self.shift1, &self.shift2)
    }

    pub fn rotations(&self) -> (&DMatrix<f64>, &DMatrix<f64>) {
        (&self.rot1, &self.rot2)
    }

    /// Reference point for hypervolume: 1.1 times the objective vector at the origin.
    pub fn ref_point(&self) -> ObjectiveVector {
        self.ref_point
    }

    /// Label of the category pair this problem belongs to.
    pub fn group(&self) -> String {
        group_label(self.f1.id.category(), self.f2.id.category())
    }

    fn transform(x: &[f64], shift: &[f64], rot: &DMatrix<f64>) -> Vec<f64> {
        let n = x.len();
        let d: Vec<f64> = x.iter().zip(shift).map(|(a, b)| a - b).collect();
        (0..n)
            .map(|i| (0..n).map(|j| rot[(i, j)] * d[j]).sum())
            .collect()
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<ObjectiveVector> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        let z1 = Self::transform(x, &self.shift1, &self.rot1);
        let z2 = Self::transform(x, &self.shift2, &self.rot2);
        let v = ObjectiveVector::new(self.f1.value(&z1), self.f2.value(&z2));
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("objective value at {x:?}")));
        }
        Ok(v)
    }

    /// True for the sphere/sphere pair, whose front is known in closed form.
    pub fn has_analytic_front(&self) -> bool {
        self.k == 1
    }
}

/// Identifies a problem instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ProblemKey {
    pub k: usize,
    pub n: usize,
    pub instance: usize,
}

impl ProblemKey {
    pub fn build(&self) -> Result<BiObjectiveProblem> {
        make_problem(self.k, self.n, self.instance)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceSource {
    Analytic,
    LongRun,
}

/// Best-known hypervolume of a problem and the reference point it is measured against.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceData {
    pub ref_point: ObjectiveVector,
    pub ref_hv: f64,
    pub source: ReferenceSource,
}

/// Closed-form hypervolume of the bi-sphere front `sqrt(f1) + sqrt(f2) = d`
/// with respect to `reference`, where `d` is the distance between the optima.
pub fn bisphere_hv(d: f64, reference: &ObjectiveVector) -> f64 {
    let (r1, r2) = (reference.f1, reference.f2);
    let d2 = d * d;
    // f2 on the front as a function of f1 is (d - sqrt(f1))^2 for f1 <= d^2
    // and 0 beyond; integrate (r2 - f2(f1))^+ over f1 in [0, r1].
    let u = r1.min(d2);
    let a0 = if r2.sqrt() >= d { 0.0 } else { (d - r2.sqrt()).powi(2) };
    let mut area = 0.0;
    if u > a0 {
        area += (r2 - d2) * (u - a0) + 4.0 * d / 3.0 * (u.powf(1.5) - a0.powf(1.5)) - (u * u - a0 * a0) / 2.0;
    }
    if r1 > d2 {
        area += (r1 - d2) * r2;
    }
    area
}

/// Path of the reference file for `key` inside `dir`.
pub fn reference_path(dir: &Path, key: &ProblemKey) -> PathBuf {
    dir.join(format!("k{}_n{}_i{}.ref", key.k, key.n, key.instance))
}

/// Reference data of `p`: closed form for the bi-sphere, otherwise read from
/// `ref_dir` (see [`write_reference_file`]).
pub fn reference_data(p: &BiObjectiveProblem, ref_dir: Option<&Path>) -> Result<ReferenceData> {
    if p.has_analytic_front() {
        let d: f64 = p
            .shift1
            .iter()
            .zip(p.shift2.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        return Ok(ReferenceData {
            ref_point: p.ref_point,
            ref_hv: bisphere_hv(d, &p.ref_point),
            source: ReferenceSource::Analytic,
        });
    }
    let key = p.key();
    let path = ref_dir.map(|d| reference_path(d, &key)).unwrap_or_default();
    if ref_dir.is_none() || !path.is_file() {
        return Err(Error::NoReference {
            k: key.k,
            n: key.n,
            instance: key.instance,
            path,
        });
    }
    let (ref_point, front) = read_reference_file(&path)?;
    let expected = p.ref_point;
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300);
    if !close(ref_point.f1, expected.f1) || !close(ref_point.f2, expected.f2) {
        return Err(Error::InvalidArgument(format!(
            "reference file {} has ref_point {:?}, problem expects {:?}",
            path.display(),
            ref_point,
            expected
        )));
    }
    let values: Vec<ObjectiveVector> = front.iter().map(|e| e.value).collect();
    let ref_hv = hv2d(&values, &ref_point);
    if ref_hv <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "reference file {} has empty dominated region",
            path.display()
        )));
    }
    Ok(ReferenceData {
        ref_point,
        ref_hv,
        source: ReferenceSource::LongRun,
    })
}

/// Reads a reference file: a `ref_point f1 f2` line followed by archive triples.
pub fn read_reference_file(path: &Path) -> Result<(ObjectiveVector, Vec<FrontEntry>)> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut ref_point = None;
    let mut front = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if ref_point.is_none() {
            let rest = trimmed
                .strip_prefix("ref_point")
                .ok_or_else(|| Error::parse(line_no, "expected `ref_point f1 f2` header"))?;
            let vals: Vec<f64> = rest
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::parse(line_no, e.to_string()))?;
            if vals.len() != 2 || vals.iter().any(|v| !v.is_finite()) {
                return Err(Error::parse(line_no, "ref_point needs two finite values"));
            }
            ref_point = Some(ObjectiveVector::new(vals[0], vals[1]));
            continue;
        }
        front.push(parse_front_line(trimmed, line_no)?);
    }
    let ref_point = ref_point.ok_or_else(|| Error::parse(1, "missing ref_point header"))?;
    Ok((ref_point, front))
}

pub fn write_reference_file(path: &Path, ref_point: &ObjectiveVector, front: &[FrontEntry]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut out = fs::File::create(path)?;
    writeln!(out, "ref_point {} {}", fmt_f64(ref_point.f1), fmt_f64(ref_point.f2))?;
    for e in front {
        writeln!(out, "{} {} {}", fmt_f64(e.value.f1), fmt_f64(e.value.f2), e.eval_index)?;
    }
    Ok(())
}
