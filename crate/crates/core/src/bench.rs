//! Target-based scoring of anytime runs: the 58 hypervolume-difference
//! targets, runtime extraction, bootstrapped ECDFs, average runtimes and the
//! JSON-lines run record format.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::eval::Ledger;
use crate::hybrid::{Algo, RunOutput};
use crate::pareto::{fmt_f64, ObjectiveVector};
use crate::problems::{ProblemKey, ReferenceData};

pub const NUM_TARGETS: usize = 58;
pub const BOOTSTRAP_SAMPLES: usize = 1000;
pub const RECORD_FORMAT: &str = "hmocma-run";
pub const RECORD_VERSION: u32 = 1;

/// Target factors, hardest first: six negative, zero, then `10^(j/10 - 5)`
/// for `j = 0..=50`.
pub fn target_factors() -> Vec<f64> {
    let mut f: Vec<f64> = [-4.0, -4.2, -4.4, -4.6, -4.8, -5.0].iter().map(|e: &f64| -(10f64.powf(*e))).collect();
    f.push(0.0);
    f.extend((0..=50).map(|j| 10f64.powf((j as f64 - 50.0) / 10.0)));
    f
}

#[derive(Clone, Debug, PartialEq)]
pub struct TargetSet {
    pub ref_hv: f64,
    pub factors: Vec<f64>,
    /// Thresholds on the hypervolume difference, `factor * ref_hv`.
    pub targets: Vec<f64>,
}

pub fn make_targets(ref_hv: f64) -> Result<TargetSet> {
    if !(ref_hv > 0.0 && ref_hv.is_finite()) {
        return Err(Error::InvalidArgument(format!("ref_hv={ref_hv} must be positive")));
    }
    let factors = target_factors();
    let targets = factors.iter().map(|f| f * ref_hv).collect();
    Ok(TargetSet { ref_hv, factors, targets })
}

/// Log-spaced budgets `10^(j/10)` evaluations per dimension, `j = 0..=60`.
pub fn budget_grid() -> Vec<f64> {
    (0..=60).map(|j| 10f64.powf(j as f64 / 10.0)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceEntry {
    pub evals: u64,
    pub hv: f64,
    /// `ref_hv - hv`; `None` when the record has no reference data.
    pub hv_diff: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecordReference {
    pub ref_point: ObjectiveVector,
    pub ref_hv: f64,
}

/// Anytime trace of one run plus what is needed to score it.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub key: ProblemKey,
    pub seed: u64,
    pub algo: Algo,
    pub budget: u64,
    pub total_evals: u64,
    pub ledger: Ledger,
    pub reference: Option<RecordReference>,
    /// Starts with the empty-archive entry at 0 evaluations, then one entry
    /// per archive hypervolume increase.
    pub trace: Vec<TraceEntry>,
}

impl RunRecord {
    pub fn from_output(key: ProblemKey, seed: u64, algo: Algo, budget: u64, out: &RunOutput, reference: Option<&ReferenceData>) -> Self {
        let reference = reference.map(|r| RecordReference {
            ref_point: r.ref_point,
            ref_hv: r.ref_hv,
        });
        let diff = |hv: f64| reference.map(|r| r.ref_hv - hv);
        let mut trace = vec![TraceEntry {
            evals: 0,
            hv: 0.0,
            hv_diff: diff(0.0),
        }];
        trace.extend(out.trace.iter().map(|e| TraceEntry {
            evals: e.evals,
            hv: e.hv,
            hv_diff: diff(e.hv),
        }));
        RunRecord {
            key,
            seed,
            algo,
            budget,
            total_evals: out.ledger.total(),
            ledger: out.ledger,
            reference,
            trace,
        }
    }

    /// `(evaluations, hv_diff)` pairs; empty without reference data.
    pub fn anytime_trace(&self) -> Vec<(u64, f64)> {
        self.trace.iter().filter_map(|e| e.hv_diff.map(|d| (e.evals, d))).collect()
    }

    pub fn final_hv(&self) -> f64 {
        self.trace.last().map_or(0.0, |e| e.hv)
    }

    pub fn targets(&self) -> Option<TargetSet> {
        self.reference.and_then(|r| make_targets(r.ref_hv).ok())
    }

    /// First evaluation count at which each target is met (`hv_diff <= target`).
    pub fn hits(&self, targets: &TargetSet) -> Vec<Option<u64>> {
        let trace = self.anytime_trace();
        targets
            .targets
            .iter()
            .map(|&t| trace.iter().find(|(e, d)| *e >= 1 && *d <= t).map(|(e, _)| *e))
            .collect()
    }

    pub fn to_jsonl(&self) -> String {
        let mut s = String::new();
        let l = &self.ledger;
        let reference = match &self.reference {
            Some(r) => format!(
                "{{\"f1\":{},\"f2\":{},\"hv\":{}}}",
                fmt_f64(r.ref_point.f1),
                fmt_f64(r.ref_point.f2),
                fmt_f64(r.ref_hv)
            ),
            None => "null".into(),
        };
        let _ = writeln!(
            s,
            "{{\"format\":\"{RECORD_FORMAT}\",\"version\":{RECORD_VERSION},\"k\":{},\"n\":{},\"instance\":{},\"seed\":{},\"algo\":\"{}\",\"budget\":{},\"total_evals\":{},\"ledger\":{{\"warmstart\":{},\"ss\":{},\"restart_cma\":{},\"ipop\":{}}},\"ref\":{},\"trace_len\":{}}}",
            self.key.k,
            self.key.n,
            self.key.instance,
            self.seed,
            self.algo,
            self.budget,
            self.total_evals,
            l.warmstart,
            l.ss,
            l.restart_cma,
            l.ipop,
            reference,
            self.trace.len()
        );
        for e in &self.trace {
            let d = e.hv_diff.map_or("null".into(), fmt_f64);
            let _ = writeln!(s, "{{\"evals\":{},\"hv\":{},\"hv_diff\":{}}}", e.evals, fmt_f64(e.hv), d);
        }
        s
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (i, first) = lines.next().ok_or_else(|| Error::parse(1, "empty record"))?;
        let h: Header = serde_json::from_str(first).map_err(|e| Error::parse(i + 1, e.to_string()))?;
        if h.format != RECORD_FORMAT {
            return Err(Error::parse(i + 1, format!("unknown format {:?}", h.format)));
        }
        let algo: Algo = h.algo.parse().map_err(|e: Error| Error::parse(i + 1, e.to_string()))?;
        let mut trace = Vec::with_capacity(h.trace_len);
        let mut last_line = i + 1;
        for (i, line) in lines {
            let e: EntryLine = serde_json::from_str(line).map_err(|e| Error::parse(i + 1, e.to_string()))?;
            trace.push(TraceEntry {
                evals: e.evals,
                hv: e.hv,
                hv_diff: e.hv_diff,
            });
            last_line = i + 1;
        }
        if trace.len() != h.trace_len {
            return Err(Error::parse(
                last_line,
                format!("expected {} trace entries, found {}", h.trace_len, trace.len()),
            ));
        }
        Ok(RunRecord {
            key: ProblemKey {
                k: h.k,
                n: h.n,
                instance: h.instance,
            },
            seed: h.seed,
            algo,
            budget: h.budget,
            total_evals: h.total_evals,
            ledger: h.ledger,
            reference: h.reference.map(|r| RecordReference {
                ref_point: ObjectiveVector::new(r.f1, r.f2),
                ref_hv: r.hv,
            }),
            trace,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(path, self.to_jsonl())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_jsonl(&fs::read_to_string(path)?)
    }
}

#[derive(Deserialize)]
struct RefLine {
    f1: f64,
    f2: f64,
    hv: f64,
}

#[derive(Deserialize)]
struct Header {
    format: String,
    k: usize,
    n: usize,
    instance: usize,
    seed: u64,
    algo: String,
    budget: u64,
    total_evals: u64,
    ledger: Ledger,
    #[serde(rename = "ref")]
    reference: Option<RefLine>,
    trace_len: usize,
}

#[derive(Deserialize)]
struct EntryLine {
    evals: u64,
    hv: f64,
    hv_diff: Option<f64>,
}

/// Share of the 58 targets met within `at_evals` evaluations.
pub fn fraction_reached(rec: &RunRecord, at_evals: u64) -> f64 {
    let Some(t) = rec.targets() else { return 0.0 };
    let hit = rec.hits(&t).iter().filter(|h| h.is_some_and(|e| e <= at_evals)).count();
    hit as f64 / NUM_TARGETS as f64
}

/// Average runtime for `target`: evaluations summed over all runs divided by
/// the number of successful runs; infinite when none succeeded.
pub fn art(records: &[RunRecord], target: f64) -> Result<f64> {
    let first = records.first().ok_or(Error::Empty("records"))?;
    let mut total = 0.0;
    let mut successes = 0usize;
    for r in records {
        if (r.key.k, r.key.n) != (first.key.k, first.key.n) {
            return Err(Error::InvalidArgument(format!("aRT over different problems {:?} and {:?}", first.key, r.key)));
        }
        match hit_of(r, target) {
            Some(e) => {
                total += e as f64;
                successes += 1;
            }
            None => total += r.total_evals as f64,
        }
    }
    Ok(if successes == 0 { f64::INFINITY } else { total / successes as f64 })
}

fn hit_of(r: &RunRecord, target: f64) -> Option<u64> {
    r.anytime_trace().into_iter().find(|(e, d)| *e >= 1 && *d <= target).map(|(e, _)| e)
}

/// Simulated-restart runtimes for one problem: for each target, draw runs
/// uniformly with replacement until one meets the target, summing the
/// evaluations of the failed ones. `None` when no run ever meets it.
pub fn bootstrap_runtimes(records: &[&RunRecord], samples: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<Option<f64>>> {
    // targets are relative to each run's own reference
    let hits: Vec<Vec<Option<u64>>> = records
        .iter()
        .map(|r| r.targets().map_or(vec![None; NUM_TARGETS], |t| r.hits(&t)))
        .collect();
    (0..NUM_TARGETS)
        .map(|j| {
            if hits.iter().all(|h| h[j].is_none()) {
                return vec![None; samples];
            }
            (0..samples)
                .map(|_| {
                    let mut spent = 0.0;
                    loop {
                        let r = rng.random_range(0..records.len());
                        match hits[r][j] {
                            Some(e) => return Some(spent + e as f64),
                            None => spent += records[r].total_evals as f64,
                        }
                    }
                })
                .collect()
        })
        .collect()
}

/// ECDF of bootstrapped runtimes: for each budget `b` (evaluations per
/// dimension), the share of (problem, target, sample) triples with runtime
/// at most `b n`. Problems are weighted equally; runs on different instances
/// of one problem are drawn from the same pool.
pub fn ecdf(records: &[RunRecord], budgets: &[f64], bootstrap_seed: u64) -> Result<Vec<(f64, f64)>> {
    let Some(first) = records.first() else {
        return Ok(budgets.iter().map(|&b| (b, 0.0)).collect());
    };
    let n = first.key.n;
    if let Some(r) = records.iter().find(|r| r.key.n != n) {
        return Err(Error::MixedDimensions(n, r.key.n));
    }
    // instances of the same problem pool their runs
    let mut groups: BTreeMap<(usize, usize), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.key.k, r.key.n)).or_default().push(r);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(bootstrap_seed);
    let mut runtimes = Vec::new();
    for recs in groups.values() {
        for per_target in bootstrap_runtimes(recs, BOOTSTRAP_SAMPLES, &mut rng) {
            runtimes.extend(per_target);
        }
    }
    let mut finite: Vec<f64> = runtimes.iter().flatten().copied().collect();
    finite.sort_by(f64::total_cmp);
    let total = runtimes.len() as f64;
    Ok(budgets
        .iter()
        .map(|&b| {
            let limit = b * n as f64;
            let count = finite.partition_point(|&x| x <= limit);
            (b, count as f64 / total)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::HvEntry;
    use crate::pareto::ParetoArchive;
    use proptest::prelude::*;

    fn key() -> ProblemKey {
        ProblemKey { k: 2, n: 5, instance: 1 }
    }

    /// Record whose trace reaches `diffs[i]` (as fractions of ref_hv) at `evals[i]`.
    fn record(evals: &[u64], diffs: &[f64], total: u64) -> RunRecord {
        let ref_hv = 2.0;
        let out = RunOutput {
            archive: ParetoArchive::new(ObjectiveVector::new(1.0, 1.0)),
            trace: evals.iter().zip(diffs).map(|(&e, &d)| HvEntry { evals: e, hv: ref_hv * (1.0 - d) }).collect(),
            ledger: Ledger {
                ss: total,
                ..Ledger::default()
            },
        };
        let r = ReferenceData {
            ref_point: ObjectiveVector::new(3.0, 4.0),
            ref_hv,
            source: crate::problems::ReferenceSource::LongRun,
        };
        RunRecord::from_output(key(), 1, Algo::Hybrid, total, &out, Some(&r))
    }

    #[test]
    fn factor_list() {
        let f = target_factors();
        assert_eq!(f.len(), 58);
        assert_eq!(f.iter().filter(|v| **v < 0.0).count(), 6);
        assert_eq!(f.iter().filter(|v| **v == 0.0).count(), 1);
        assert_eq!(f.iter().filter(|v| **v > 0.0).count(), 51);
        assert_eq!(f[0], -1e-4);
        assert_eq!(f[5], -1e-5);
        assert_eq!(f[7], 1e-5);
        assert_eq!(*f.last().unwrap(), 1.0);
        let t = make_targets(3.0).unwrap();
        assert_eq!(t.targets[57], 3.0);
        assert!(make_targets(0.0).is_err());
        assert_eq!(budget_grid().len(), 61);
    }

    #[test]
    fn exact_front_scores_52() {
        let r = record(&[10, 20], &[0.5, 0.0], 100);
        assert!((fraction_reached(&r, 100) - 52.0 / 58.0).abs() < 1e-15);
        assert_eq!(fraction_reached(&r, 0), 0.0);
        assert_eq!(fraction_reached(&r, 9), 0.0);
        // hv_diff 0.5 ref_hv meets the targets down to 10^-0.3
        assert_eq!(fraction_reached(&r, 10), 4.0 / 58.0);
    }

    #[test]
    fn all_targets_and_boundary() {
        let r = record(&[1, 7], &[1.0, -1.0], 10);
        // hv_diff == ref_hv at the first evaluation meets the 10^0 target
        assert_eq!(fraction_reached(&r, 1), 1.0 / 58.0);
        assert_eq!(fraction_reached(&r, 7), 1.0);
    }

    #[test]
    fn art_examples() {
        let a = record(&[100], &[0.0], 1000);
        let b = record(&[300], &[0.0], 1000);
        assert_eq!(art(&[a.clone(), b], 0.0).unwrap(), 200.0);
        let c = record(&[], &[], 500);
        let a2 = record(&[100], &[0.0], 100);
        assert_eq!(art(&[a2, c.clone()], 0.0).unwrap(), 600.0);
        assert_eq!(art(&[c], 0.0).unwrap(), f64::INFINITY);
        assert!(art(&[], 0.0).is_err());
    }

    #[test]
    fn ecdf_step_and_empty() {
        let n = 5.0;
        let recs = vec![record(&[50], &[-1.0], 50), record(&[50], &[-1.0], 50)];
        let curve = ecdf(&recs, &[1.0, 9.9, 10.0, 100.0], 0).unwrap();
        assert_eq!(curve.iter().map(|c| c.1).collect::<Vec<_>>(), vec![0.0, 0.0, 1.0, 1.0]);
        assert_eq!(curve[2].0 * n, 50.0);
        let none = vec![record(&[], &[], 80)];
        assert!(ecdf(&none, &budget_grid(), 0).unwrap().iter().all(|c| c.1 == 0.0));
        assert!(ecdf(&[], &budget_grid(), 0).unwrap().iter().all(|c| c.1 == 0.0));
    }

    #[test]
    fn ecdf_single_record_plateau() {
        // just below 10^-2.8: the 29 easiest targets 10^0 .. 10^-2.8
        let d = 0.999 * 10f64.powf(-2.8);
        let r = record(&[40], &[d], 400);
        let t = r.targets().unwrap();
        assert_eq!(r.hits(&t).iter().filter(|h| h.is_some()).count(), 29);
        let curve = ecdf(&[r], &budget_grid(), 3).unwrap();
        let last = curve.last().unwrap().1;
        assert!((last - 0.5).abs() < 1e-15);
        assert_eq!(curve.iter().find(|c| c.0 * 5.0 >= 40.0).unwrap().1, 0.5);
    }

    #[test]
    fn ecdf_rejects_mixed_dimensions() {
        let a = record(&[1], &[0.5], 10);
        let mut b = a.clone();
        b.key.n = 3;
        assert!(matches!(ecdf(&[a, b], &[1.0], 0), Err(Error::MixedDimensions(5, 3))));
    }

    #[test]
    fn bootstrap_chains_failed_runs() {
        // one run hits target 10^0 at 10, the other never does after 100
        let a = record(&[10], &[1.0], 100);
        let b = record(&[], &[], 100);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rt = bootstrap_runtimes(&[&a, &b], 2000, &mut rng);
        let easiest = &rt[57];
        assert!(easiest.iter().all(|v| matches!(v, Some(x) if (*x - 10.0) % 100.0 == 0.0)));
        // geometric number of failures with success probability 1/2
        let mean = easiest.iter().map(|v| v.unwrap()).sum::<f64>() / 2000.0;
        assert!((mean - 110.0).abs() < 10.0, "{mean}");
        assert!(rt[0].iter().all(|v| v.is_none()));
    }

    #[test]
    fn persist_round_trip() {
        let r = record(&[3, 17, 250], &[0.9, 1.0 / 3.0, 1e-7], 300);
        let text = r.to_jsonl();
        assert_eq!(RunRecord::from_jsonl(&text).unwrap(), r);
        let mut no_ref = r.clone();
        no_ref.reference = None;
        for e in &mut no_ref.trace {
            e.hv_diff = None;
        }
        assert_eq!(RunRecord::from_jsonl(&no_ref.to_jsonl()).unwrap(), no_ref);
    }

    #[test]
    fn truncated_and_malformed_files() {
        let r = record(&[3, 17, 250], &[0.9, 0.5, 0.1], 300);
        let text = r.to_jsonl();
        let lines: Vec<&str> = text.lines().collect();
        let truncated = lines[..lines.len() - 1].join("\n");
        assert!(matches!(RunRecord::from_jsonl(&truncated), Err(Error::Parse { .. })));
        let mut bad = lines.clone();
        bad[2] = "{\"evals\": 3, \"hv\": oops}";
        match RunRecord::from_jsonl(&bad.join("\n")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(RunRecord::from_jsonl("").is_err());
    }

    #[test]
    fn unknown_fields_are_ignored() {
        let r = record(&[3], &[0.9], 30);
        let text = r.to_jsonl().replace("\"trace_len\"", "\"comment\":\"x\",\"trace_len\"").replace("\"hv_diff\"", "\"extra\":[1,2],\"hv_diff\"");
        assert_eq!(RunRecord::from_jsonl(&text).unwrap(), r);
    }

    #[test]
    fn seventeen_significant_digits() {
        let r = record(&[3], &[1.0 / 3.0], 30);
        let line = r.to_jsonl().lines().nth(2).unwrap().to_string();
        assert!(line.contains("1.3333333333333335e0"), "{line}");
    }

    fn arb_record() -> impl Strategy<Value = RunRecord> {
        prop::collection::vec((1u64..50, 0.0f64..0.3), 0..12).prop_map(|steps| {
            let mut e = 0;
            let mut d = 1.2;
            let mut evals = Vec::new();
            let mut diffs = Vec::new();
            for (de, dd) in steps {
                e += de;
                d -= dd;
                evals.push(e);
                diffs.push(d);
            }
            record(&evals, &diffs, e + 10)
        })
    }

    proptest! {
        #[test]
        fn fraction_is_monotone(r in arb_record(), a in 0u64..600, b in 0u64..600) {
            let (lo, hi) = (a.min(b), a.max(b));
            prop_assert!(fraction_reached(&r, lo) <= fraction_reached(&r, hi));
        }

        #[test]
        fn ecdf_is_monotone_and_bounded(rs in prop::collection::vec(arb_record(), 1..4), seed in 0u64..100) {
            let c = ecdf(&rs, &budget_grid(), seed).unwrap();
            prop_assert!(c.iter().all(|p| (0.0..=1.0).contains(&p.1)));
            prop_assert!(c.windows(2).all(|w| w[0].1 <= w[1].1));
        }

        #[test]
        fn art_is_nested(rs in prop::collection::vec(arb_record(), 1..5), i in 0usize..58, j in 0usize..58) {
            let t = make_targets(2.0).unwrap();
            let (hard, easy) = (t.targets[i.min(j)], t.targets[i.max(j)]);
            let a_easy = art(&rs, easy).unwrap();
            let a_hard = art(&rs, hard).unwrap();
            if a_easy.is_finite() && a_hard.is_finite() {
                prop_assert!(a_easy <= a_hard);
            }
        }
    }
}
