use std::path::Path;
use std::process::{Command, Output};

use hmocma::cli::load_records;
use hmocma::problems::{make_problem, read_reference_file, reference_data, reference_path, ProblemKey};
use hmocma::pareto::hv2d;

fn hmocma(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hmocma"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn binary")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn usage_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&hmocma(&["frobnicate"], tmp.path())), 2);
    assert_eq!(code(&hmocma(&["run", "--problem", "56"], tmp.path())), 2);
    assert_eq!(code(&hmocma(&["run", "--problem", "1", "--suite", "bbob"], tmp.path())), 2);
    assert_eq!(code(&hmocma(&["run", "--problem", "1", "--algo", "nope"], tmp.path())), 2);
    assert_eq!(code(&hmocma(&["run", "--config", "missing.cfg"], tmp.path())), 2);
    assert_eq!(code(&hmocma(&["--help"], tmp.path())), 0);
}

#[test]
fn report_on_empty_dir_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::create_dir(tmp.path().join("empty")).unwrap();
    let o = hmocma(&["report", "--records", "empty"], tmp.path());
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn make_reference_then_rerun_is_monotone() {
    let tmp = tempfile::tempdir().unwrap();
    let refs = tmp.path().join("nested/refs");
    let sel = ["--problem", "1,2", "--dim", "2", "--instances", "1", "--budget-mult", "3000", "--ref-dir"];
    let o = hmocma(&[&["make-reference", "--seeds", "2"][..], &sel, &[refs.to_str().unwrap()]].concat(), tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    // bi-sphere reference agrees with the closed form
    let key = ProblemKey { k: 1, n: 2, instance: 1 };
    let p = make_problem(1, 2, 1).unwrap();
    let exact = reference_data(&p, None).unwrap().ref_hv;
    let (rp, front) = read_reference_file(&reference_path(&refs, &key)).unwrap();
    let got = hv2d(&front.iter().map(|e| e.value).collect::<Vec<_>>(), &rp);
    assert!(got <= exact * (1.0 + 1e-12));
    assert!((exact - got) / exact <= 1e-4, "{got} vs {exact}");

    let key2 = ProblemKey { k: 2, n: 2, instance: 1 };
    let hv_of = |path: std::path::PathBuf| {
        let (rp, front) = read_reference_file(&path).unwrap();
        hv2d(&front.iter().map(|e| e.value).collect::<Vec<_>>(), &rp)
    };
    let before = hv_of(reference_path(&refs, &key2));
    let o = hmocma(&[&["make-reference", "--seeds", "4"][..], &sel, &[refs.to_str().unwrap()]].concat(), tmp.path());
    assert_eq!(code(&o), 0);
    assert!(hv_of(reference_path(&refs, &key2)) >= before);
}

#[test]
fn run_and_report() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let o = hmocma(
        &["run", "--problem", "1,3", "--dim", "2", "--instances", "1", "--seeds", "2", "--budget-mult", "200", "--out", "res"],
        d,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    // k=3 has no reference yet: record written without hv differences
    let recs = load_records(&d.join("res")).unwrap();
    assert_eq!(recs.len(), 4);
    assert!(recs.iter().all(|r| r.total_evals == 400));
    assert_eq!(recs.iter().filter(|r| r.reference.is_none()).count(), 2);
    let summary = std::fs::read_to_string(d.join("res/summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 5);

    let o = hmocma(&["report", "--records", "res", "--out", "rep"], d);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let art = std::fs::read_to_string(d.join("rep/art.csv")).unwrap();
    assert!(art.lines().next().unwrap().starts_with("algo,k,n,target_factor"));
    assert!(d.join("rep/ecdf/all_n2.tsv").is_file());
    assert!(d.join("rep/ecdf/f01_n2.tsv").is_file());
}

#[test]
fn config_file_is_overridden_by_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(d.join("run.cfg"), "# defaults\nproblem = 1\ndim = 2\ninstances = 1\nseeds = 1\nbudget-mult = 50\nout = res\n").unwrap();
    let o = hmocma(&["run", "--config", "run.cfg", "--budget-mult", "30"], d);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let recs = load_records(&d.join("res")).unwrap();
    assert_eq!(recs.len(), 1);
    assert_eq!(recs[0].total_evals, 60);
}
