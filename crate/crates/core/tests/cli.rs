use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use souq::cli::{simulate_cohort, SimulateConfig};
use souq::io::load_predictions;

fn souq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_souq"))
        .args(args)
        .output()
        .expect("run souq")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

/// Data rows of a CSV report with `# ` metadata lines removed.
fn rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn dirac_ensembles_have_zero_epistemic() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(
        dir.path(),
        "p.csv",
        "instance_id,member_id,p_0,p_1,p_2\n\
         a,m0,0.2,0.3,0.5\na,m1,0.2,0.3,0.5\n\
         b,m0,1,0,0\nb,m1,1,0,0\n",
    );
    for family in ["ent", "lent", "var"] {
        let out = dir.path().join(format!("{family}.csv"));
        let res = souq(&["measure", "--family", family, "--input", p(&input), "--out", p(&out)]);
        assert!(res.status.success(), "{}", stderr(&res));
        let table = rows(&out);
        let eu = table[0].iter().position(|c| c == "eu").unwrap();
        for row in &table[1..] {
            assert_eq!(row[eu].parse::<f64>().unwrap(), 0.0, "{family}");
        }
    }
}

#[test]
fn two_member_ensemble_matches_hand_arithmetic() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(
        dir.path(),
        "p.csv",
        "instance_id,member_id,p_0,p_1\nx,a,0.9,0.1\nx,b,0.5,0.5\n",
    );
    let out = dir.path().join("var.csv");
    let res = souq(&["measure", "--family", "var", "--input", p(&input), "--out", p(&out)]);
    assert!(res.status.success(), "{}", stderr(&res));
    let table = rows(&out);
    assert_eq!(
        table[0],
        [
            "instance_id",
            "predicted",
            "tu",
            "au",
            "eu",
            "tu_0",
            "au_0",
            "eu_0",
            "tu_1",
            "au_1",
            "eu_1"
        ]
    );
    let v: Vec<f64> = table[1][2..].iter().map(|s| s.parse().unwrap()).collect();
    assert_eq!(table[1][1], "0");
    // mean 0.7: per label TU 0.21, AU (0.09 + 0.25) / 2 = 0.17, EU 0.04
    let expected = [0.42, 0.34, 0.08, 0.21, 0.17, 0.04, 0.21, 0.17, 0.04];
    for (got, want) in v.iter().zip(expected) {
        assert!((got - want).abs() <= 1e-12, "{got} vs {want}");
    }

    let out = dir.path().join("ent.json");
    let res = souq(&[
        "measure",
        "--family",
        "ent",
        "--input",
        p(&input),
        "--out",
        p(&out),
        "--format",
        "json",
    ]);
    assert!(res.status.success());
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let row = &doc["rows"][0];
    let h = |x: f64| -(x * x.log2() + (1.0 - x) * (1.0 - x).log2());
    assert!((row["tu"].as_f64().unwrap() - h(0.7)).abs() <= 1e-12);
    assert!((row["au"].as_f64().unwrap() - (h(0.9) + 1.0) / 2.0).abs() <= 1e-12);
    assert_eq!(doc["meta"]["family"], "ent");
    let keys: Vec<&String> = row.as_object().unwrap().keys().collect();
    assert_eq!(keys, ["instance_id", "predicted", "tu", "au", "eu"]);
}

#[test]
fn ingestion_errors_exit_one_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.csv");
    let empty = write(dir.path(), "empty.csv", "");
    let res = souq(&["measure", "--family", "var", "--input", p(&empty), "--out", p(&out)]);
    assert_eq!(res.status.code(), Some(1));
    assert!(stderr(&res).contains("empty.csv:1:"), "{}", stderr(&res));

    let bad = write(dir.path(), "bad.csv", "instance_id,member_id,p_0,p_1\nq7,m0,0.6,0.6\n");
    let res = souq(&["measure", "--family", "var", "--input", p(&bad), "--out", p(&out)]);
    assert_eq!(res.status.code(), Some(1));
    let msg = stderr(&res);
    assert!(
        msg.contains("bad.csv:2") && msg.contains("q7") && msg.contains("m0"),
        "{msg}"
    );

    let ragged = write(
        dir.path(),
        "ragged.csv",
        "instance_id,member_id,p_0,p_1\na,m0,0.5,0.5\na,m1,0.5,0.5\nb,m1,0.5,0.5\n",
    );
    let res = souq(&["measure", "--input", p(&ragged), "--out", p(&out)]);
    assert_eq!(res.status.code(), Some(1));
    assert!(stderr(&res).contains("'b'"));
    assert!(!out.exists());

    let res = souq(&["measure", "--family", "nope", "--input", p(&ragged), "--out", p(&out)]);
    assert_eq!(res.status.code(), Some(1));
    let res = souq(&[
        "measure",
        "--input",
        p(&dir.path().join("missing.csv")),
        "--out",
        p(&out),
    ]);
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn arc_reports_missing_labels() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(
        dir.path(),
        "p.csv",
        "instance_id,member_id,p_0,p_1\na,m,0.9,0.1\nb,m,0.4,0.6\n",
    );
    let labels = write(dir.path(), "l.csv", "instance_id,label\na,0\n");
    let out = dir.path().join("arc.csv");
    let res = souq(&["arc", "--input", p(&input), "--labels", p(&labels), "--out", p(&out)]);
    assert_eq!(res.status.code(), Some(1));
    assert!(stderr(&res).contains("'b'"), "{}", stderr(&res));
    let res = souq(&["arc", "--input", p(&input), "--out", p(&out)]);
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn arc_on_separable_data_is_monotone() {
    let dir = tempfile::tempdir().unwrap();
    // Confident members agree and are right; hesitant members disagree and are wrong.
    let mut preds = String::from("instance_id,member_id,p_0,p_1\n");
    let mut labels = String::from("instance_id,label\n");
    for i in 0..40 {
        let wrong = i % 4 == 0;
        let (a, b) = if wrong { (0.9, 0.3) } else { (0.95, 0.93) };
        preds.push_str(&format!("i{i:02},m0,{a},{}\ni{i:02},m1,{b},{}\n", 1.0 - a, 1.0 - b));
        labels.push_str(&format!("i{i:02},{}\n", usize::from(wrong)));
    }
    let input = write(dir.path(), "p.csv", &preds);
    let labels = write(dir.path(), "l.csv", &labels);
    let out = dir.path().join("arc.csv");
    let res = souq(&[
        "arc",
        "--family",
        "var",
        "--input",
        p(&input),
        "--labels",
        p(&labels),
        "--out",
        p(&out),
        "--grid",
        "0:0.5:0.05",
        "--seed",
        "3",
    ]);
    assert!(res.status.success(), "{}", stderr(&res));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("# n: 40\n# family: var\n# seed: 3\n"), "{text}");
    let table = rows(&out);
    assert_eq!(table[0], ["fraction", "tu_var", "au_var", "eu_var"]);
    assert_eq!(table.len(), 12);
    let eu: Vec<f64> = table[1..].iter().map(|r| r[3].parse().unwrap()).collect();
    assert_eq!(eu[0], 0.75);
    assert!(eu.windows(2).all(|w| w[1] >= w[0]), "{eu:?}");
    assert_eq!(*eu.last().unwrap(), 1.0);
}

#[test]
fn simulated_concentration_controls_epistemic() {
    let dir = tempfile::tempdir().unwrap();
    for (alpha0, tight) in [("10000", true), ("3", false)] {
        let preds = dir.path().join(format!("sim{alpha0}.csv"));
        let res = souq(&[
            "simulate",
            "--alpha0",
            alpha0,
            "--classes",
            "4",
            "--instances",
            "200",
            "--members",
            "5",
            "--seed",
            "11",
            "--out",
            p(&preds),
        ]);
        assert!(res.status.success(), "{}", stderr(&res));
        let out = dir.path().join(format!("m{alpha0}.csv"));
        let res = souq(&["measure", "--family", "var", "--input", p(&preds), "--out", p(&out)]);
        assert!(res.status.success());
        let table = rows(&out);
        let eu: Vec<f64> = table[1..].iter().map(|r| r[4].parse().unwrap()).collect();
        assert_eq!(eu.len(), 200);
        if tight {
            assert!(
                eu.iter().all(|&e| e < 1e-3),
                "max {}",
                eu.iter().cloned().fold(0.0, f64::max)
            );
        } else {
            let mean = eu.iter().sum::<f64>() / eu.len() as f64;
            assert!(mean > 3e-2, "mean {mean}");
        }
    }
}

#[test]
fn simulate_round_trips_through_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let preds = dir.path().join("sim.csv");
    let labels = dir.path().join("lab.csv");
    let res = souq(&[
        "simulate",
        "--alpha0",
        "7.5",
        "--classes",
        "6",
        "--instances",
        "50",
        "--members",
        "12",
        "--seed",
        "5",
        "--id-prefix",
        "s",
        "--out",
        p(&preds),
        "--labels",
        p(&labels),
    ]);
    assert!(res.status.success(), "{}", stderr(&res));
    let cfg = SimulateConfig {
        classes: 6,
        instances: 50,
        members: 12,
        alpha0: 7.5,
        id_prefix: "s".into(),
        labels_out: None,
    };
    let memory = simulate_cohort(&cfg, 5).unwrap();
    let loaded = load_predictions(&preds).unwrap();
    assert_eq!(loaded.instances.len(), 50);
    assert_eq!(loaded.members.len(), 12);
    for sim in &memory {
        let q = &loaded.instances[&sim.instance_id];
        for k in 0..6 {
            let direct: f64 = sim.members.iter().map(|(_, a)| a[k]).sum::<f64>() / 12.0;
            assert!((q.mean()[k] - direct).abs() <= 1e-12);
        }
    }
    let label_rows = rows(&labels);
    assert_eq!(label_rows[0], ["instance_id", "label"]);
    assert_eq!(label_rows.len(), 51);
}

#[test]
fn axioms_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("var.json");
    let res = souq(&[
        "axioms",
        "--family",
        "var",
        "--cases",
        "100",
        "--out",
        p(&out),
        "--format",
        "json",
    ]);
    assert_eq!(res.status.code(), Some(0), "{}", stderr(&res));
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let verdicts: Vec<&str> = doc["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["verdict"].as_str().unwrap())
        .collect();
    assert_eq!(verdicts, ["Holds"; 8]);

    let out = dir.path().join("ent.csv");
    let res = souq(&["axioms", "--family", "ent", "--cases", "100", "--out", p(&out)]);
    assert_eq!(res.status.code(), Some(0), "{}", stderr(&res));
    let table = rows(&out);
    let a5 = table.iter().find(|r| r[1] == "A5").unwrap();
    assert_eq!(a5[2], "Violated");
    assert!(fs::read_to_string(&out).unwrap().contains("expected violation"));

    let res = souq(&["axioms", "--cases", "0", "--out", p(&out)]);
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn ood_requires_both_files() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "p.csv", "instance_id,member_id,p_0,p_1\na,m,0.9,0.1\n");
    let three = write(
        dir.path(),
        "q.csv",
        "instance_id,member_id,p_0,p_1,p_2\na,m,0.8,0.1,0.1\n",
    );
    let out = dir.path().join("o.csv");
    let res = souq(&["ood", "--input", p(&input), "--out", p(&out)]);
    assert_eq!(res.status.code(), Some(1));
    let res = souq(&["ood", "--input", p(&input), "--ood", p(&three), "--out", p(&out)]);
    assert_eq!(res.status.code(), Some(1));
    let res = souq(&["ood", "--input", p(&input), "--ood", p(&input), "--out", p(&out)]);
    assert!(res.status.success());
    assert_eq!(rows(&out)[1], ["eu_var", "0.5"]);
}
