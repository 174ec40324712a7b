use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use scatemo::audio::write_wav_pcm16;
use scatemo::Waveform;
use tempfile::TempDir;

/// Small scattering settings so each utterance takes milliseconds.
const SMALL: &str = "scattering.q1 = 4\nscattering.t = 512\nscattering.n = 4096\n";

fn scatemo(args: &[&str]) -> Output {
    scatemo_env(args, &[])
}

fn scatemo_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_scatemo"));
    cmd.args(args).env_remove("SCATFEAT_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// 3 speakers × {lo, hi} × 2 tones; returns (dir, manifest path, config path).
fn corpus(extra_rows: &str) -> (TempDir, PathBuf, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let mut manifest = String::from("utterance_id,path,speaker_id,label\n");
    for (si, spk) in ["s1", "s2", "s3"].iter().enumerate() {
        for (label, f) in [("lo", 300.0), ("hi", 2500.0)] {
            for u in 0..2 {
                let id = format!("{spk}_{label}_{u}");
                let freq = f * (1.0 + 0.02 * (si * 2 + u) as f64);
                let x: Vec<f64> = (0..4800).map(|i| 0.5 * (2.0 * PI * freq * i as f64 / 16000.0).sin()).collect();
                write_wav_pcm16(dir.path().join(format!("{id}.wav")), &Waveform::new(x, 16000).unwrap()).unwrap();
                manifest.push_str(&format!("{id},{id}.wav,{spk},{label}\n"));
            }
        }
    }
    manifest.push_str(extra_rows);
    let m = dir.path().join("manifest.csv");
    fs::write(&m, manifest).unwrap();
    let c = dir.path().join("small.cfg");
    fs::write(&c, SMALL).unwrap();
    (dir, m, c)
}

#[test]
fn extract_mfcc_three_rows_and_deterministic() {
    let (dir, _, cfg) = corpus("");
    let m = dir.path().join("three.csv");
    fs::write(&m, "utterance_id,path,speaker_id,label\nc,s1_lo_0.wav,s1,lo\na,s2_hi_1.wav,s2,hi\nb,s3_lo_1.wav,s3,lo\n").unwrap();
    let out = dir.path().join("f.scatfeat");
    let o = scatemo(&["extract", "--manifest", s(&m), "--feature", "mfcc", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let first = fs::read(&out).unwrap();
    let text = String::from_utf8(first.clone()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("#SCATFEAT v1 kind=mfcc dim=26 config_hash="));
    assert_eq!(lines.len(), 4);
    let ids: Vec<&str> = lines[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(ids, ["a", "b", "c"]);
    assert_eq!(lines[1].split(',').count(), 3 + 26);

    let o = scatemo(&["extract", "--manifest", s(&m), "--feature", "mfcc", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read(&out).unwrap(), first);
}

#[test]
fn missing_wav_is_a_data_error_naming_the_utterance() {
    let (dir, m, cfg) = corpus("ghost_01,nowhere.wav,s1,lo\n");
    let out = dir.path().join("f.scatfeat");
    let o = scatemo(&["extract", "--manifest", s(&m), "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("ghost_01"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(code(&scatemo(&["extract"])), 1);
    assert_eq!(code(&scatemo(&["no-such-command"])), 1);
    assert_eq!(code(&scatemo(&["extract", "--feature", "wavelets", "--out", "x"])), 1);
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "scattering.q9 = 1\n").unwrap();
    let o = scatemo(&["show-config", "--config", s(&bad)]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("scattering.q9"));
    // No manifest given anywhere.
    assert_eq!(code(&scatemo(&["extract", "--out", s(&dir.path().join("f"))])), 1);
    assert_eq!(code(&scatemo(&["inspect-filters", "--q", "0"])), 1);
    assert_eq!(code(&scatemo(&["--help"])), 0);
}

#[test]
fn evaluate_writes_reports_and_enforces_config_hash() {
    let (dir, m, cfg) = corpus("");
    let feats = dir.path().join("f.scatfeat");
    assert_eq!(code(&scatemo(&["extract", "--manifest", s(&m), "--config", s(&cfg), "--out", s(&feats)])), 0);
    let grid = dir.path().join("grid.cfg");
    fs::write(&grid, "c = 1,10\ngamma = 1\n").unwrap();
    let reports = dir.path().join("reports");
    let o = scatemo(&[
        "evaluate", "--features", s(&feats), "--grid", s(&grid), "--config", s(&cfg), "--report-dir", s(&reports),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(reports.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["folds"].as_array().unwrap().len(), 3);
    let fold_uar: f64 = report["folds"].as_array().unwrap().iter().map(|f| f["uar"].as_f64().unwrap()).sum::<f64>() / 3.0;
    assert!((report["mean_uar"].as_f64().unwrap() - fold_uar).abs() < 1e-12);
    assert_eq!(report["grid"]["c"], serde_json::json!([1.0, 10.0]));
    let header = fs::read_to_string(&feats).unwrap().lines().next().unwrap().to_owned();
    assert!(header.ends_with(report["config_hash"].as_str().unwrap()));
    let summary = fs::read_to_string(reports.join("summary.csv")).unwrap();
    assert!(summary.starts_with("test_speaker,valid_speaker,best_c,best_gamma,valid_uar,accuracy,uar\n"));
    assert!(summary.lines().last().unwrap().starts_with("mean,"));
    assert!(reports.join("confusion.txt").exists());

    // A config that would have produced different features is refused.
    let other = dir.path().join("other.cfg");
    fs::write(&other, format!("{SMALL}scattering.q2 = 2\n")).unwrap();
    let o = scatemo(&["evaluate", "--features", s(&feats), "--config", s(&other), "--report-dir", s(&reports)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("config hash mismatch"), "{}", stderr(&o));
}

#[test]
fn train_predict_round_trip() {
    let (dir, m, cfg) = corpus("");
    let feats = dir.path().join("f.scatfeat");
    assert_eq!(code(&scatemo(&["extract", "--manifest", s(&m), "--config", s(&cfg), "--out", s(&feats)])), 0);
    let model = dir.path().join("model.json");
    let o = scatemo(&["train", "--features", s(&feats), "--c", "10", "--model", s(&model)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let preds = dir.path().join("pred.csv");
    let o = scatemo(&["predict", "--model", s(&model), "--features", s(&feats), "--out", s(&preds)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(&preds).unwrap();
    assert_eq!(text.lines().next().unwrap(), "utterance_id,label,predicted");
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[1], f[2], "{line}");
    }
    assert_eq!(text.lines().count(), 13);

    // Features from other settings do not fit the model.
    let mfcc = dir.path().join("m.scatfeat");
    let o = scatemo(&["extract", "--manifest", s(&m), "--feature", "mfcc", "--config", s(&cfg), "--out", s(&mfcc)]);
    assert_eq!(code(&o), 0);
    let o = scatemo(&["predict", "--model", s(&model), "--features", s(&mfcc), "--out", s(&preds)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("config hash mismatch"));

    assert_eq!(code(&scatemo(&["train", "--features", s(&feats), "--c", "-1", "--model", s(&model)])), 1);
}

#[test]
fn iteration_cap_exits_3() {
    let (dir, m, cfg) = corpus("");
    let feats = dir.path().join("f.scatfeat");
    assert_eq!(code(&scatemo(&["extract", "--manifest", s(&m), "--config", s(&cfg), "--out", s(&feats)])), 0);
    let model = dir.path().join("model.json");
    let o = scatemo(&["train", "--features", s(&feats), "--max-iter", "1", "--model", s(&model)]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(model.exists());
}

#[test]
fn sweep_writes_one_row_per_cell_and_caches() {
    let (dir, m, cfg) = corpus("");
    let reports = dir.path().join("sweep");
    let args = [
        "sweep", "--manifest", s(&m), "--config", s(&cfg), "--q", "2,4", "--t", "256,512", "--report-dir", s(&reports),
    ];
    let o = scatemo(&args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(reports.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "q,t,mean_accuracy,mean_uar");
    let cells: Vec<String> = lines[1..].iter().map(|l| l.split(',').take(2).collect::<Vec<_>>().join(",")).collect();
    assert_eq!(cells, ["2,256", "2,512", "4,256", "4,512"]);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(reports.join("sweep.json")).unwrap()).unwrap();
    let hashes: Vec<&str> = json.as_array().unwrap().iter().map(|r| r["config_hash"].as_str().unwrap()).collect();
    assert_eq!(hashes.len(), 4);
    assert!(hashes.windows(2).all(|w| w[0] != w[1]));
    let cached = fs::read_dir(reports.join("cache")).unwrap().count();
    assert_eq!(cached, 4);
    assert!(reports.join("q4_t512").join("report.json").exists());

    let o = scatemo(&args);
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read_to_string(reports.join("sweep.csv")).unwrap(), csv);

    let o = scatemo(&["sweep", "--manifest", s(&m), "--feature", "mfcc", "--report-dir", s(&reports)]);
    assert_eq!(code(&o), 1);
}

#[test]
fn inspect_filters_dumps_the_bank() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bank.csv");
    let o = scatemo(&["inspect-filters", "--q", "5", "--t", "16384", "--n", "51000", "--out", s(&out)]);
    assert_eq!(code(&o), 0);
    let csv = fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "index,center_freq_hz,bandwidth_hz,region");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert!(rows.len() > 30);
    assert!(rows.iter().all(|r| r.len() == 4 && (r[3] == "geo" || r[3] == "lin")));
    let centers: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(centers.windows(2).all(|w| w[0] > w[1]));
    let stdout = scatemo(&["inspect-filters", "--q", "5", "--t", "16384", "--n", "51000"]);
    assert_eq!(String::from_utf8(stdout.stdout).unwrap(), csv);
}

#[test]
fn thread_env_var_is_honoured_and_validated() {
    let (dir, m, cfg) = corpus("");
    let a = dir.path().join("a.scatfeat");
    let b = dir.path().join("b.scatfeat");
    let o = scatemo_env(&["extract", "--manifest", s(&m), "--config", s(&cfg), "--out", s(&a)], &[("SCATFEAT_THREADS", "1")]);
    assert_eq!(code(&o), 0);
    let o = scatemo(&["--threads", "3", "extract", "--manifest", s(&m), "--config", s(&cfg), "--out", s(&b)]);
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let o = scatemo_env(&["show-config"], &[("SCATFEAT_THREADS", "many")]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("SCATFEAT_THREADS"));
}

#[test]
fn show_config_output_reads_back_identically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"feature": "f-scatnet", "scattering": {"q1": 8, "log_compress": true, "log_eps": 3.3e-9}, "grid": {"c": [0.5]}}"#).unwrap();
    let o = scatemo(&["show-config", "--config", s(&cfg)]);
    assert_eq!(code(&o), 0);
    let kv = String::from_utf8(o.stdout.clone()).unwrap();
    assert!(kv.contains("scattering.log_eps = 3.3e-9\n"), "{kv}");
    let hash = stderr(&o);
    let again = dir.path().join("run.cfg");
    fs::write(&again, &kv).unwrap();
    let o = scatemo(&["show-config", "--config", s(&again)]);
    assert_eq!(String::from_utf8(o.stdout.clone()).unwrap(), kv);
    assert_eq!(stderr(&o), hash);
    let o = scatemo(&["show-config", "--config", s(&again), "--json"]);
    let json: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(json["scattering"]["q1"], 8);
}
