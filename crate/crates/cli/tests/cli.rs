use std::path::Path;

use kgcache::data::generate_synthetic;
use kgcache::eval::{filtered_ranks, MetricsReport};
use kgcache::scoring::read_checkpoint;
use kgcache_cli::run;

fn kgcache(args: &str) -> i32 {
    run(std::iter::once("kgcache".to_string()).chain(args.split_whitespace().map(String::from)))
}

fn small_train(out: &Path, extra: &str) -> i32 {
    kgcache(&format!(
        "train --synthetic 50,3,500 --dim 8 --epochs 4 --eval-every 2 --batch-size 64 --lr 0.01 --n1 10 --n2 10 --out {} {extra}",
        out.display()
    ))
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn train_writes_log_checkpoints_and_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a");
    assert_eq!(
        small_train(&out, "--save-epochs 1 --snapshot-epochs 3 --track 2"),
        0
    );
    for f in [
        "final.bin",
        "final.bin.meta",
        "best.bin",
        "epoch_1.bin",
        "summary.json",
        "metrics_test.json",
        "resolved_train.txt",
        "cache_epoch3.tsv",
        "variance.tsv",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
    let log = read(&out.join("train_log.jsonl"));
    let lines: Vec<serde_json::Value> = log
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 4);
    for (i, v) in lines.iter().enumerate() {
        assert_eq!(v["epoch"], i);
        assert!(v["loss"].is_f64() && v["grad_norm_mean"].is_f64() && v["seconds"].is_f64());
        assert_eq!(v.get("mrr_valid").is_some(), i % 2 == 1);
    }
    // header plus 2 tracked triplets per epoch
    assert_eq!(read(&out.join("variance.tsv")).lines().count(), 1 + 2 * 4);
}

#[test]
fn eval_matches_the_library_on_the_same_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a");
    assert_eq!(small_train(&out, ""), 0);
    assert_eq!(
        kgcache(&format!(
            "eval --checkpoint {} --split test --ranks",
            out.display()
        )),
        0
    );
    let got: MetricsReport = serde_json::from_str(&read(&out.join("metrics_test.json"))).unwrap();
    let kg = generate_synthetic(50, 3, 500, 1).unwrap();
    let (store, _) = read_checkpoint(&out.join("best.bin")).unwrap();
    assert_eq!(
        got,
        MetricsReport::from_ranks(&filtered_ranks(&kg, &store, &kg.test))
    );
    assert_eq!(
        read(&out.join("ranks_test.tsv")).lines().count(),
        1 + kg.test.len()
    );
}

#[test]
fn replay_from_the_snapshot_is_bitwise_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(small_train(&a, "--sampler nscaching --alpha2 1"), 0);
    assert_eq!(
        kgcache(&format!(
            "train --config {} --out {}",
            a.join("resolved_train.txt").display(),
            b.display()
        )),
        0
    );
    for f in ["final.bin", "best.bin", "metrics_test.json"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    let strip = |s: String| {
        s.lines()
            .filter(|l| !l.starts_with("out"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(
        strip(read(&a.join("resolved_train.txt"))),
        strip(read(&b.join("resolved_train.txt")))
    );
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.txt");
    std::fs::write(
        &cfg,
        "# base\nsynthetic = 40,2,300\ndim = 6\nepochs = 2\nbatch-size = 64\n",
    )
    .unwrap();
    let out = dir.path().join("a");
    assert_eq!(
        kgcache(&format!(
            "train --config {} --dim 4 --out {}",
            cfg.display(),
            out.display()
        )),
        0
    );
    let snap = read(&out.join("resolved_train.txt"));
    assert!(
        snap.contains("dim = 4")
            && snap.contains("epochs = 2")
            && snap.contains("synthetic = 40,2,300"),
        "{snap}"
    );
    assert_eq!(read(&out.join("train_log.jsonl")).lines().count(), 2);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let o = out.display();
    assert_eq!(kgcache("--help"), 0);
    assert_eq!(kgcache("train --help"), 0);
    assert_eq!(kgcache("frobnicate"), 1);
    assert_eq!(
        kgcache(&format!(
            "train --synthetic 20,2,50 --no-such-flag --out {o}"
        )),
        1
    );
    assert_eq!(
        kgcache(&format!(
            "train --synthetic 20,2,50 --loss logistic --gamma 1 --out {o}"
        )),
        1
    );
    assert_eq!(
        kgcache(&format!("train --synthetic 20,2,50 --dim 0 --out {o}")),
        1
    );
    assert_eq!(
        kgcache(&format!("train --synthetic 20,2,50 --data d --out {o}")),
        1
    );
    assert_eq!(kgcache(&format!("train --synthetic 2,1,50 --out {o}")), 1);
    assert_eq!(kgcache(&format!("train --out {o}")), 1);
    assert_eq!(
        kgcache(&format!(
            "train --data {} --out {o}",
            dir.path().join("missing").display()
        )),
        2
    );
    assert_eq!(
        kgcache(&format!(
            "eval --checkpoint {}",
            dir.path().join("none.bin").display()
        )),
        2
    );
    let bad = dir.path().join("bad.bin");
    std::fs::write(&bad, b"not a checkpoint").unwrap();
    assert_eq!(
        kgcache(&format!(
            "eval --checkpoint {} --synthetic 20,2,50",
            bad.display()
        )),
        2
    );
}

#[test]
fn dataset_names_resolve_under_the_data_directory() {
    let dir = tempfile::tempdir().unwrap();
    let kg = generate_synthetic(30, 2, 200, 4).unwrap();
    std::fs::create_dir(dir.path().join("toy")).unwrap();
    kg.write_splits(&dir.path().join("toy")).unwrap();
    std::env::set_var("KGCACHE_DATA_DIR", dir.path());
    let out = dir.path().join("run");
    assert_eq!(
        kgcache(&format!(
            "train --data toy --dim 4 --epochs 1 --out {}",
            out.display()
        )),
        0
    );
    assert_eq!(
        kgcache(&format!("classify --checkpoint {}", out.display())),
        0
    );
    let v: serde_json::Value =
        serde_json::from_str(&read(&out.join("classification.json"))).unwrap();
    assert_eq!(v["n_test"], 2 * kg.test.len());
}

#[test]
fn search_history_has_one_line_per_trial_and_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let base = format!("search --synthetic 40,2,300 --dim 4 --epochs 2 --eval-every 2 --batch-size 64 --algo random --out {}", out.display());
    assert_eq!(kgcache(&format!("{base} --budget 3")), 0);
    let first = read(&out.join("history.jsonl"));
    assert_eq!(first.lines().count(), 3);
    assert!(out.join("incumbent.json").exists());
    assert_eq!(kgcache(&format!("{base} --budget 5")), 1);
    assert_eq!(kgcache(&format!("{base} --budget 5 --resume")), 0);
    let second = read(&out.join("history.jsonl"));
    assert_eq!(second.lines().count(), 5);
    assert!(second.starts_with(&first));
    let trials: Vec<u64> = second
        .lines()
        .map(|l| {
            serde_json::from_str::<serde_json::Value>(l).unwrap()["trial"]
                .as_u64()
                .unwrap()
        })
        .collect();
    assert_eq!(trials, vec![0, 1, 2, 3, 4]);
}

fn write_graph(dir: &Path) -> (String, String) {
    let n = 24;
    let mut edges = String::new();
    let mut labels = String::new();
    for i in 0..n {
        edges.push_str(&format!("v{i}\tv{}\n", (i + 1) % n));
        edges.push_str(&format!("v{i}\tv{}\n", (i + 5) % n));
        labels.push_str(&format!("v{i}\tc{}\n", i / 8));
    }
    let (e, l) = (dir.join("edges.tsv"), dir.join("labels.tsv"));
    std::fs::write(&e, edges).unwrap();
    std::fs::write(&l, labels).unwrap();
    (e.display().to_string(), l.display().to_string())
}

#[test]
fn walk_then_embed_from_the_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let (e, l) = write_graph(dir.path());
    let w = dir.path().join("w");
    assert_eq!(
        kgcache(&format!(
            "walk --edges {e} --labels {l} --walks-per-node 3 --walk-length 6 --out {}",
            w.display()
        )),
        0
    );
    let corpus = read(&w.join("corpus.txt"));
    assert_eq!(corpus.lines().count(), 3 * 24);
    assert!(corpus.lines().all(|x| x.split(' ').count() == 6));
    let w2 = dir.path().join("w2");
    assert_eq!(
        kgcache(&format!(
            "walk --config {} --out {}",
            w.join("resolved_walk.txt").display(),
            w2.display()
        )),
        0
    );
    assert_eq!(corpus, read(&w2.join("corpus.txt")));

    let g = dir.path().join("g");
    let args = format!(
        "embed-graph --edges {e} --labels {l} --corpus {} --dim 8 --window 2 --epochs 2 --n1 5 --n2 5 --splits 2 --train-fraction 0.5,0.7 --out {}",
        w.join("corpus.txt").display(),
        g.display()
    );
    assert_eq!(kgcache(&args), 0);
    assert_eq!(read(&g.join("embeddings.txt")).lines().count(), 24);
    assert_eq!(read(&g.join("skipgram_log.jsonl")).lines().count(), 2);
    let reports: Vec<serde_json::Value> = read(&g.join("node_classification.jsonl"))
        .lines()
        .map(|x| serde_json::from_str(x).unwrap())
        .collect();
    assert_eq!(reports.len(), 2);
    assert_eq!(reports[1]["train_fraction"], 0.7);
}

#[test]
fn analyze_emits_a_ccdf_per_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a");
    assert_eq!(small_train(&out, "--save-epochs 0,3"), 0);
    assert_eq!(
        kgcache(&format!(
            "analyze --run {} --epochs 0,3 --triplets 0,2",
            out.display()
        )),
        0
    );
    for label in ["epoch0", "epoch3"] {
        let tsv = read(&out.join(format!("grad_ccdf_{label}.tsv")));
        let rows: Vec<Vec<&str>> = tsv
            .lines()
            .skip(1)
            .map(|l| l.split('\t').collect())
            .collect();
        for idx in ["0", "2"] {
            let mine: Vec<&Vec<&str>> = rows.iter().filter(|r| r[0] == idx).collect();
            assert_eq!((mine[0][4], mine[0][5]), ("0", "1"));
            let p: Vec<f64> = mine.iter().map(|r| r[5].parse().unwrap()).collect();
            assert!(p.windows(2).all(|w| w[1] <= w[0]));
        }
    }
    assert_eq!(
        kgcache(&format!(
            "analyze --run {} --epochs 0 --triplets 100000",
            out.display()
        )),
        1
    );
}
