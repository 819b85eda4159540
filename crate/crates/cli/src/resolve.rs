use std::collections::HashMap;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::ArgMatches;
use kgcache::config::{parse_kv, to_kv_text};
use kgcache::data::{generate_synthetic, load_dataset, ColumnOrder, DatasetPaths, KnowledgeGraph};
use kgcache::fsio;
use serde::Serialize;

use crate::args::{DataArgs, DATA_DIR_ENV};
use crate::Failure;

const RESERVED: [&str; 3] = ["config", "help", "version"];

fn long_flags(sub: &clap::Command) -> Vec<String> {
    sub.get_arguments()
        .filter_map(|a| a.get_long())
        .filter(|l| !RESERVED.contains(l))
        .map(str::to_string)
        .collect()
}

fn config_path(args: &[String]) -> Result<Option<String>, Failure> {
    for (i, a) in args.iter().enumerate() {
        if let Some(v) = a.strip_prefix("--config=") {
            return Ok(Some(v.to_string()));
        }
        if a == "--config" {
            return match args.get(i + 1) {
                Some(v) => Ok(Some(v.clone())),
                None => Err(Failure::Usage("--config needs a file".into())),
            };
        }
    }
    Ok(None)
}

fn given_on_command_line(args: &[String], long: &str) -> bool {
    let flag = format!("--{long}");
    args.iter()
        .any(|a| a == &flag || a.strip_prefix(&flag).is_some_and(|r| r.starts_with('=')))
}

/// Splice the `--config` file's entries into `argv` as `--key=value` flags,
/// skipping keys that are also given on the command line.
pub fn inject_config(argv: Vec<String>, root: &clap::Command) -> Result<Vec<String>, Failure> {
    let Some(sub) = argv.get(1).and_then(|name| root.find_subcommand(name)) else {
        return Ok(argv);
    };
    let Some(path) = config_path(&argv[2..])? else {
        return Ok(argv);
    };
    let text = fsio::read_to_string(Path::new(&path))?;
    let pairs = parse_kv(&text, &path)?;
    let known = long_flags(sub);
    let mut injected = Vec::new();
    for (k, v) in pairs {
        if !known.contains(&k) {
            return Err(Failure::Usage(format!(
                "{path}: unknown key {k:?} for `{}`",
                sub.get_name()
            )));
        }
        if !given_on_command_line(&argv[2..], &k) {
            injected.push(format!("--{k}={v}"));
        }
    }
    let mut out = argv[..2].to_vec();
    out.extend(injected);
    out.extend_from_slice(&argv[2..]);
    Ok(out)
}

/// Every effective flag value of a parsed subcommand, defaults included.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub subcommand: String,
    pub pairs: Vec<(String, String)>,
}

impl Snapshot {
    pub fn capture(root: &clap::Command, name: &str, m: &ArgMatches) -> Snapshot {
        let mut pairs = Vec::new();
        if let Some(sub) = root.find_subcommand(name) {
            for arg in sub.get_arguments() {
                let Some(long) = arg.get_long() else { continue };
                if RESERVED.contains(&long) {
                    continue;
                }
                if let Ok(Some(raw)) = m.try_get_raw(arg.get_id().as_str()) {
                    let vals: Vec<String> = raw.map(|v| v.to_string_lossy().into_owned()).collect();
                    if !vals.is_empty() {
                        pairs.push((long.to_string(), vals.join(",")));
                    }
                }
            }
        }
        Snapshot {
            subcommand: name.to_string(),
            pairs,
        }
    }

    pub fn file_name(&self) -> String {
        format!("resolved_{}.txt", self.subcommand)
    }

    pub fn to_text(&self) -> String {
        format!("# kgcache {}\n{}", self.subcommand, to_kv_text(&self.pairs))
    }

    pub fn write(&self, dir: &Path) -> kgcache::Result<()> {
        fsio::write_atomic_str(&dir.join(self.file_name()), &self.to_text())
    }
}

/// Flag values of the training run that produced a checkpoint directory.
#[derive(Debug, Clone, Default)]
pub struct RunDefaults(HashMap<String, String>);

impl RunDefaults {
    pub fn load(run_dir: &Path) -> Result<RunDefaults, Failure> {
        let path = run_dir.join("resolved_train.txt");
        if !path.exists() {
            return Ok(RunDefaults::default());
        }
        let text = fsio::read_to_string(&path)?;
        Ok(RunDefaults(
            parse_kv(&text, &path.display().to_string())?
                .into_iter()
                .collect(),
        ))
    }

    pub fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, Failure> {
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Failure::Usage(format!("run config: bad value {v:?} for {key}"))),
        }
    }

    /// Fill the dataset flags from the run when none were given.
    pub fn data(&self, given: &DataArgs) -> Result<DataArgs, Failure> {
        if given.data.is_some() || given.synthetic.is_some() {
            return Ok(given.clone());
        }
        Ok(DataArgs {
            data: self.get("data")?,
            synthetic: self.get("synthetic")?,
            synthetic_seed: given.synthetic_seed.or(self.get("synthetic-seed")?),
            order: given.order.or(self.get("order")?),
        })
    }
}

pub fn dataset_dir(name: &str) -> Result<PathBuf, Failure> {
    let direct = PathBuf::from(name);
    if direct.is_dir() {
        return Ok(direct);
    }
    if let Some(base) = std::env::var_os(DATA_DIR_ENV) {
        let p = Path::new(&base).join(name);
        if p.is_dir() {
            return Ok(p);
        }
    }
    Err(Failure::Runtime(anyhow::anyhow!(
        "dataset {name:?} not found (neither a directory nor under ${DATA_DIR_ENV})"
    )))
}

fn parse_synthetic(spec: &str) -> Result<(usize, usize, usize), Failure> {
    let bad = || Failure::Usage(format!("--synthetic expects E,R,N, got {spec:?}"));
    let v: Vec<usize> = spec
        .split(',')
        .map(|s| s.trim().parse())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    match v[..] {
        [e, r, n] => Ok((e, r, n)),
        _ => Err(bad()),
    }
}

impl DataArgs {
    pub fn load(&self) -> Result<KnowledgeGraph, Failure> {
        if let Some(spec) = &self.synthetic {
            let (e, r, n) = parse_synthetic(spec)?;
            return Ok(generate_synthetic(
                e,
                r,
                n,
                self.synthetic_seed.unwrap_or(1),
            )?);
        }
        let Some(name) = &self.data else {
            return Err(Failure::Usage(
                "one of --data or --synthetic is required".into(),
            ));
        };
        let dir = dataset_dir(name)?;
        let mut paths = DatasetPaths::in_dir(&dir);
        let (e, r) = (dir.join("entity2id.txt"), dir.join("relation2id.txt"));
        if e.exists() && r.exists() {
            paths.entity_dict = Some(e);
            paths.relation_dict = Some(r);
        }
        let kg = load_dataset(&paths, self.order.unwrap_or(ColumnOrder::Hrt))?;
        log::info!(
            "{}: {} entities, {} relations, {}/{}/{} triplets",
            dir.display(),
            kg.entity_count(),
            kg.relation_count(),
            kg.train.len(),
            kg.valid.len(),
            kg.test.len()
        );
        Ok(kg)
    }
}

/// A checkpoint file and the run directory it belongs to.
pub fn checkpoint_file(path: &Path) -> Result<(PathBuf, PathBuf), Failure> {
    if !path.exists() {
        return Err(Failure::Runtime(anyhow::anyhow!(
            "{}: no such checkpoint",
            path.display()
        )));
    }
    if path.is_dir() {
        for name in ["best.bin", "final.bin"] {
            let f = path.join(name);
            if f.exists() {
                return Ok((f, path.to_path_buf()));
            }
        }
        return Err(Failure::Runtime(anyhow::anyhow!(
            "{}: no best.bin or final.bin",
            path.display()
        )));
    }
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."))
        .to_path_buf();
    Ok((path.to_path_buf(), dir))
}

pub fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> kgcache::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fsio::write_atomic_str(path, &text)
}

/// A JSON-lines file rewritten atomically after every appended record.
pub struct JsonLines {
    path: PathBuf,
    text: String,
}

impl JsonLines {
    pub fn new(path: PathBuf) -> Self {
        JsonLines {
            path,
            text: String::new(),
        }
    }

    pub fn push<T: Serialize>(&mut self, record: &T) -> kgcache::Result<()> {
        self.text.push_str(&serde_json::to_string(record)?);
        self.text.push('\n');
        fsio::write_atomic_str(&self.path, &self.text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    fn argv(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn command_line_flags_win_over_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.txt");
        std::fs::write(&cfg, "dim = 8\nepochs = 3\n").unwrap();
        let root = crate::args::Cli::command();
        let out = inject_config(
            argv(&format!("kgcache train --dim 4 --config {}", cfg.display())),
            &root,
        )
        .unwrap();
        assert!(out.contains(&"--epochs=3".to_string()));
        assert!(!out.iter().any(|a| a == "--dim=8"));
    }

    #[test]
    fn unknown_file_keys_are_usage_errors() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.txt");
        std::fs::write(&cfg, "dimension = 8\n").unwrap();
        let root = crate::args::Cli::command();
        let r = inject_config(
            argv(&format!("kgcache train --config={}", cfg.display())),
            &root,
        );
        assert!(matches!(r, Err(Failure::Usage(_))));
    }

    #[test]
    fn prefixes_are_not_mistaken_for_flags() {
        assert!(given_on_command_line(&argv("--n1=3"), "n1"));
        assert!(!given_on_command_line(&argv("--n1-choices=3"), "n1"));
    }

    #[test]
    fn synthetic_spec() {
        assert_eq!(parse_synthetic("10, 2,30").unwrap(), (10, 2, 30));
        assert!(parse_synthetic("10,2").is_err());
    }
}
