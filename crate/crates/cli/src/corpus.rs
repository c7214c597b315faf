use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use trilogic_core::fixpoint::EvalConfig;
use trilogic_core::syntax::{load, parse_literals, Atom, Literal};
use trilogic_core::wfs::{ground, with_answer_rule};

use crate::oracle;
use crate::run::{run, Models, RunConfig, RunOutput, Semantics};

/// `meta.toml` of a fixture.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Meta {
    #[serde(default)]
    pub semantics: Option<String>,
    #[serde(default)]
    pub models: Option<String>,
    #[serde(default)]
    pub demand: Option<bool>,
    #[serde(default)]
    pub max_term_depth: Option<u32>,
    /// Expected exit status, 0 when absent.
    #[serde(default)]
    pub exit: Option<i32>,
    /// One of `reachability`, `rbac`, `andersen`, `queens`, `stable`.
    #[serde(default)]
    pub oracle: Option<String>,
    /// Edge and closure predicates for the reachability oracle.
    #[serde(default)]
    pub edge: Option<String>,
    #[serde(default)]
    pub closure: Option<String>,
    /// Board size for the queens oracle.
    #[serde(default)]
    pub n: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: String,
    pub dir: PathBuf,
    pub meta: Meta,
    pub query: Option<String>,
    pub expected: String,
}

impl Fixture {
    pub fn load(dir: &Path) -> Result<Fixture, String> {
        let name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let read = |file: &str| std::fs::read_to_string(dir.join(file)).map_err(|e| format!("{file}: {e}"));
        let meta: Meta = match dir.join("meta.toml").exists() {
            true => toml::from_str(&read("meta.toml")?).map_err(|e| format!("meta.toml: {e}"))?,
            false => Meta::default(),
        };
        if !dir.join("program.lp").exists() {
            return Err("program.lp: missing".into());
        }
        let query = match dir.join("query.txt").exists() {
            true => Some(read("query.txt")?.trim().to_string()).filter(|q| !q.is_empty()),
            false => None,
        };
        Ok(Fixture {
            name,
            dir: dir.to_path_buf(),
            meta,
            query,
            expected: read("expected.txt")?,
        })
    }

    pub fn program_path(&self) -> PathBuf {
        self.dir.join("program.lp")
    }

    pub fn config(&self) -> Result<RunConfig, String> {
        let mut cfg = RunConfig::new(self.program_path());
        if let Some(s) = &self.meta.semantics {
            cfg.semantics = s.parse()?;
        }
        if let Some(m) = &self.meta.models {
            cfg.models = m.parse()?;
        }
        if let Some(d) = self.meta.demand {
            cfg.demand = d;
        }
        if let Some(d) = self.meta.max_term_depth {
            cfg.max_term_depth = d;
        }
        cfg.query = self.query.clone();
        Ok(cfg)
    }

    /// Runs the fixture twice and checks determinism, exit status, golden
    /// output and the oracle, if one is named.
    pub fn check(&self) -> Result<(), String> {
        let cfg = self.config()?;
        let first = run(&cfg);
        let second = run(&cfg);
        if first != second {
            return Err("output differs between two runs".into());
        }
        let exit = self.meta.exit.unwrap_or(0);
        if first.code != exit {
            return Err(format!("exit {} (expected {exit}): {}", first.code, first.stderr.trim()));
        }
        let shown = if exit == 0 { &first.stdout } else { &first.stderr };
        if *shown != self.expected {
            return Err(format!("output differs from expected.txt:\n{shown}"));
        }
        if let Some(name) = &self.meta.oracle {
            self.check_oracle(name, &cfg, &first)?;
        }
        Ok(())
    }

    fn query_atom(&self) -> Result<Atom, String> {
        let q = self.query.as_deref().ok_or("oracle needs a query")?;
        match parse_literals(q).map_err(|e| e.to_string())?.as_slice() {
            [Literal::Pos(a)] => Ok(a.clone()),
            _ => Err("oracle needs a single positive query atom".into()),
        }
    }

    fn check_oracle(&self, name: &str, cfg: &RunConfig, out: &RunOutput) -> Result<(), String> {
        let source = std::fs::read_to_string(self.program_path()).map_err(|e| e.to_string())?;
        let program = load(&source).map_err(|e| e.to_string())?;
        let lines = || out.stdout.lines().filter(|l| *l != "no answers").map(str::to_string).collect::<BTreeSet<_>>();
        let (want, got) = match name {
            "reachability" => {
                let edge = self.meta.edge.as_deref().ok_or("reachability oracle needs `edge`")?;
                let closure = self.meta.closure.as_deref().ok_or("reachability oracle needs `closure`")?;
                (oracle::reachability(&program, edge, closure, &self.query_atom()?), lines())
            }
            "rbac" => (oracle::rbac_check_access(&program, &self.query_atom()?), lines()),
            "andersen" => (oracle::andersen(&program, &self.query_atom()?), lines()),
            "queens" => {
                let n = self.meta.n.ok_or("queens oracle needs `n`")?;
                let got: BTreeSet<BTreeSet<String>> = model_blocks(&out.stdout)
                    .into_iter()
                    .map(|m| m.into_iter().filter(|a| a.starts_with("q(")).collect())
                    .collect();
                return compare(&oracle::queens(n), &got, cfg.models == Models::All);
            }
            "stable" => {
                let program = match &self.query {
                    Some(q) => {
                        let q = parse_literals(q).map_err(|e| e.to_string())?;
                        with_answer_rule(&program, &q).map_err(|e| e.to_string())?.0
                    }
                    None => program,
                };
                let g = ground(&program, &EvalConfig::default()).map_err(|e| e.to_string())?;
                if self.query.is_some() {
                    return Err("stable oracle compares whole models; drop the query".into());
                }
                let got: BTreeSet<BTreeSet<String>> = model_blocks(&out.stdout).into_iter().collect();
                return compare(&oracle::stable_enumeration(&g), &got, cfg.models == Models::All);
            }
            other => return Err(format!("unknown oracle `{other}`")),
        };
        if want != got {
            let missing: Vec<_> = want.difference(&got).take(5).collect();
            let extra: Vec<_> = got.difference(&want).take(5).collect();
            return Err(format!("oracle mismatch: missing {missing:?}, unexpected {extra:?}"));
        }
        Ok(())
    }
}

fn compare(want: &BTreeSet<BTreeSet<String>>, got: &BTreeSet<BTreeSet<String>>, all: bool) -> Result<(), String> {
    let ok = if all { want == got } else { got.is_subset(want) };
    if ok {
        Ok(())
    } else {
        Err(format!("oracle mismatch: {} models expected, {} printed", want.len(), got.len()))
    }
}

/// The atoms of each `model N:` block of text output.
pub fn model_blocks(stdout: &str) -> Vec<BTreeSet<String>> {
    let mut out: Vec<BTreeSet<String>> = Vec::new();
    for line in stdout.lines() {
        if line.starts_with("model ") {
            out.push(BTreeSet::new());
        } else if let (Some(atom), Some(m)) = (line.strip_prefix("  "), out.last_mut()) {
            m.insert(atom.to_string());
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixtureReport {
    pub name: String,
    pub result: Result<(), String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusReport {
    pub fixtures: Vec<FixtureReport>,
}

impl CorpusReport {
    pub fn passed(&self) -> bool {
        self.fixtures.iter().all(|f| f.result.is_ok())
    }
}

impl fmt::Display for CorpusReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.fixtures {
            match &r.result {
                Ok(()) => writeln!(f, "PASS {}", r.name)?,
                Err(e) => writeln!(f, "FAIL {}: {e}", r.name)?,
            }
        }
        let passed = self.fixtures.iter().filter(|r| r.result.is_ok()).count();
        writeln!(f, "{passed}/{} fixtures passed", self.fixtures.len())
    }
}

/// Fixture directories under `dir`, sorted by name.
pub fn fixture_dirs(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    Ok(dirs)
}

/// Checks every fixture under `dir`; a broken fixture is reported and the
/// rest still run.
pub fn run_corpus(dir: &Path) -> std::io::Result<CorpusReport> {
    let mut report = CorpusReport::default();
    for d in fixture_dirs(dir)? {
        let name = d.file_name().unwrap().to_string_lossy().into_owned();
        let result = Fixture::load(&d).and_then(|f| f.check());
        report.fixtures.push(FixtureReport { name, result });
    }
    Ok(report)
}

/// Semantics a fixture declares, for callers that rerun fixtures.
pub fn declared_semantics(f: &Fixture) -> Semantics {
    f.meta.semantics.as_deref().and_then(|s| s.parse().ok()).unwrap_or_default()
}
