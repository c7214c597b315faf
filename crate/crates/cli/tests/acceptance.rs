//! The acceptance suite: one line per criterion, non-zero exit if any fails.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use trilogic_cli::corpus::{fixture_dirs, Fixture};
use trilogic_cli::oracle;
use trilogic_cli::run::{run_source, RunConfig, EXIT_RESOURCE};
use trilogic_core::analysis::{build_graph, classify};
use trilogic_core::fixpoint::{answer_query, evaluate, model, EvalConfig, Mode};
use trilogic_core::stable::{solve, SolveConfig};
use trilogic_core::syntax::{load, parse_literals, Atom, Program};
use trilogic_core::testkit::{self, Shape};
use trilogic_core::wfs::{ground, well_founded, GroundProgram, TruthValue, WfModel};
use trilogic_core::workloads;

type Outcome = Result<String, String>;
/// Moves, expected WFS values, expected stable models.
type WinCase = (&'static str, &'static [(&'static str, TruthValue)], Vec<Vec<&'static str>>);
type Criterion = (&'static str, fn() -> Outcome);

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, started: Instant) -> Result<(), String> {
    let took = started.elapsed();
    ensure(took < limit, || format!("took {took:?}, limit {limit:?}"))
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn rendered(p: &Program, cfg: &EvalConfig) -> Result<BTreeSet<String>, String> {
    Ok(model(p, cfg).map_err(|e| e.to_string())?.iter().map(Atom::to_string).collect())
}

fn value(g: &GroundProgram, m: &WfModel, text: &str) -> TruthValue {
    let a = parse_literals(text).unwrap()[0].atom().unwrap().clone();
    g.find(&a).map_or(TruthValue::False, |id| m.value(id))
}

const WIN: &str = "win(X) :- move(X,Y), not win(Y).";

fn win_table() -> Outcome {
    let started = Instant::now();
    let cases: [WinCase; 3] = [
        (
            "move(a,b).",
            &[("win(a)", TruthValue::True), ("win(b)", TruthValue::False)],
            vec![vec!["win(a)"]],
        ),
        ("move(a,a).", &[("win(a)", TruthValue::Undefined)], vec![]),
        (
            "move(a,b). move(b,a).",
            &[("win(a)", TruthValue::Undefined), ("win(b)", TruthValue::Undefined)],
            vec![vec!["win(b)"], vec!["win(a)"]],
        ),
    ];
    for (moves, wfs, stable) in cases {
        let program = load(&format!("{WIN} {moves}")).map_err(|e| e.to_string())?;
        let g = ground(&program, &EvalConfig::default()).map_err(|e| e.to_string())?;
        let m = well_founded(&g);
        for (text, want) in wfs {
            let got = value(&g, &m, text);
            ensure(got == *want, || format!("{moves}: WFS {text} = {got:?}, want {want:?}"))?;
        }
        let models: Vec<Vec<String>> = solve(&g, None, SolveConfig::default())
            .models
            .iter()
            .map(|sm| sm.0.iter().map(|&a| g.atoms()[a].to_string()).filter(|s| s.starts_with("win")).collect())
            .collect();
        ensure(models == *stable, || format!("{moves}: stable models {models:?}, want {stable:?}"))?;
    }
    within(Duration::from_secs(1), started)?;
    Ok("3 cases".into())
}

fn function_free(p: &Program) -> bool {
    !p.rules.iter().any(|r| r.has_function_symbols()) && p.facts.iter().all(|f| f.args.iter().all(|t| !t.has_compound()))
}

fn corpus_programs() -> Result<Vec<(String, Program)>, String> {
    let mut out = Vec::new();
    for d in fixture_dirs(&corpus_dir()).map_err(|e| e.to_string())? {
        let f = Fixture::load(&d)?;
        let src = std::fs::read_to_string(f.program_path()).map_err(|e| e.to_string())?;
        out.push((f.name.clone(), load(&src).map_err(|e| format!("{}: {e}", f.name))?));
    }
    Ok(out)
}

fn stratified_wfs_agreement() -> Outcome {
    let started = Instant::now();
    let mut checked = 0;
    for (name, p) in corpus_programs()? {
        let class = classify(&build_graph(&p));
        if class.stratification.is_none() || !function_free(&p) {
            continue;
        }
        let g = ground(&p, &EvalConfig::default()).map_err(|e| format!("{name}: {e}"))?;
        let m = well_founded(&g);
        ensure(m.undefined_set.is_empty(), || format!("{name}: undefined atoms under WFS"))?;
        let truths: BTreeSet<String> = m.true_set.iter().map(|&a| g.atoms()[a].to_string()).collect();
        ensure(truths == rendered(&p, &EvalConfig::default())?, || format!("{name}: true set differs"))?;
        checked += 1;
    }
    within(Duration::from_secs(10), started)?;
    Ok(format!("{checked} stratifiable programs"))
}

fn naive_vs_semi_naive() -> Outcome {
    let started = Instant::now();
    let naive = EvalConfig {
        mode: Mode::Naive,
        ..EvalConfig::default()
    };
    for seed in 0..500 {
        let p = testkit::random_program(&mut rng(seed), Shape::default());
        ensure(rendered(&p, &naive)? == rendered(&p, &EvalConfig::default())?, || format!("seed {seed}: models differ"))?;
    }
    let chain = load(&workloads::ancestor_chain(64)).map_err(|e| e.to_string())?;
    let class = classify(&build_graph(&chain));
    let strat = class.require_stratified().map_err(|e| e.to_string())?;
    let (_, semi) = evaluate(&chain, strat, &EvalConfig::default()).map_err(|e| e.to_string())?;
    let (_, full) = evaluate(&chain, strat, &naive).map_err(|e| e.to_string())?;
    ensure(semi.join_probes < full.join_probes, || {
        format!("probes semi-naive {} vs naive {}", semi.join_probes, full.join_probes)
    })?;
    within(Duration::from_secs(60), started)?;
    Ok(format!("500 programs; chain probes {} < {}", semi.join_probes, full.join_probes))
}

fn least_model_oracle() -> Outcome {
    let started = Instant::now();
    let shape = Shape {
        negation: false,
        ..Shape::default()
    };
    for seed in 0..200 {
        let p = testkit::random_program(&mut rng(1_000 + seed), shape);
        ensure(rendered(&p, &EvalConfig::default())? == testkit::brute_least_model(&p), || {
            format!("seed {seed}: model differs from closure\n{p}")
        })?;
    }
    within(Duration::from_secs(60), started)?;
    Ok("200 programs".into())
}

fn stable_oracle() -> Outcome {
    let started = Instant::now();
    let mut models = 0;
    for seed in 0..300u64 {
        let atoms = (seed % 13) as usize;
        let g = testkit::random_ground(&mut rng(2_000 + seed), atoms);
        let on = solve(&g, None, SolveConfig { backjumping: true });
        let off = solve(&g, None, SolveConfig { backjumping: false });
        let mut sorted = on.models.clone();
        sorted.sort();
        ensure(sorted == testkit::brute_stable(&g), || format!("seed {seed}: model set differs from enumeration"))?;
        ensure(on.models == off.models, || format!("seed {seed}: backjumping changed the model list"))?;
        ensure(on.stats.decisions <= off.stats.decisions, || {
            format!("seed {seed}: decisions {} with backjumping, {} without", on.stats.decisions, off.stats.decisions)
        })?;
        models += on.models.len();
    }
    within(Duration::from_secs(120), started)?;
    Ok(format!("300 programs, {models} models"))
}

fn queens_counts() -> Outcome {
    let mut counts = Vec::new();
    for n in 4..=8 {
        let started = Instant::now();
        let p = load(&workloads::queens(n as u32)).map_err(|e| e.to_string())?;
        let g = ground(&p, &EvalConfig::default()).map_err(|e| e.to_string())?;
        let found: BTreeSet<BTreeSet<String>> = solve(&g, None, SolveConfig::default())
            .models
            .iter()
            .map(|m| m.0.iter().map(|&a| g.atoms()[a].to_string()).filter(|s| s.starts_with("q(")).collect())
            .collect();
        let want = oracle::queens(n);
        ensure(found == want, || format!("n={n}: {} models, oracle has {}", found.len(), want.len()))?;
        within(Duration::from_secs(60), started)?;
        counts.push(format!("{n}:{}", found.len()));
    }
    Ok(counts.join(" "))
}

fn demand_termination() -> Outcome {
    let src = "is_positive(1). is_positive(succ(N)) :- is_positive(N).";
    let started = Instant::now();
    let p = load(src).map_err(|e| e.to_string())?;
    let q = parse_literals("is_positive(succ(1))").unwrap();
    let answers = answer_query(&p, &q, &EvalConfig::default()).map_err(|e| e.to_string())?;
    ensure(answers.holds(), || "query does not hold with demand on".into())?;
    within(Duration::from_secs(1), started)?;
    let mut cfg = RunConfig::new("is_positive.lp");
    cfg.query = Some("is_positive(succ(1))".into());
    cfg.demand = false;
    let out = run_source(src, &cfg);
    ensure(out.code == EXIT_RESOURCE, || format!("demand off exited {}: {}", out.code, out.stderr.trim()))?;
    Ok("true with demand; exit 4 without".into())
}

fn magic_equivalence() -> Outcome {
    let started = Instant::now();
    let shape = Shape {
        negation: false,
        ..Shape::default()
    };
    let off_cfg = EvalConfig {
        demand: false,
        ..EvalConfig::default()
    };
    let (mut on_total, mut off_total) = (0, 0);
    for seed in 0..200 {
        let mut r = rng(3_000 + seed);
        let p = testkit::random_program(&mut r, shape);
        let q = testkit::random_query(&mut r, &p);
        let on = answer_query(&p, &q, &EvalConfig::default()).map_err(|e| e.to_string())?;
        let off = answer_query(&p, &q, &off_cfg).map_err(|e| e.to_string())?;
        ensure(on.rows == off.rows, || format!("seed {seed}: answers differ"))?;
        ensure(on.stats.tuples_derived <= off.stats.tuples_derived, || {
            format!("seed {seed}: {} tuples with demand, {} without", on.stats.tuples_derived, off.stats.tuples_derived)
        })?;
        on_total += on.stats.tuples_derived;
        off_total += off.stats.tuples_derived;
    }
    within(Duration::from_secs(60), started)?;
    Ok(format!("200 pairs; tuples derived {on_total} vs {off_total}"))
}

fn corpus_golden() -> Outcome {
    let started = Instant::now();
    let names = [
        "rbac-core",
        "trust-delegation",
        "andersen",
        "ancestor-chain",
        "ancestor-cycle",
        "ancestor-tree",
        "mother",
        "grandfather",
        "chain-links",
    ];
    for name in names {
        let f = Fixture::load(&corpus_dir().join(name)).map_err(|e| format!("{name}: {e}"))?;
        f.check().map_err(|e| format!("{name}: {e}"))?;
    }
    within(Duration::from_secs(30), started)?;
    Ok(format!("{} fixtures", names.len()))
}

fn wfs_bounds_stable() -> Outcome {
    let mut checked = 0;
    for (name, p) in corpus_programs()? {
        if !function_free(&p) {
            continue;
        }
        let g = ground(&p, &EvalConfig::default()).map_err(|e| format!("{name}: {e}"))?;
        let wf = well_founded(&g);
        for m in solve(&g, None, SolveConfig::default()).models {
            for a in 0..g.atom_count() {
                let ok = match wf.value(a) {
                    TruthValue::True => m.contains(a),
                    TruthValue::False => !m.contains(a),
                    TruthValue::Undefined => true,
                };
                ensure(ok, || format!("{name}: {} breaks the WFS bound", g.atoms()[a]))?;
            }
        }
        checked += 1;
    }
    Ok(format!("{checked} programs"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("win/move semantics table", win_table),
        ("stratified and well-founded models agree", stratified_wfs_agreement),
        ("naive and semi-naive agree", naive_vs_semi_naive),
        ("least model matches closure oracle", least_model_oracle),
        ("stable solver matches enumeration", stable_oracle),
        ("n-queens model counts", queens_counts),
        ("demand-driven termination", demand_termination),
        ("magic-set equivalence", magic_equivalence),
        ("corpus golden outputs", corpus_golden),
        ("well-founded model bounds stable models", wfs_bounds_stable),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let took = started.elapsed();
        match result {
            Ok(detail) => println!("criterion {:>2} PASS  {name} ({detail}; {took:.2?})", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
}
