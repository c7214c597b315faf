//! Regenerates the generated corpus programs:
//! `cargo run -p trilogic-cli --example gen_corpus -- crates/cli/corpus`

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use trilogic_core::testkit::andersen_facts;
use trilogic_core::workloads;

fn write(root: &Path, name: &str, program: &str) {
    let dir = root.join(name);
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(dir.join("program.lp"), program).unwrap();
}

fn main() {
    let root = std::env::args().nth(1).expect("usage: gen_corpus <corpus dir>");
    let root = Path::new(&root);
    write(root, "ancestor-chain", &workloads::ancestor_chain(8));
    write(root, "ancestor-cycle", &workloads::ancestor_cycle(5));
    write(root, "ancestor-tree", &workloads::ancestor_tree(15));
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let andersen = format!("{}{}", workloads::ANDERSEN_RULES, andersen_facts(&mut rng, 200, 80));
    write(root, "andersen", &andersen);
    for n in 4..=8 {
        write(root, &format!("queens-{n}"), &workloads::queens(n));
    }
}
