//! Reference suite: one line per criterion, then a single verdict.

use bloch_amp::verify::{run_all, DEFAULT_SEED};

#[test]
fn acceptance_suite() {
    let outcomes = run_all(DEFAULT_SEED);
    for o in &outcomes {
        println!("{o}");
    }
    let failed: Vec<u8> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    assert_eq!(outcomes.len(), 11);
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
