//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero if any fails.

use std::process::ExitCode;

use hodge_core::eval::{self, CriterionOutcome};

const SEED: u64 = 20240607;

fn main() -> ExitCode {
    let mut outcomes: Vec<CriterionOutcome> = vec![
        eval::intrinsic_dimension(),
        eval::circle_convergence(),
        eval::laplacian_structure(),
        eval::basis_invariance(SEED),
        eval::spectral_identity(),
        eval::truncation_check(),
    ];
    for o in &outcomes {
        println!("{o}");
    }
    let torus = match eval::torus_reference_fit() {
        Ok((res, secs)) => vec![eval::section_straightness(&res), eval::runtime_budget(secs)],
        Err(e) => vec![CriterionOutcome {
            id: 7,
            name: "torus reference fit",
            passed: false,
            measured: format!("error: {e}"),
        }],
    };
    for o in &torus {
        println!("{o}");
    }
    outcomes.extend(torus);
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!("acceptance: {} passed, {failed} failed", outcomes.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
