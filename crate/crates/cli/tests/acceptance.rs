//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Run with `cargo test -p smw-cli --test acceptance`.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use smw_cli::args::BenchArgs;
use smw_cli::commands::bench;
use smw_core::fixtures::{gen_random, Instance, InstanceKind, InstanceSpec};
use smw_core::reference::{
    assemble_total, componentwise_relative_error, oracle_capacitance, oracle_solve,
    relative_max_error,
};
use smw_core::{
    assemble_capacitance, build_solver, collapsed_solve, corollary_inverse, smw_inverse,
    BaseSolver, DenseMatrix, SmwError, UpdateSet,
};

const THEOREM_INSTANCES: usize = 1200;
const COROLLARY_INSTANCES: usize = 250;
const INVARIANCE_INSTANCES: usize = 300;

const SOLVE_TOL: f64 = 1e-9;
const CAPACITANCE_TOL: f64 = 1e-12;
const COLLAPSED_TOL: f64 = 1e-11;
const COROLLARY_TOL: f64 = 1e-12;
const MULTIPLY_BACK_TOL: f64 = 1e-9;
const MULTIPLY_BACK_MAX_N: usize = 32;
const INVARIANCE_TOL: f64 = 1e-11;
const BENCH_TARGET_SPEEDUP: f64 = 3.0;
const BENCH_MIN_SPEEDUP: f64 = 1.5;

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

/// n ∈ 2..=64, N ∈ 1..=6, mₖ ∈ 1..=4, drawn from a fixed stream.
fn instances(count: usize, stream: u64) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(stream);
    (0..count)
        .map(|i| {
            let n = rng.gen_range(2..=64);
            let pairs = rng.gen_range(1..=6);
            let ranks = (0..pairs).map(|_| rng.gen_range(1..=4)).collect();
            gen_random(&InstanceSpec::random(n, ranks, stream * 1_000_000 + i as u64)).unwrap()
        })
        .collect()
}

fn theorem_reproduction(insts: &[Instance]) -> Outcome {
    let mut worst = 0.0f64;
    for inst in insts {
        let base = BaseSolver::factor_dense(&inst.a).unwrap();
        let (x, _) = build_solver(&base, &inst.updates).unwrap().solve(&inst.b).unwrap();
        let sys = assemble_total(&inst.a, &inst.updates).unwrap();
        let y = oracle_solve(&sys, &inst.b).unwrap();
        worst = worst.max(componentwise_relative_error(&x, &y).unwrap());
    }
    outcome(
        worst <= SOLVE_TOL,
        format!(
            "{} instances, max componentwise relative error {worst:.3e} (tol {SOLVE_TOL:e})",
            insts.len()
        ),
    )
}

fn proof_path_equivalence(insts: &[Instance]) -> Outcome {
    let (mut cap_worst, mut col_worst) = (0.0f64, 0.0f64);
    for inst in insts {
        let base = BaseSolver::factor_dense(&inst.a).unwrap();
        let cap = assemble_capacitance(&base, &inst.updates).unwrap();
        let stacked = oracle_capacitance(&inst.a, &inst.updates).unwrap();
        cap_worst = cap_worst.max(relative_max_error(cap.matrix(), &stacked).unwrap());

        let (x, _) = build_solver(&base, &inst.updates).unwrap().solve(&inst.b).unwrap();
        let y = collapsed_solve(&base, &inst.updates, &inst.b).unwrap();
        col_worst = col_worst.max(relative_max_error(&x, &y).unwrap());
    }
    outcome(
        cap_worst <= CAPACITANCE_TOL && col_worst <= COLLAPSED_TOL,
        format!(
            "{} instances, capacitance vs I + C^T A^-1 B {cap_worst:.3e} (tol {CAPACITANCE_TOL:e}), \
             blocked vs collapsed {col_worst:.3e} (tol {COLLAPSED_TOL:e})",
            insts.len()
        ),
    )
}

fn corollary_reproduction() -> Outcome {
    let insts = instances(COROLLARY_INSTANCES, 3);
    let mut worst = 0.0f64;
    for inst in &insts {
        let base = BaseSolver::identity(inst.a.rows()).unwrap();
        let theorem = smw_inverse(&base, &inst.updates).unwrap();
        let corollary = corollary_inverse(&inst.updates).unwrap();
        worst = worst.max(theorem.sub(&corollary).unwrap().norm_inf());
    }
    outcome(
        worst <= COROLLARY_TOL,
        format!(
            "{} instances, max inf-norm difference {worst:.3e} (tol {COROLLARY_TOL:e})",
            insts.len()
        ),
    )
}

fn multiply_back(insts: &[Instance]) -> Outcome {
    let mut worst = 0.0f64;
    let mut count = 0;
    for inst in insts.iter().filter(|i| i.a.rows() <= MULTIPLY_BACK_MAX_N) {
        let base = BaseSolver::factor_dense(&inst.a).unwrap();
        let inv = smw_inverse(&base, &inst.updates).unwrap();
        let total = assemble_total(&inst.a, &inst.updates).unwrap().total;
        let dev = total
            .matmul(&inv)
            .unwrap()
            .sub(&DenseMatrix::identity(total.rows()))
            .unwrap()
            .norm_inf();
        worst = worst.max(dev);
        count += 1;
    }
    outcome(
        count > 0 && worst <= MULTIPLY_BACK_TOL,
        format!("{count} instances with n <= {MULTIPLY_BACK_MAX_N}, max |T X - I|_inf {worst:.3e} (tol {MULTIPLY_BACK_TOL:e})"),
    )
}

fn nonsingularity_errors() -> Outcome {
    let e1 = DenseMatrix::unit_vector(2, 0);
    let updates = UpdateSet::new(2, vec![(e1.clone(), e1.scale(-1.0))]).unwrap();
    let base = BaseSolver::identity(2).unwrap();
    let cap = assemble_capacitance(&base, &updates);
    let cap_ok = matches!(cap, Err(SmwError::SingularCapacitance { .. }));

    let rank_deficient = DenseMatrix::from_rows(&[&[1.0, 2.0], &[2.0, 4.0]]).unwrap();
    let base_err = BaseSolver::factor_dense(&rank_deficient);
    let base_ok = matches!(base_err, Err(SmwError::SingularBase { .. }));
    outcome(
        cap_ok && base_ok,
        format!(
            "I + e1(-e1)^T -> {}, [[1,2],[2,4]] -> {}",
            if cap_ok { "SingularCapacitance" } else { "no error" },
            if base_ok { "SingularBase" } else { "no error" }
        ),
    )
}

fn invariance_suite() -> Outcome {
    let insts = instances(INVARIANCE_INSTANCES, 6);
    let (mut perm_worst, mut group_worst) = (0.0f64, 0.0f64);
    let mut passthrough_exact = true;
    for (i, inst) in insts.iter().enumerate() {
        let base = BaseSolver::factor_dense(&inst.a).unwrap();
        let solve = |u: &UpdateSet| build_solver(&base, u).unwrap().apply_inverse(&inst.b).unwrap();
        let x = solve(&inst.updates);

        let n_pairs = inst.updates.len();
        let order: Vec<usize> = (0..n_pairs).map(|k| (k + i) % n_pairs).rev().collect();
        let y = solve(&inst.updates.reordered(&order).unwrap());
        perm_worst = perm_worst.max(relative_max_error(&y, &x).unwrap());

        let mut groups = vec![2; n_pairs / 2];
        if n_pairs % 2 == 1 {
            groups.push(1);
        }
        for grouping in [groups, vec![n_pairs]] {
            let y = solve(&inst.updates.regrouped(&grouping).unwrap());
            group_worst = group_worst.max(relative_max_error(&y, &x).unwrap());
        }

        let empty = UpdateSet::empty(inst.a.rows());
        let (z, _) = build_solver(&base, &empty).unwrap().solve(&inst.b).unwrap();
        passthrough_exact &= z == base.solve(&inst.b).unwrap();
    }
    outcome(
        perm_worst <= INVARIANCE_TOL && group_worst <= INVARIANCE_TOL && passthrough_exact,
        format!(
            "{} instances, permutation {perm_worst:.3e}, regrouping {group_worst:.3e} (tol {INVARIANCE_TOL:e}), \
             N=0 pass-through {}",
            insts.len(),
            if passthrough_exact { "bit-exact" } else { "NOT bit-exact" }
        ),
    )
}

fn performance() -> Outcome {
    let args = BenchArgs {
        n: 1500,
        pairs: 2,
        rank: 4,
        repeats: 50,
        seed: 0,
        kind: InstanceKind::RandomDense,
        conditioning: 2.0,
    };
    let mut speedups = Vec::new();
    let mut sink = Vec::new();
    let mut deviation = 0.0f64;
    for _ in 0..3 {
        let r = bench(&args, &mut sink).unwrap();
        deviation = deviation.max(r.max_deviation);
        speedups.push(r.speedup());
    }
    speedups.sort_by(f64::total_cmp);
    let median = speedups[1];
    outcome(
        median > BENCH_MIN_SPEEDUP && deviation <= SOLVE_TOL,
        format!(
            "n=1500, total rank 8, 50 rhs: median speedup {median:.2}x over 3 runs \
             (asserted > {BENCH_MIN_SPEEDUP}, target {BENCH_TARGET_SPEEDUP}x {}), path deviation {deviation:.2e}",
            if median >= BENCH_TARGET_SPEEDUP { "met" } else { "NOT met on this machine" }
        ),
    )
}

fn run_smw(args: &[&str]) -> (i32, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_smw"))
        .args(args)
        .output()
        .expect("smw binary runs");
    (
        o.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&o.stdout).into_owned() + &String::from_utf8_lossy(&o.stderr),
    )
}

fn round_trip(dir: &Path, gen_flags: &[&str]) -> Result<(), String> {
    let d = dir.to_str().unwrap();
    let mut args = vec!["gen", "--out", d];
    args.extend_from_slice(gen_flags);
    let (code, out) = run_smw(&args);
    if code != 0 {
        return Err(format!("gen exit {code}: {out}"));
    }
    let base = format!("{d}/A.mtx");
    let manifest = format!("{d}/manifest.json");
    let rhs = format!("{d}/b.mtx");
    let x = format!("{d}/x.mtx");
    let bundle = ["--base", &base, "--manifest", &manifest, "--rhs", &rhs];

    let mut args = vec!["solve"];
    args.extend_from_slice(&bundle);
    args.extend_from_slice(&["--out", &x]);
    let (code, out) = run_smw(&args);
    if code != 0 {
        return Err(format!("solve exit {code}: {out}"));
    }

    let mut args = vec!["check"];
    args.extend_from_slice(&bundle);
    args.extend_from_slice(&["--solution", &x]);
    let (code, out) = run_smw(&args);
    if code != 0 {
        return Err(format!("check exit {code}: {out}"));
    }
    Ok(())
}

fn cli_round_trip() -> Outcome {
    let cases: [(&str, &[&str]); 3] = [
        ("random-dense", &["--kind", "random-dense", "--n", "60", "--pairs", "3", "--rank", "2", "--seed", "7"]),
        (
            "cyclic bandwidth 1",
            &["--kind", "cyclic-banded-corner", "--nblocks", "10", "--blocksize", "3", "--bandwidth", "1", "--seed", "2"],
        ),
        (
            "cyclic bandwidth 2",
            &["--kind", "cyclic-banded-corner", "--nblocks", "10", "--blocksize", "3", "--bandwidth", "2", "--seed", "2"],
        ),
    ];
    let mut failures = Vec::new();
    for (name, flags) in cases {
        let dir = tempfile::TempDir::new().unwrap();
        if let Err(e) = round_trip(dir.path(), flags) {
            failures.push(format!("{name}: {e}"));
        }
    }
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            "gen -> solve -> check exit 0 for random-dense, cyclic bandwidth 1 and 2".into()
        } else {
            failures.join("; ")
        },
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let shared = instances(THEOREM_INSTANCES, 1);

    let criteria: Vec<Criterion> = vec![
        ("1 theorem reproduction", Box::new(|| theorem_reproduction(&shared))),
        ("2 proof-path equivalence", Box::new(|| proof_path_equivalence(&shared))),
        ("3 corollary reproduction", Box::new(corollary_reproduction)),
        ("4 multiply-back", Box::new(|| multiply_back(&shared))),
        ("5 nonsingularity error surface", Box::new(nonsingularity_errors)),
        ("6 invariance suite", Box::new(invariance_suite)),
        ("7 performance", Box::new(performance)),
        ("8 CLI round-trip", Box::new(cli_round_trip)),
    ];

    let mut failed = 0;
    for (name, check) in &criteria {
        let t = Instant::now();
        let o = check();
        if !o.passed {
            failed += 1;
        }
        println!(
            "[{}] criterion {name}: {} ({:.2}s)",
            if o.passed { "PASS" } else { "FAIL" },
            o.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {}/{} criteria passed in {:.1}s",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
