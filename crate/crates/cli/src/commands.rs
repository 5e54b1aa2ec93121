//! One function per subcommand. Each writes `key=value` lines to `out`.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use smw_core::fixtures::{gen_cyclic_corner, gen_random, gen_rhs, InstanceKind, InstanceSpec};
use smw_core::reference::{
    assemble_total, componentwise_relative_error, oracle_capacitance, oracle_inverse,
    oracle_solve, relative_max_error,
};
use smw_core::{
    assemble_capacitance, build_solver, corollary_inverse, smw_inverse, stack_updates,
    BaseSolver, DenseMatrix, UpdateSet,
};

use crate::args::{BenchArgs, GenArgs};
use crate::bundle::{Manifest, PairEntry, ProblemBundle};
use crate::error::CliError;
use crate::mtx::{read_matrix, write_matrix};

/// Agreement threshold used by `check`.
pub const CHECK_TOLERANCE: f64 = 1e-9;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

macro_rules! emit {
    ($out:expr, $($arg:tt)*) => {
        writeln!($out, $($arg)*).map_err(io_err(Path::new("<stdout>")))?
    };
}

pub fn solve(bundle: &ProblemBundle, out_path: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    if bundle.rhs.is_none() {
        return Err(CliError::Usage("solve requires --rhs".into()));
    }
    let loaded = bundle.load()?;
    let b = loaded.rhs.as_ref().expect("rhs checked above");
    let start = Instant::now();
    let base = loaded.base_solver()?;
    let solver = build_solver(&base, &loaded.updates)?;
    let (x, report) = solver.solve(b)?;
    let elapsed = start.elapsed().as_secs_f64();
    write_matrix(out_path, &x)?;

    emit!(out, "n={}", report.n);
    emit!(out, "N={}", report.pairs);
    emit!(out, "total_rank={}", report.total_rank);
    match report.relative_residual {
        Some(r) => emit!(out, "relative_residual={r:e}"),
        None => emit!(out, "relative_residual=unavailable"),
    }
    emit!(out, "base_solve_count={}", report.base_solve_count);
    emit!(out, "solve_elapsed={:e}", report.elapsed);
    emit!(out, "elapsed={elapsed:e}");
    Ok(())
}

pub fn invert(bundle: &ProblemBundle, out_path: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let loaded = bundle.load()?;
    let start = Instant::now();
    let (inverse, method) = if loaded.is_identity() && !loaded.updates.is_empty() {
        (corollary_inverse(&loaded.updates)?, "corollary")
    } else {
        let base = loaded.base_solver()?;
        (smw_inverse(&base, &loaded.updates)?, "blocked")
    };
    let elapsed = start.elapsed().as_secs_f64();
    write_matrix(out_path, &inverse)?;

    emit!(out, "n={}", loaded.n);
    emit!(out, "N={}", loaded.updates.len());
    emit!(out, "total_rank={}", loaded.updates.total_rank());
    emit!(out, "method={method}");
    emit!(out, "elapsed={elapsed:e}");
    Ok(())
}

pub fn capacitance(
    bundle: &ProblemBundle,
    out_path: &Path,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let loaded = bundle.load()?;
    let base = loaded.base_solver()?;
    let cap = assemble_capacitance(&base, &loaded.updates)?;
    write_matrix(out_path, cap.matrix())?;

    emit!(out, "n={}", loaded.n);
    emit!(out, "N={}", loaded.updates.len());
    emit!(out, "dim={}", cap.dim());
    let offsets: Vec<String> = cap.block_offsets().iter().map(usize::to_string).collect();
    emit!(out, "block_offsets={}", offsets.join(","));
    Ok(())
}

/// Deviations measured by `check`, each compared against [`CHECK_TOLERANCE`].
#[derive(Debug, Clone, Default)]
pub struct CheckSummary {
    pub capacitance_deviation: Option<f64>,
    pub solve_deviation: Option<f64>,
    pub solution_deviation: Option<f64>,
    pub inverse_deviation: f64,
    pub multiply_back: f64,
}

impl CheckSummary {
    pub fn max_deviation(&self) -> f64 {
        [
            self.capacitance_deviation,
            self.solve_deviation,
            self.solution_deviation,
            Some(self.inverse_deviation),
            Some(self.multiply_back),
        ]
        .into_iter()
        .flatten()
        .fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max_deviation() <= CHECK_TOLERANCE
    }
}

fn residual(total: &DenseMatrix, x: &DenseMatrix, b: &DenseMatrix) -> Result<f64, CliError> {
    let r = total.matmul(x)?.sub(b)?.norm_frobenius();
    let bn = b.norm_frobenius();
    Ok(if bn == 0.0 { r } else { r / bn })
}

pub fn check(
    bundle: &ProblemBundle,
    solution: Option<&Path>,
    out: &mut dyn Write,
) -> Result<CheckSummary, CliError> {
    let loaded = bundle.load()?;
    let written = match solution {
        Some(path) => {
            let x = read_matrix(path)?;
            let expected = loaded
                .rhs
                .as_ref()
                .map(|b| b.shape())
                .ok_or_else(|| CliError::Usage("--solution requires --rhs".into()))?;
            if x.shape() != expected {
                return Err(CliError::parse(
                    path,
                    format!("solution is {}x{}, expected {}x{}", x.rows(), x.cols(), expected.0, expected.1),
                ));
            }
            Some(x)
        }
        None => None,
    };

    let a = loaded.base_dense();
    let base = loaded.base_solver()?;
    let solver = build_solver(&base, &loaded.updates)?;
    let sys = assemble_total(&a, &loaded.updates)?;
    let mut summary = CheckSummary::default();

    emit!(out, "n={}", loaded.n);
    emit!(out, "N={}", loaded.updates.len());
    emit!(out, "total_rank={}", loaded.updates.total_rank());

    if let Some(cap) = solver.capacitance() {
        let reference = oracle_capacitance(&a, &loaded.updates)?;
        let dev = relative_max_error(cap.matrix(), &reference)?;
        emit!(out, "capacitance_deviation={dev:e}");
        summary.capacitance_deviation = Some(dev);
    }

    if let Some(b) = &loaded.rhs {
        let (x, report) = solver.solve(b)?;
        let y = oracle_solve(&sys, b)?;
        let dev = componentwise_relative_error(&x, &y)?;
        emit!(
            out,
            "smw_relative_residual={:e}",
            report.relative_residual.unwrap_or(f64::NAN)
        );
        emit!(out, "oracle_relative_residual={:e}", residual(&sys.total, &y, b)?);
        emit!(out, "solve_deviation={dev:e}");
        summary.solve_deviation = Some(dev);
        if let Some(w) = &written {
            let dev = componentwise_relative_error(w, &y)?;
            emit!(out, "solution_relative_residual={:e}", residual(&sys.total, w, b)?);
            emit!(out, "solution_deviation={dev:e}");
            summary.solution_deviation = Some(dev);
        }
    }

    let inverse = solver.apply_inverse(&DenseMatrix::identity(loaded.n))?;
    let oracle = oracle_inverse(&sys)?;
    summary.inverse_deviation = inverse.sub(&oracle)?.norm_inf();
    summary.multiply_back = sys
        .total
        .matmul(&inverse)?
        .sub(&DenseMatrix::identity(loaded.n))?
        .norm_inf();
    emit!(out, "inverse_deviation={:e}", summary.inverse_deviation);
    emit!(out, "inverse_multiply_back={:e}", summary.multiply_back);
    emit!(out, "max_deviation={:e}", summary.max_deviation());
    emit!(out, "tolerance={CHECK_TOLERANCE:e}");

    if summary.passed() {
        emit!(out, "status=pass");
        Ok(summary)
    } else {
        emit!(out, "status=fail");
        Err(CliError::CheckFailed(format!(
            "max deviation {:e} exceeds {CHECK_TOLERANCE:e}",
            summary.max_deviation()
        )))
    }
}

#[derive(Debug, Clone)]
pub struct BenchResult {
    pub n: usize,
    pub total_rank: usize,
    pub repeats: usize,
    /// Assemble the total, factor it, solve every right-hand side.
    pub refactor_secs: f64,
    /// Build the update solver on the cached base, solve every right-hand side.
    pub smw_secs: f64,
    /// Largest relative disagreement between the two paths.
    pub max_deviation: f64,
}

impl BenchResult {
    pub fn speedup(&self) -> f64 {
        self.refactor_secs / self.smw_secs
    }
}

pub fn bench(args: &BenchArgs, out: &mut dyn Write) -> Result<BenchResult, CliError> {
    if args.repeats == 0 {
        return Err(CliError::Usage("--repeats must be at least 1".into()));
    }
    if args.n == 0 || args.pairs == 0 || args.rank == 0 {
        return Err(CliError::Usage("--n, --pairs and --rank must be positive".into()));
    }
    if args.kind == InstanceKind::CyclicBandedCorner {
        return Err(CliError::Usage("bench supports random-dense and spd".into()));
    }
    let spec = InstanceSpec {
        n: args.n,
        ranks: vec![args.rank; args.pairs],
        seed: args.seed,
        conditioning: args.conditioning,
        kind: args.kind,
    };
    let inst = gen_random(&spec)?;
    let rhs = gen_rhs(args.n, args.repeats, args.seed.wrapping_add(1))?;
    let columns: Vec<DenseMatrix> = (0..args.repeats)
        .map(|j| DenseMatrix::column_vector(&rhs.column(j)))
        .collect::<Result<_, _>>()?;
    let stacked = stack_updates(&inst.updates)?;

    let start = Instant::now();
    let total = inst.a.add(&stacked.b.matmul(&stacked.c.transpose())?)?;
    let refactored = BaseSolver::factor_dense(&total)?;
    let direct: Vec<DenseMatrix> = columns
        .iter()
        .map(|b| refactored.solve(b))
        .collect::<Result<_, _>>()?;
    let refactor_secs = start.elapsed().as_secs_f64();

    let base = BaseSolver::factor_dense(&inst.a)?;
    let start = Instant::now();
    let solver = build_solver(&base, &inst.updates)?;
    let updated: Vec<DenseMatrix> = columns
        .iter()
        .map(|b| solver.apply_inverse(b))
        .collect::<Result<_, _>>()?;
    let smw_secs = start.elapsed().as_secs_f64();

    let mut max_deviation = 0.0f64;
    for (x, y) in updated.iter().zip(&direct) {
        max_deviation = max_deviation.max(relative_max_error(x, y)?);
    }

    let result = BenchResult {
        n: args.n,
        total_rank: inst.updates.total_rank(),
        repeats: args.repeats,
        refactor_secs,
        smw_secs,
        max_deviation,
    };
    emit!(
        out,
        "{:>8} {:>10} {:>8} {:>14} {:>14} {:>9} {:>14}",
        "n",
        "total_rank",
        "repeats",
        "refactor_s",
        "smw_s",
        "speedup",
        "max_deviation"
    );
    emit!(
        out,
        "{:>8} {:>10} {:>8} {:>14.6} {:>14.6} {:>9.2} {:>14.3e}",
        result.n,
        result.total_rank,
        result.repeats,
        result.refactor_secs,
        result.smw_secs,
        result.speedup(),
        result.max_deviation
    );
    Ok(result)
}

fn write_bundle(
    dir: &Path,
    a: &DenseMatrix,
    updates: &UpdateSet,
    b: &DenseMatrix,
) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_matrix(&dir.join("A.mtx"), a)?;
    let mut pairs = Vec::with_capacity(updates.len());
    for (k, pair) in updates.pairs().iter().enumerate() {
        let entry = PairEntry {
            u: format!("U{}.mtx", k + 1),
            v: format!("V{}.mtx", k + 1),
        };
        write_matrix(&dir.join(&entry.u), pair.u())?;
        write_matrix(&dir.join(&entry.v), pair.v())?;
        pairs.push(entry);
    }
    write_matrix(&dir.join("b.mtx"), b)?;
    let manifest = Manifest {
        n: updates.n(),
        pairs,
    };
    let path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, json + "\n").map_err(io_err(&path))
}

pub fn gen(args: &GenArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (a, updates, b, seed) = match args.kind {
        InstanceKind::CyclicBandedCorner => {
            let inst = gen_cyclic_corner(args.nblocks, args.blocksize, args.bandwidth, args.seed)?;
            let n = inst.a_banded.rows();
            let b = gen_rhs(n, 1, inst.seed)?;
            (inst.a_banded, inst.updates, b, inst.seed)
        }
        kind => {
            let inst = gen_random(&InstanceSpec {
                n: args.n,
                ranks: vec![args.rank; args.pairs],
                seed: args.seed,
                conditioning: args.conditioning,
                kind,
            })?;
            (inst.a, inst.updates, inst.b, inst.seed)
        }
    };
    write_bundle(&args.out, &a, &updates, &b)?;

    emit!(out, "kind={}", args.kind);
    emit!(out, "n={}", updates.n());
    emit!(out, "N={}", updates.len());
    emit!(out, "total_rank={}", updates.total_rank());
    emit!(out, "seed={seed}");
    emit!(out, "base={}", args.out.join("A.mtx").display());
    emit!(out, "manifest={}", args.out.join("manifest.json").display());
    emit!(out, "rhs={}", args.out.join("b.mtx").display());
    Ok(())
}
