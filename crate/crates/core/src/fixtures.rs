//! Seeded instance generators for tests, benchmarks and the `gen` command.
//!
//! Every generator is a pure function of its arguments: the same spec always
//! yields a bit-identical instance. Instances are checked for solvability
//! (base factorization and capacitance factorization both succeed) and
//! regenerated with the next seed if the check fails.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::base::BaseSolver;
use crate::error::{Result, SmwError};
use crate::matrix::DenseMatrix;
use crate::smw::assemble_capacitance;
use crate::updates::UpdateSet;

pub const MAX_ATTEMPTS: usize = 100;

/// Smallest accepted diagonal-dominance factor.
pub const MIN_CONDITIONING: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstanceKind {
    RandomDense,
    /// Symmetric positive definite `A` with `Vₖ = Uₖ`, so the total is SPD too.
    Spd,
    CyclicBandedCorner,
}

impl InstanceKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::RandomDense => "random-dense",
            Self::Spd => "spd",
            Self::CyclicBandedCorner => "cyclic-banded-corner",
        }
    }
}

impl fmt::Display for InstanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InstanceKind {
    type Err = SmwError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random-dense" => Ok(Self::RandomDense),
            "spd" => Ok(Self::Spd),
            "cyclic-banded-corner" => Ok(Self::CyclicBandedCorner),
            other => Err(SmwError::InvalidSpec(format!("unknown instance kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceSpec {
    pub n: usize,
    /// One entry per update pair; `N = ranks.len()`.
    pub ranks: Vec<usize>,
    pub seed: u64,
    /// Diagonal-dominance factor applied to each row's off-diagonal sum.
    pub conditioning: f64,
    pub kind: InstanceKind,
}

impl InstanceSpec {
    pub fn random(n: usize, ranks: Vec<usize>, seed: u64) -> Self {
        Self {
            n,
            ranks,
            seed,
            conditioning: 2.0,
            kind: InstanceKind::RandomDense,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub a: DenseMatrix,
    pub updates: UpdateSet,
    pub b: DenseMatrix,
    /// The seed that produced this instance after any regeneration.
    pub seed: u64,
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    rng.gen_range(-1.0..=1.0)
}

fn dominant_diagonal(data: &mut [f64], n: usize, conditioning: f64) {
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| data[i * n + j].abs()).sum();
        data[i * n + i] = conditioning * off.max(1.0);
    }
}

fn check_solvable(a: &DenseMatrix, updates: &UpdateSet) -> Result<()> {
    let base = BaseSolver::factor_dense(a)?;
    if !updates.is_empty() {
        assemble_capacitance(&base, updates)?;
    }
    Ok(())
}

/// Retries `build` with consecutive seeds until the instance is solvable.
fn with_regeneration<T>(
    seed: u64,
    mut build: impl FnMut(u64) -> Result<T>,
    check: impl Fn(&T) -> Result<()>,
) -> Result<T> {
    for attempt in 0..MAX_ATTEMPTS as u64 {
        let candidate = build(seed.wrapping_add(attempt))?;
        match check(&candidate) {
            Ok(()) => return Ok(candidate),
            Err(SmwError::SingularBase { .. } | SmwError::SingularCapacitance { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(SmwError::GenerationFailure {
        attempts: MAX_ATTEMPTS,
    })
}

fn validate_conditioning(conditioning: f64) -> Result<()> {
    if !(conditioning.is_finite() && conditioning >= MIN_CONDITIONING) {
        return Err(SmwError::InvalidSpec(format!(
            "conditioning must be at least {MIN_CONDITIONING}, got {conditioning}"
        )));
    }
    Ok(())
}

/// A strictly diagonally dominant `A`, random updates scaled by `1/√n`, and
/// a random right-hand side.
pub fn gen_random(spec: &InstanceSpec) -> Result<Instance> {
    if spec.kind == InstanceKind::CyclicBandedCorner {
        return Err(SmwError::InvalidSpec(
            "cyclic-banded-corner instances come from gen_cyclic_corner".into(),
        ));
    }
    if spec.n == 0 {
        return Err(SmwError::InvalidSpec("n must be positive".into()));
    }
    if spec.ranks.contains(&0) {
        return Err(SmwError::InvalidSpec("update ranks must be positive".into()));
    }
    validate_conditioning(spec.conditioning)?;

    let n = spec.n;
    let scale = 1.0 / (n as f64).sqrt();
    with_regeneration(
        spec.seed,
        |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut a = vec![0.0; n * n];
            match spec.kind {
                InstanceKind::Spd => {
                    for i in 0..n {
                        for j in i + 1..n {
                            let v = uniform(&mut rng);
                            a[i * n + j] = v;
                            a[j * n + i] = v;
                        }
                    }
                }
                _ => {
                    for i in 0..n {
                        for j in 0..n {
                            if i != j {
                                a[i * n + j] = uniform(&mut rng);
                            }
                        }
                    }
                }
            }
            dominant_diagonal(&mut a, n, spec.conditioning);

            let mut updates = UpdateSet::empty(n);
            for &m in &spec.ranks {
                let mut factor = || {
                    let data = (0..n * m).map(|_| scale * uniform(&mut rng)).collect();
                    DenseMatrix::new(n, m, data)
                };
                let u = factor()?;
                let v = if spec.kind == InstanceKind::Spd {
                    u.clone()
                } else {
                    factor()?
                };
                updates.push(u, v)?;
            }
            let b = DenseMatrix::new(n, 1, (0..n).map(|_| uniform(&mut rng)).collect())?;
            Ok(Instance {
                a: DenseMatrix::new(n, n, a)?,
                updates,
                b,
                seed,
            })
        },
        |inst| check_solvable(&inst.a, &inst.updates),
    )
}

/// A seeded `n x cols` right-hand side with entries in `[-1, 1]`.
pub fn gen_rhs(n: usize, cols: usize, seed: u64) -> Result<DenseMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DenseMatrix::new(n, cols, (0..n * cols).map(|_| uniform(&mut rng)).collect())
}

/// A cyclic block-banded system split into its banded part and the
/// wrap-around corner blocks, the latter carried as low-rank updates.
#[derive(Debug, Clone, PartialEq)]
pub struct CyclicInstance {
    /// Block tridiagonal (bandwidth 1) or pentadiagonal (bandwidth 2) part.
    pub a_banded: DenseMatrix,
    /// One pair per wrap distance `d = 1..=bandwidth`; pair `d` has width `2·d·m`.
    pub updates: UpdateSet,
    /// The full cyclic matrix, equal to `a_banded + Σ UₖVₖᵀ`.
    pub full: DenseMatrix,
    pub nblocks: usize,
    pub block_size: usize,
    pub bandwidth: usize,
    pub seed: u64,
}

/// Block offsets of the wrap-around blocks at cyclic distance `d`:
/// `d` upper-right blocks followed by `d` lower-left blocks.
fn wrap_blocks(nblocks: usize, d: usize) -> Vec<(usize, usize)> {
    let upper = (0..d).map(|i| (i, i + nblocks - d));
    let lower = (0..d).map(|j| (j + nblocks - d, j));
    upper.chain(lower).collect()
}

pub fn gen_cyclic_corner(
    nblocks: usize,
    block_size: usize,
    bandwidth: usize,
    seed: u64,
) -> Result<CyclicInstance> {
    if !(1..=2).contains(&bandwidth) {
        return Err(SmwError::InvalidSpec(format!("bandwidth must be 1 or 2, got {bandwidth}")));
    }
    if block_size == 0 {
        return Err(SmwError::InvalidSpec("block size must be positive".into()));
    }
    let min_blocks = (2 * bandwidth + 1).max(4);
    if nblocks < min_blocks {
        return Err(SmwError::InvalidSpec(format!(
            "bandwidth {bandwidth} needs at least {min_blocks} blocks, got {nblocks}"
        )));
    }

    let m = block_size;
    let n = nblocks * m;
    with_regeneration(
        seed,
        |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut full = vec![0.0; n * n];
            for bi in 0..nblocks {
                for off in 0..=2 * bandwidth {
                    let bj = (bi + nblocks + off - bandwidth) % nblocks;
                    for r in 0..m {
                        for c in 0..m {
                            full[(bi * m + r) * n + bj * m + c] = uniform(&mut rng);
                        }
                    }
                }
            }
            dominant_diagonal(&mut full, n, 2.0);

            let mut banded = full.clone();
            for bi in 0..nblocks {
                for bj in 0..nblocks {
                    if bi.abs_diff(bj) > bandwidth {
                        for r in 0..m {
                            for c in 0..m {
                                banded[(bi * m + r) * n + bj * m + c] = 0.0;
                            }
                        }
                    }
                }
            }

            let mut updates = UpdateSet::empty(n);
            for d in 1..=bandwidth {
                let blocks = wrap_blocks(nblocks, d);
                let width = blocks.len() * m;
                let mut u = vec![0.0; n * width];
                let mut v = vec![0.0; n * width];
                for (g, &(bi, bj)) in blocks.iter().enumerate() {
                    for t in 0..m {
                        u[(bi * m + t) * width + g * m + t] = 1.0;
                        for s in 0..m {
                            v[(bj * m + s) * width + g * m + t] = full[(bi * m + t) * n + bj * m + s];
                        }
                    }
                }
                updates.push(DenseMatrix::new(n, width, u)?, DenseMatrix::new(n, width, v)?)?;
            }

            Ok(CyclicInstance {
                a_banded: DenseMatrix::new(n, n, banded)?,
                updates,
                full: DenseMatrix::new(n, n, full)?,
                nblocks,
                block_size,
                bandwidth,
                seed,
            })
        },
        |inst| check_solvable(&inst.a_banded, &inst.updates),
    )
}
