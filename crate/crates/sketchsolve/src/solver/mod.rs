//! Iterate-update rules.
//!
//! Every rule consumes one sketch vector `w` and projects the iterate so the
//! sketched equation `(wᵀA) x = wᵀ b` holds afterwards. They differ in how
//! much orthogonalization memory they carry:
//!
//! - [`base_row_step`] / [`base_column_step`]: no memory.
//! - [`partial_ortho_step`]: a FIFO buffer of up to `m` orthonormal
//!   directions, projected out by Gram-Schmidt.
//! - [`full_ortho_step`]: a dense projector onto the complement of every
//!   prior direction, updated rank-one per step.
//! - [`general_rpm_step`]: the block generalization driven by an `r x n`
//!   sketch matrix.

mod drive;
mod gram_schmidt;

pub use drive::{
    run_solve, run_solve_column, solve, Method, ResidualSample, SolveOptions, SolveReport,
    SolveTrace, TerminationCriteria,
};
pub use gram_schmidt::{modified_gram_schmidt, project_out, twice_iterated_gram_schmidt, GsKind};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{vdot, vnorm};
use crate::sketch::SketchVector;
use crate::system::LinearSystem;

/// A step is treated as degenerate when the projected direction has norm at
/// most `DEGENERACY_RTOL * max(1, |q|)`. An exact zero test is unattainable
/// in floating point, and advancing on a near-zero direction destroys the
/// projector's conditioning.
pub const DEGENERACY_RTOL: f64 = 1e-12;

/// The full projector is resymmetrized every this many advanced steps to
/// bound drift.
pub const RESYMMETRIZE_EVERY: usize = 50;

/// Orthogonalization memory carried by a solver.
#[derive(Clone, Debug)]
pub enum Memory {
    /// Memoryless: the update acts as if the projector were the identity.
    None,
    /// Dense projector onto the orthogonal complement of all prior advanced
    /// directions.
    FullProjector {
        s: DMatrix<f64>,
        advanced: usize,
    },
    /// FIFO buffer of at most `capacity` orthonormal directions.
    PartialBuffer {
        vecs: Vec<DVector<f64>>,
        capacity: usize,
        gs: GsKind,
    },
}

/// Iterate plus memory plus counters.
#[derive(Clone, Debug)]
pub struct SolverState {
    pub x: DVector<f64>,
    pub memory: Memory,
    pub k: usize,
    pub skip_count: usize,
}

impl SolverState {
    pub fn new_base(x0: DVector<f64>) -> Self {
        Self {
            x: x0,
            memory: Memory::None,
            k: 0,
            skip_count: 0,
        }
    }

    pub fn new_complete(x0: DVector<f64>) -> Self {
        let d = x0.len();
        Self {
            x: x0,
            memory: Memory::FullProjector {
                s: DMatrix::identity(d, d),
                advanced: 0,
            },
            k: 0,
            skip_count: 0,
        }
    }

    pub fn new_partial(x0: DVector<f64>, capacity: usize, gs: GsKind) -> Self {
        Self {
            x: x0,
            memory: Memory::PartialBuffer {
                vecs: Vec::new(),
                capacity,
                gs,
            },
            k: 0,
            skip_count: 0,
        }
    }

    pub fn projector(&self) -> Option<&DMatrix<f64>> {
        match &self.memory {
            Memory::FullProjector { s, .. } => Some(s),
            _ => None,
        }
    }

    pub fn buffer(&self) -> Option<&[DVector<f64>]> {
        match &self.memory {
            Memory::PartialBuffer { vecs, .. } => Some(vecs),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepKind {
    Advanced,
    SkippedDegenerate,
}

/// What one step did: whether it advanced, and the norm of the projected
/// direction it moved along.
#[derive(Clone, Copy, Debug)]
pub struct StepOutcome {
    pub kind: StepKind,
    pub direction_norm: f64,
}

impl StepOutcome {
    pub fn advanced(&self) -> bool {
        self.kind == StepKind::Advanced
    }
}

fn check_row_side(system: &LinearSystem, w: &SketchVector) -> Result<()> {
    if w.dim() != system.n() {
        return Err(Error::DimensionMismatch {
            context: "row-action sketch vector",
            expected: system.n(),
            found: w.dim(),
        });
    }
    Ok(())
}

/// `Aᵀ w`, exploiting basis/sparse sketch vectors.
pub fn transposed_action(a: &DMatrix<f64>, w: &SketchVector) -> DVector<f64> {
    match w {
        SketchVector::Dense(v) => a.tr_mul(v),
        SketchVector::Basis { index, .. } => a.row(*index).transpose(),
        SketchVector::Sparse {
            indices, values, ..
        } => {
            let mut out = DVector::zeros(a.ncols());
            for (&i, &v) in indices.iter().zip(values) {
                for j in 0..a.ncols() {
                    out[j] += v * a[(i, j)];
                }
            }
            out
        }
    }
}

/// `A w` for column-action vectors.
pub fn forward_action(a: &DMatrix<f64>, w: &SketchVector) -> DVector<f64> {
    match w {
        SketchVector::Dense(v) => a * v,
        SketchVector::Basis { index, .. } => a.column(*index).into_owned(),
        SketchVector::Sparse {
            indices, values, ..
        } => {
            let mut out = DVector::zeros(a.nrows());
            for (&j, &v) in indices.iter().zip(values) {
                for i in 0..a.nrows() {
                    out[i] += v * a[(i, j)];
                }
            }
            out
        }
    }
}

fn is_degenerate(u_norm: f64, q_norm: f64) -> bool {
    u_norm <= DEGENERACY_RTOL * q_norm.max(1.0)
}

/// Memoryless row-action update: project the iterate onto the sketched
/// hyperplane `(wᵀA) x = wᵀ b`.
pub fn base_row_step(
    state: &mut SolverState,
    system: &LinearSystem,
    w: &SketchVector,
) -> Result<StepOutcome> {
    check_row_side(system, w)?;
    let q = transposed_action(system.a(), w);
    let u_norm = vnorm(&q);
    state.k += 1;
    if is_degenerate(u_norm, u_norm) {
        state.skip_count += 1;
        return Ok(StepOutcome {
            kind: StepKind::SkippedDegenerate,
            direction_norm: u_norm,
        });
    }
    let r = w.dot(system.b()) - vdot(&q, &state.x);
    let gamma = vdot(&q, &q);
    state.x.axpy(r / gamma, &q, 1.0);
    Ok(StepOutcome {
        kind: StepKind::Advanced,
        direction_norm: u_norm,
    })
}

/// Memoryless column-action update: correct the iterate along `w` so the
/// residual loses its component along `A w`.
pub fn base_column_step(
    state: &mut SolverState,
    system: &LinearSystem,
    w: &SketchVector,
) -> Result<StepOutcome> {
    if w.dim() != system.d() {
        return Err(Error::DimensionMismatch {
            context: "column-action sketch vector",
            expected: system.d(),
            found: w.dim(),
        });
    }
    let v = forward_action(system.a(), w);
    let v_norm = vnorm(&v);
    state.k += 1;
    if is_degenerate(v_norm, v_norm) {
        state.skip_count += 1;
        return Ok(StepOutcome {
            kind: StepKind::SkippedDegenerate,
            direction_norm: v_norm,
        });
    }
    let resid = system.residual(&state.x)?;
    let step = vdot(&v, &resid) / vdot(&v, &v);
    match w {
        SketchVector::Dense(wv) => state.x.axpy(step, wv, 1.0),
        SketchVector::Basis { index, .. } => state.x[*index] += step,
        SketchVector::Sparse {
            indices, values, ..
        } => {
            for (&j, &val) in indices.iter().zip(values) {
                state.x[j] += step * val;
            }
        }
    }
    Ok(StepOutcome {
        kind: StepKind::Advanced,
        direction_norm: v_norm,
    })
}

/// Rank-one update with the dense projector: annihilate the new direction
/// from `S` so every previously sketched equation stays satisfied.
pub fn full_ortho_step(
    state: &mut SolverState,
    system: &LinearSystem,
    w: &SketchVector,
) -> Result<StepOutcome> {
    check_row_side(system, w)?;
    let Memory::FullProjector { s, advanced } = &mut state.memory else {
        return Err(Error::InvalidParameter(
            "full_ortho_step requires full-projector memory".into(),
        ));
    };
    let q = transposed_action(system.a(), w);
    let u = &*s * &q;
    let u_norm = vnorm(&u);
    let q_norm = vnorm(&q);
    state.k += 1;
    if is_degenerate(u_norm, q_norm) {
        state.skip_count += 1;
        return Ok(StepOutcome {
            kind: StepKind::SkippedDegenerate,
            direction_norm: u_norm,
        });
    }
    let r = w.dot(system.b()) - vdot(&q, &state.x);
    let gamma = vdot(&u, &q);
    state.x.axpy(r / gamma, &u, 1.0);
    // (I - u qᵀ / gamma) S == S - u uᵀ / gamma for a symmetric projector S,
    // and the outer-product form keeps the update symmetric by construction.
    s.ger(-1.0 / gamma, &u, &u, 1.0);
    *advanced += 1;
    if *advanced % RESYMMETRIZE_EVERY == 0 {
        let st = s.transpose();
        *s += st;
        *s *= 0.5;
    }
    Ok(StepOutcome {
        kind: StepKind::Advanced,
        direction_norm: u_norm,
    })
}

/// Rank-one update with the FIFO buffer: project the new direction against
/// the stored orthonormal set, step, then store it (evicting the oldest when
/// full).
pub fn partial_ortho_step(
    state: &mut SolverState,
    system: &LinearSystem,
    w: &SketchVector,
) -> Result<StepOutcome> {
    check_row_side(system, w)?;
    let Memory::PartialBuffer { vecs, capacity, gs } = &mut state.memory else {
        return Err(Error::InvalidParameter(
            "partial_ortho_step requires partial-buffer memory".into(),
        ));
    };
    let q = transposed_action(system.a(), w);
    let u = project_out(&q, vecs, *gs);
    let u_norm = vnorm(&u);
    let q_norm = vnorm(&q);
    state.k += 1;
    if is_degenerate(u_norm, q_norm) {
        state.skip_count += 1;
        return Ok(StepOutcome {
            kind: StepKind::SkippedDegenerate,
            direction_norm: u_norm,
        });
    }
    let r = w.dot(system.b()) - vdot(&q, &state.x);
    let gamma = vdot(&u, &q);
    state.x.axpy(r / gamma, &u, 1.0);
    if *capacity > 0 {
        let z = &u / u_norm;
        if vecs.len() == *capacity {
            vecs.remove(0);
        }
        vecs.push(z);
    }
    Ok(StepOutcome {
        kind: StepKind::Advanced,
        direction_norm: u_norm,
    })
}

/// Block update driven by an `r x n` sketch matrix `V`: solve the sketched
/// normal equations through the pseudoinverse and deflate the projector by
/// the whole sketched block.
pub fn general_rpm_step(
    state: &mut SolverState,
    system: &LinearSystem,
    v: &DMatrix<f64>,
) -> Result<StepOutcome> {
    if v.ncols() != system.n() {
        return Err(Error::DimensionMismatch {
            context: "block sketch matrix",
            expected: system.n(),
            found: v.ncols(),
        });
    }
    let Memory::FullProjector { s, advanced } = &mut state.memory else {
        return Err(Error::InvalidParameter(
            "general_rpm_step requires full-projector memory".into(),
        ));
    };
    let va = v * system.a();
    let vas = &va * &*s;
    let g = &vas * va.transpose();
    let svd = g.clone().svd(true, true);
    let smax = svd.singular_values.max();
    // Dual cutoff: relative to the block Gram matrix itself, and an absolute
    // floor matching the rank-one degeneracy rule (sigma == |u|^2 there).
    let floor = DEGENERACY_RTOL * DEGENERACY_RTOL * va.norm_squared().max(1.0);
    let cut = |sv: f64| sv > 1e-12 * smax && sv > floor;
    let kept = svd.singular_values.iter().filter(|&&sv| cut(sv)).count();
    state.k += 1;
    if kept == 0 {
        state.skip_count += 1;
        return Ok(StepOutcome {
            kind: StepKind::SkippedDegenerate,
            direction_norm: smax.max(0.0).sqrt(),
        });
    }
    let u_mat = svd.u.as_ref().expect("svd u");
    let v_t = svd.v_t.as_ref().expect("svd v_t");
    let mut g_pinv = DMatrix::zeros(g.nrows(), g.ncols());
    for (i, &sv) in svd.singular_values.iter().enumerate() {
        if cut(sv) {
            let col = v_t.row(i).transpose() / sv;
            g_pinv.ger(1.0, &col, &u_mat.column(i).into_owned(), 1.0);
        }
    }
    let resid = system.residual(&state.x)?;
    let s_vat = &*s * va.transpose();
    let step = &s_vat * (&g_pinv * (v * resid));
    state.x += step;
    *s -= &s_vat * &g_pinv * &vas;
    *advanced += 1;
    if *advanced % RESYMMETRIZE_EVERY == 0 {
        let st = s.transpose();
        *s += st;
        *s *= 0.5;
    }
    Ok(StepOutcome {
        kind: StepKind::Advanced,
        direction_norm: smax.sqrt(),
    })
}
