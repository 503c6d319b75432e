//! Deterministic single-process simulation of the limited-communication
//! solver over `p` virtual nodes.
//!
//! Rows are partitioned across nodes; each node only ever reads the slices
//! of shared vectors indexed by its own column set, and every value that
//! would cross the network is counted in a [`CommLedger`]. "Communication"
//! is modeled as ledger increments plus explicit buffer arithmetic in a
//! fixed node order (ascending), so runs are reproducible and the final
//! iterate can be compared against the sequential solver exactly.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::{self, streams};
use crate::sketch::{ActionSide, SketchContext, SketchStrategy, SketchVector};
use crate::solver::{
    transposed_action, ResidualSample, SolveReport, TerminationCriteria, DEGENERACY_RTOL,
};
use crate::system::LinearSystem;

/// Row ownership and per-node column index sets.
#[derive(Clone, Debug)]
pub struct Partition {
    /// Column indices touched by each node's rows, sorted.
    index_sets: Vec<Vec<usize>>,
    /// Rows owned by each node, sorted.
    owned_rows: Vec<Vec<usize>>,
    /// Owning node per row.
    row_owner: Vec<usize>,
    /// Disjoint reduction sets: each column index is reduced by exactly one
    /// node (the lowest-indexed node whose column set contains it).
    reduction_sets: Vec<Vec<usize>>,
}

impl Partition {
    pub fn new(owned_rows: Vec<Vec<usize>>, index_sets: Vec<Vec<usize>>, n: usize) -> Result<Self> {
        if owned_rows.len() != index_sets.len() || owned_rows.is_empty() {
            return Err(Error::InvalidParameter(
                "partition needs matching, nonempty node lists".into(),
            ));
        }
        let mut row_owner = vec![usize::MAX; n];
        for (node, rows) in owned_rows.iter().enumerate() {
            for &r in rows {
                if r >= n || row_owner[r] != usize::MAX {
                    return Err(Error::InvalidParameter(format!(
                        "row {r} is not owned by exactly one node"
                    )));
                }
                row_owner[r] = node;
            }
        }
        if row_owner.iter().any(|&o| o == usize::MAX) {
            return Err(Error::InvalidParameter("every row needs an owner".into()));
        }
        let mut seen: Vec<bool> = Vec::new();
        let mut reduction_sets = Vec::with_capacity(index_sets.len());
        let max_col = index_sets
            .iter()
            .flat_map(|s| s.iter().copied())
            .max()
            .map_or(0, |m| m + 1);
        seen.resize(max_col, false);
        for set in &index_sets {
            let mut mine = Vec::new();
            for &c in set {
                if !seen[c] {
                    seen[c] = true;
                    mine.push(c);
                }
            }
            reduction_sets.push(mine);
        }
        Ok(Self {
            index_sets,
            owned_rows,
            row_owner,
            reduction_sets,
        })
    }

    pub fn p(&self) -> usize {
        self.index_sets.len()
    }

    pub fn index_sets(&self) -> &[Vec<usize>] {
        &self.index_sets
    }

    pub fn owned_rows(&self) -> &[Vec<usize>] {
        &self.owned_rows
    }

    pub fn row_owner(&self, row: usize) -> usize {
        self.row_owner[row]
    }
}

/// Contiguous near-equal row blocks over a banded matrix; each node's column
/// set is exactly the band support of its rows.
pub fn partition_banded(n: usize, half_bandwidth: usize, p: usize) -> Result<Partition> {
    if p == 0 || p > n {
        return Err(Error::PartitionTooFine { p, n });
    }
    if half_bandwidth >= n {
        return Err(Error::BandwidthOutOfRange { half_bandwidth, n });
    }
    let mut owned_rows = Vec::with_capacity(p);
    let mut index_sets = Vec::with_capacity(p);
    for j in 0..p {
        let start = j * n / p;
        let end = (j + 1) * n / p;
        let rows: Vec<usize> = (start..end).collect();
        let lo = start.saturating_sub(half_bandwidth);
        let hi = (end - 1 + half_bandwidth).min(n - 1);
        owned_rows.push(rows);
        index_sets.push((lo..=hi).collect());
    }
    Partition::new(owned_rows, index_sets, n)
}

/// Pairwise overlap statistics of a partition's column sets.
#[derive(Clone, Debug)]
pub struct OverlapStats {
    /// Largest pairwise overlap between two distinct nodes.
    pub q: usize,
    /// Largest number of nodes any node overlaps (itself included).
    pub f: usize,
    /// `pairwise[i][j] = |X_i ∩ X_j|`.
    pub pairwise: Vec<Vec<usize>>,
}

fn intersection_size(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

pub fn overlap_stats(part: &Partition) -> OverlapStats {
    let p = part.p();
    let mut pairwise = vec![vec![0usize; p]; p];
    for i in 0..p {
        for j in 0..p {
            pairwise[i][j] = intersection_size(&part.index_sets[i], &part.index_sets[j]);
        }
    }
    let mut q = 0;
    let mut f = 0;
    for i in 0..p {
        let mut neighbors = 0;
        for j in 0..p {
            if pairwise[i][j] > 0 {
                neighbors += 1;
            }
            if i != j {
                q = q.max(pairwise[i][j]);
            }
        }
        f = f.max(neighbors);
    }
    OverlapStats { q, f, pairwise }
}

/// Floating-point values one iteration originating at `origin` must ship:
/// the overlap slices of `q`, the first-pass inner products, and the
/// second-pass partial inner products.
pub fn iteration_comm_cost(part: &Partition, origin: usize, m: usize) -> usize {
    let p = part.p();
    let mut overlap = 0;
    for i in 0..p {
        if i != origin {
            let inter = intersection_size(&part.index_sets[origin], &part.index_sets[i]);
            if inter > 0 {
                overlap += inter;
            }
        }
    }
    overlap + m * (p - 1) + m * p * (p - 1)
}

/// Closed-form ceiling `Q (F - 1) + m (p^2 - 1)` on [`iteration_comm_cost`].
pub fn comm_bound(part: &Partition, m: usize) -> usize {
    let stats = overlap_stats(part);
    let p = part.p();
    stats.q * (stats.f - 1) + m * (p * p - 1)
}

/// One iteration's shipped-value counts.
#[derive(Clone, Copy, Debug)]
pub struct CommRecord {
    pub iteration: usize,
    pub node: usize,
    pub overlap_values: usize,
    pub first_pass_inner_products: usize,
    pub second_pass_inner_products: usize,
    /// Step-size and norm synchronizations; tracked separately from the
    /// Gram-Schmidt message count so `total` matches the closed form.
    pub extra_sync: usize,
}

impl CommRecord {
    pub fn total(&self) -> usize {
        self.overlap_values + self.first_pass_inner_products + self.second_pass_inner_products
    }
}

#[derive(Clone, Debug, Default)]
pub struct CommLedger {
    pub per_iteration: Vec<CommRecord>,
}

impl CommLedger {
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("iteration,node,overlap_values,first_pass_ip,second_pass_ip,total\n");
        for rec in &self.per_iteration {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                rec.iteration,
                rec.node,
                rec.overlap_values,
                rec.first_pass_inner_products,
                rec.second_pass_inner_products,
                rec.total()
            ));
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_csv_string().as_bytes())?;
        Ok(())
    }
}

/// Node visit order. Round-robin is the default covering.
#[derive(Clone, Debug)]
pub enum NodeSchedule {
    RoundRobin,
    WeightedRandom { weights: Vec<f64>, seed: u64 },
}

impl NodeSchedule {
    pub fn node_at(&self, k: usize, p: usize) -> usize {
        match self {
            NodeSchedule::RoundRobin => k % p,
            NodeSchedule::WeightedRandom { weights, seed } => {
                let total: f64 = weights.iter().take(p).sum();
                let mut rng = rng::stream(rng::mix(*seed, &[k as u64]), streams::SCHEDULE);
                let mut u = rng.random::<f64>() * total;
                for (i, &w) in weights.iter().take(p).enumerate() {
                    if u < w {
                        return i;
                    }
                    u -= w;
                }
                p - 1
            }
        }
    }
}

/// Which node-local sketch the distributed strategy emits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LocalKind {
    /// Cycle deterministically through the node's own rows.
    CyclicOwnedRows,
    /// Sample uniformly among the node's own rows.
    UniformOwnedRows,
    /// Gaussian combination of the node's own rows.
    LocalGaussian,
}

impl LocalKind {
    pub fn parse(token: &str) -> Result<Self> {
        match token {
            "cyclic" => Ok(LocalKind::CyclicOwnedRows),
            "uniform" => Ok(LocalKind::UniformOwnedRows),
            "gaussian" => Ok(LocalKind::LocalGaussian),
            _ => Err(Error::UnknownStrategy(format!("node-local {token}"))),
        }
    }
}

/// A strategy whose draw at iteration `k` is supported on the rows owned by
/// the scheduled node, as the limited-communication protocol requires.
pub struct NodeLocalStrategy {
    kind: LocalKind,
    partition: Partition,
    schedule: NodeSchedule,
    rng: ChaCha8Rng,
    cyclic_pos: Vec<usize>,
}

impl NodeLocalStrategy {
    pub fn new(kind: LocalKind, partition: Partition, schedule: NodeSchedule, seed: u64) -> Self {
        let p = partition.p();
        Self {
            kind,
            partition,
            schedule,
            rng: rng::stream(seed, streams::NODE_LOCAL),
            cyclic_pos: vec![0; p],
        }
    }
}

impl SketchStrategy for NodeLocalStrategy {
    fn token(&self) -> String {
        match self.kind {
            LocalKind::CyclicOwnedRows => "node-cyclic".into(),
            LocalKind::UniformOwnedRows => "node-uniform".into(),
            LocalKind::LocalGaussian => "node-gaussian".into(),
        }
    }

    fn side(&self) -> ActionSide {
        ActionSide::Row
    }

    fn is_adaptive(&self) -> bool {
        false
    }

    fn next(&mut self, ctx: &SketchContext<'_>) -> Result<SketchVector> {
        let n = ctx.system.n();
        let node = self.schedule.node_at(ctx.iteration, self.partition.p());
        let rows = &self.partition.owned_rows()[node];
        match self.kind {
            LocalKind::CyclicOwnedRows => {
                let pos = self.cyclic_pos[node];
                self.cyclic_pos[node] = (pos + 1) % rows.len();
                Ok(SketchVector::basis(rows[pos], n))
            }
            LocalKind::UniformOwnedRows => {
                let i = self.rng.random_range(0..rows.len());
                Ok(SketchVector::basis(rows[i], n))
            }
            LocalKind::LocalGaussian => {
                let values: Vec<f64> = rows
                    .iter()
                    .map(|_| self.rng.sample(StandardNormal))
                    .collect();
                Ok(SketchVector::Sparse {
                    dim: n,
                    indices: rows.clone(),
                    values,
                })
            }
        }
    }
}

/// Gram-Schmidt output support must stay inside the supports the lemma
/// allows: the touched stored vectors' supports plus the input's.
pub fn support_bound_check(
    q_support: &[usize],
    z_supports: &[Vec<usize>],
    u_support: &[usize],
) -> bool {
    let q_set: std::collections::HashSet<usize> = q_support.iter().copied().collect();
    let mut allowed = q_set.clone();
    for zs in z_supports {
        if zs.iter().any(|i| q_set.contains(i)) {
            allowed.extend(zs.iter().copied());
        }
    }
    u_support.iter().all(|i| allowed.contains(i))
}

fn support_of(v: &DVector<f64>) -> Vec<usize> {
    (0..v.len()).filter(|&i| v[i].abs() > 1e-14).collect()
}

fn dot_over(a: &DVector<f64>, b: &DVector<f64>, idxs: &[usize]) -> f64 {
    let mut acc = 0.0;
    for &i in idxs {
        acc += a[i] * b[i];
    }
    acc
}

/// Distributed reduction: per-node partial sums over disjoint reduction
/// sets, combined in ascending node order.
fn reduction_dot(a: &DVector<f64>, b: &DVector<f64>, part: &Partition) -> f64 {
    let mut acc = 0.0;
    for set in &part.reduction_sets {
        acc += dot_over(a, b, set);
    }
    acc
}

/// Options for [`sim_solve`].
#[derive(Clone, Debug)]
pub struct SimOptions {
    /// Memory capacity of the shared direction buffer.
    pub memory: usize,
    pub schedule: NodeSchedule,
    /// Assert the Gram-Schmidt support bound every step.
    pub check_support: bool,
    /// Recorded in the report.
    pub seed: u64,
}

impl SimOptions {
    pub fn new(memory: usize, seed: u64) -> Self {
        Self {
            memory,
            schedule: NodeSchedule::RoundRobin,
            check_support: cfg!(debug_assertions),
            seed,
        }
    }
}

/// Result of a simulated distributed solve.
#[derive(Debug)]
pub struct SimOutcome {
    pub report: SolveReport,
    pub ledger: CommLedger,
    /// The sketch vectors consumed, for sequential replay.
    pub ws: Vec<SketchVector>,
}

/// Runs the limited-communication solver on one process. The strategy must
/// emit vectors supported on the scheduled node's rows; anything else is a
/// protocol violation. The iterate arithmetic matches the sequential
/// twice-iterated Gram-Schmidt partial solver term for term.
pub fn sim_solve(
    system: &LinearSystem,
    part: &Partition,
    strategy: &mut dyn SketchStrategy,
    criteria: &TerminationCriteria,
    opts: &SimOptions,
) -> Result<SimOutcome> {
    if strategy.side() != ActionSide::Row {
        return Err(Error::StrategySideMismatch { expected: "row" });
    }
    let p = part.p();
    let m = opts.memory;
    let overlap_values_per_node: Vec<usize> = (0..p)
        .map(|j| {
            (0..p)
                .filter(|&i| i != j)
                .map(|i| intersection_size(&part.index_sets[j], &part.index_sets[i]))
                .sum()
        })
        .collect();

    let start = Instant::now();
    let mut x = DVector::zeros(system.d());
    let r0 = system.residual_norm(&x)?;
    let target = criteria.residual_factor * r0;
    let mut buffer: Vec<DVector<f64>> = Vec::new();
    let mut ledger = CommLedger::default();
    let mut ws = Vec::new();
    let mut history = Vec::new();
    let mut iterations = 0usize;
    let mut advanced = 0usize;
    let mut timed_out = false;

    loop {
        if iterations % criteria.check_every == 0 {
            let rn = system.residual_norm(&x)?;
            history.push(ResidualSample {
                iteration: iterations,
                relative_residual: if r0 > 0.0 { rn / r0 } else { 0.0 },
            });
            if rn <= target {
                break;
            }
        }
        if let Some(max) = criteria.max_iterations {
            if iterations >= max {
                timed_out = true;
                break;
            }
        }
        if let Some(budget) = criteria.wall_clock_budget {
            if start.elapsed() >= budget {
                timed_out = true;
                break;
            }
        }
        let node = opts.schedule.node_at(iterations, p);
        let w = strategy.next(&SketchContext {
            system,
            x: &x,
            iteration: iterations,
        })?;
        for &row in &w.support() {
            if part.row_owner(row) != node {
                return Err(Error::ProtocolViolation { node, row });
            }
        }
        let cols = &part.index_sets[node];
        let q = transposed_action(system.a(), &w);
        let q_norm = dot_over(&q, &q, cols).sqrt();
        let r = w.dot(system.b()) - dot_over(&q, &x, cols);

        // First Gram-Schmidt pass: inner products computed at the origin
        // node (q is supported there), then broadcast with the overlap
        // slices of q. Message slots are sized by the capacity m.
        let ips1: Vec<f64> = buffer.iter().map(|z| dot_over(&q, z, cols)).collect();
        let mut t1 = q.clone();
        for (z, &c) in buffer.iter().zip(&ips1) {
            t1.axpy(-c, z, 1.0);
        }
        // Second pass: partial inner products reduced across nodes.
        let ips2: Vec<f64> = buffer.iter().map(|z| reduction_dot(&t1, z, part)).collect();
        let mut u = t1;
        for (z, &c) in buffer.iter().zip(&ips2) {
            u.axpy(-c, z, 1.0);
        }
        let u_norm = reduction_dot(&u, &u, part).sqrt();
        let mut record = CommRecord {
            iteration: iterations,
            node,
            overlap_values: overlap_values_per_node[node],
            first_pass_inner_products: m * (p - 1),
            second_pass_inner_products: m * p * (p - 1),
            extra_sync: p * (p - 1),
        };

        if opts.check_support {
            let z_supports: Vec<Vec<usize>> = buffer.iter().map(support_of).collect();
            debug_assert!(
                support_bound_check(&support_of(&q), &z_supports, &support_of(&u)),
                "Gram-Schmidt support bound violated at iteration {iterations}"
            );
        }

        // The zero test can only happen once the second pass has assembled u.
        if u_norm <= DEGENERACY_RTOL * q_norm.max(1.0) {
            ledger.per_iteration.push(record);
            ws.push(w);
            iterations += 1;
            continue;
        }
        if m > 0 {
            let z = &u / u_norm;
            if buffer.len() == m {
                buffer.remove(0);
            }
            buffer.push(z);
        }
        let gamma = dot_over(&u, &q, cols);
        let alpha = r / gamma;
        record.extra_sync += p - 1;
        x.axpy(alpha, &u, 1.0);
        ledger.per_iteration.push(record);
        ws.push(w);
        advanced += 1;
        iterations += 1;
    }

    let final_norm = system.residual_norm(&x)?;
    let b_norm = system.b().norm();
    let report = SolveReport {
        method: format!("distributed-partial:{m}"),
        strategy: strategy.token(),
        n: system.n(),
        d: system.d(),
        seed: opts.seed,
        iterations,
        advanced_steps: advanced,
        elapsed_seconds: start.elapsed().as_secs_f64(),
        final_relative_residual: if b_norm > 0.0 { final_norm / b_norm } else { 0.0 },
        timed_out,
        x: x.as_slice().to_vec(),
        residual_history: history,
        stopping_log: None,
    };
    Ok(SimOutcome { report, ledger, ws })
}
