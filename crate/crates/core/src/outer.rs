//! The outer-bound candidate class over (X, Y, X̂, Ŷ) and its scalarized
//! solver.
//!
//! Candidates are joints whose (X, Y) marginal matches the source, whose
//! chain X − X̂Ŷ − Y holds, and whose expected distortions stay within the
//! targets. The solver optimizes the conditional kernel w(x̂ŷ | xy), so the
//! marginal constraint holds by construction; the chain is driven to zero
//! through an escalating exact-penalty on I(X ∧ Y | X̂Ŷ), and the linear
//! distortion constraints are maintained by Dykstra projections.

use crate::instance::ProblemInstance;
use crate::prob::{entropy_of_mass, JointPmf, ProbError, Tolerances};
use crate::region::{BoundKind, RateRegion, RegionEntry};
use crate::solver::{
    dirichlet_row, dykstra_project, run_multistart, scalarized_vertex, start_rng, HalfSpace,
    SolverOptions,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("targets ({d1}, {d2}) lie below the distortion floor ({f1}, {f2})")]
    InfeasibleTargets { d1: f64, d2: f64, f1: f64, f2: f64 },
    #[error("weights must be nonnegative with a positive sum")]
    BadWeights,
    #[error("weight sweep is empty")]
    EmptySweep,
    #[error("certified mode covers at most {cap} joint cells, instance has {got}")]
    TooLargeForCertified { cap: usize, got: usize },
    #[error(transparent)]
    Prob(#[from] ProbError),
}

#[derive(Debug, Error)]
pub enum MembershipError {
    #[error("candidate axes do not match the instance alphabets")]
    WrongAxes,
    #[error("candidate rejected: {reasons:?}")]
    Rejected {
        residuals: Residuals,
        reasons: Vec<String>,
    },
    #[error(transparent)]
    Prob(#[from] ProbError),
}

/// Feasibility residuals of a candidate joint.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Residuals {
    /// L1 distance between the candidate's (X, Y) marginal and the source.
    pub marginal_l1: f64,
    /// I(X ∧ Y | X̂Ŷ) in bits.
    pub markov_gap_bits: f64,
    /// max(0, E[d] − D) per source.
    pub distortion_excess: (f64, f64),
}

impl Residuals {
    pub fn within(&self, tol: f64) -> bool {
        self.marginal_l1 <= tol
            && self.markov_gap_bits <= tol
            && self.distortion_excess.0 <= tol
            && self.distortion_excess.1 <= tol
    }

    pub fn worst(&self) -> f64 {
        self.marginal_l1
            .max(self.markov_gap_bits)
            .max(self.distortion_excess.0)
            .max(self.distortion_excess.1)
    }
}

/// A candidate member of the outer-bound distribution class.
#[derive(Debug, Clone)]
pub struct OuterCandidate {
    /// Joint over axes (X, Y, X̂, Ŷ).
    pub joint: JointPmf,
    pub residuals: Residuals,
}

/// Rate floors defining one member polyhedron
/// `{R1 ≥ r1_floor, R2 ≥ r2_floor, R1+R2 ≥ sum_floor}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateTriple {
    pub r1_floor: f64,
    pub r2_floor: f64,
    pub sum_floor: f64,
}

impl RateTriple {
    pub fn new(r1_floor: f64, r2_floor: f64, sum_floor: f64) -> Result<Self, SolveError> {
        let t = Self {
            r1_floor,
            r2_floor,
            sum_floor,
        };
        if [r1_floor, r2_floor, sum_floor]
            .iter()
            .any(|v| !v.is_finite() || *v < 0.0)
        {
            return Err(SolveError::BadWeights);
        }
        Ok(t)
    }

    /// The two vertices of the polyhedron, dominant corners first/second.
    pub fn vertices(&self) -> [(f64, f64); 2] {
        [
            (
                self.r1_floor,
                self.r2_floor.max(self.sum_floor - self.r1_floor),
            ),
            (
                self.r1_floor.max(self.sum_floor - self.r2_floor),
                self.r2_floor,
            ),
        ]
    }

    /// Minimum of `mu1·R1 + mu2·R2` over the polyhedron and the vertex
    /// attaining it (ties toward the first vertex).
    pub fn scalarized(&self, mu: (f64, f64)) -> (f64, (f64, f64)) {
        let (value, _, _, point) =
            scalarized_vertex(self.r1_floor, self.r2_floor, self.sum_floor, mu);
        (value, point)
    }

    /// Does (r1, r2) satisfy all three inequalities, with `slack` bits of grace?
    pub fn admits(&self, r1: f64, r2: f64, slack: f64) -> bool {
        r1 + slack >= self.r1_floor
            && r2 + slack >= self.r2_floor
            && r1 + r2 + slack >= self.sum_floor
    }
}

/// Expected distortions of a four-axis joint under the instance's measures.
pub fn expected_distortions(q: &JointPmf, inst: &ProblemInstance) -> (f64, f64) {
    let mut e1 = 0.0;
    let mut e2 = 0.0;
    for (idx, &v) in q.mass().iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        let c = q.coords_of(idx);
        e1 += v * inst.d1.get(c[0], c[2]);
        e2 += v * inst.d2.get(c[1], c[3]);
    }
    (e1, e2)
}

/// Compute all residuals of `q` against the instance.
pub fn residuals_of(q: &JointPmf, inst: &ProblemInstance) -> Result<Residuals, MembershipError> {
    let expected_axes = [
        &inst.x_alphabet,
        &inst.y_alphabet,
        &inst.xhat_alphabet,
        &inst.yhat_alphabet,
    ];
    if q.num_axes() != 4
        || q.axes()
            .iter()
            .zip(expected_axes)
            .any(|(a, b)| a.size() != b.size())
    {
        return Err(MembershipError::WrongAxes);
    }
    let marginal = q.marginalize(&[0, 1])?;
    let marginal_l1 = marginal
        .l1_distance(&inst.source)
        .map_err(|_| MembershipError::WrongAxes)?;
    let markov_gap_bits = q.markov_gap(&[0], &[1], &[2, 3])?;
    let (e1, e2) = expected_distortions(q, inst);
    Ok(Residuals {
        marginal_l1,
        markov_gap_bits,
        distortion_excess: (
            (e1 - inst.targets.0).max(0.0),
            (e2 - inst.targets.1).max(0.0),
        ),
    })
}

/// Accept `q` as an outer candidate iff every residual is within
/// `tols.feasibility_tol`; otherwise report what failed.
pub fn membership_check(
    q: &JointPmf,
    inst: &ProblemInstance,
    tols: &Tolerances,
) -> Result<OuterCandidate, MembershipError> {
    let residuals = residuals_of(q, inst)?;
    let tol = tols.feasibility_tol;
    let mut reasons = Vec::new();
    if residuals.marginal_l1 > tol {
        reasons.push(format!("marginal residual {:.3e}", residuals.marginal_l1));
    }
    if residuals.markov_gap_bits > tol {
        reasons.push(format!("markov gap {:.3e} bits", residuals.markov_gap_bits));
    }
    if residuals.distortion_excess.0 > tol {
        reasons.push(format!(
            "distortion 1 excess {:.3e}",
            residuals.distortion_excess.0
        ));
    }
    if residuals.distortion_excess.1 > tol {
        reasons.push(format!(
            "distortion 2 excess {:.3e}",
            residuals.distortion_excess.1
        ));
    }
    if reasons.is_empty() {
        Ok(OuterCandidate {
            joint: q.clone(),
            residuals,
        })
    } else {
        Err(MembershipError::Rejected { residuals, reasons })
    }
}

/// `(I(X ∧ X̂Ŷ | Y), I(Y ∧ X̂Ŷ | X), I(XY ∧ X̂Ŷ))` in bits.
pub fn rate_triple(candidate: &OuterCandidate) -> RateTriple {
    let q = &candidate.joint;
    let r1 = q
        .conditional_mutual_information(&[0], &[2, 3], &[1])
        .expect("axes fixed by construction");
    let r2 = q
        .conditional_mutual_information(&[1], &[2, 3], &[0])
        .expect("axes fixed by construction");
    let sum = q
        .mutual_information(&[0, 1], &[2, 3])
        .expect("axes fixed by construction");
    RateTriple {
        r1_floor: r1.max(0.0),
        r2_floor: r2.max(0.0),
        sum_floor: sum.max(0.0),
    }
}

/// Result of one scalarized solve.
#[derive(Debug, Clone)]
pub struct OuterSolution {
    /// Scalarized support value (bits, no penalty terms).
    pub value: f64,
    pub candidate: OuterCandidate,
    pub triple: RateTriple,
    /// Supporting point of the polyhedron in the solved direction.
    pub support_point: (f64, f64),
    /// Converged and feasible at `feasibility_tol`.
    pub converged: bool,
    pub start_index: usize,
}

// ---------------------------------------------------------------------------
// solver internals

/// Problem geometry shared across starts.
struct Workspace {
    cells: usize, // |X|·|Y| conditioning cells
    m: usize,     // |X̂|·|Ŷ| kernel columns
    nx: usize,
    ny: usize,
    p_src: Vec<f64>,  // flat (x·ny + y)
    log_p: Vec<f64>,  // log2 of p_src, 0 where p = 0
    log_px: Vec<f64>, // per x
    log_py: Vec<f64>, // per y
    h_x: f64,
    h_y: f64,
    h_xy: f64,
    d1k: Vec<f64>, // (c, k) -> d1(x, x̂)
    d2k: Vec<f64>,
    halfspaces: Vec<HalfSpace>,
    targets: (f64, f64),
    /// Deterministic per-symbol distortion minimizers; E[d] equals the floor.
    w_floor: Vec<f64>,
    floors: (f64, f64),
}

struct Eval {
    f: f64, // penalized objective
    value: f64,
    gap: f64,
    e1: f64,
    e2: f64,
    coeffs: [f64; 3],
}

impl Workspace {
    fn new(inst: &ProblemInstance) -> Self {
        let nx = inst.x_alphabet.size();
        let ny = inst.y_alphabet.size();
        let nxh = inst.xhat_alphabet.size();
        let nyh = inst.yhat_alphabet.size();
        let cells = nx * ny;
        let m = nxh * nyh;
        let mut p_src = vec![0.0; cells];
        for x in 0..nx {
            for y in 0..ny {
                p_src[x * ny + y] = inst.source.get(&[x, y]);
            }
        }
        let px: Vec<f64> = (0..nx).map(|x| (0..ny).map(|y| p_src[x * ny + y]).sum()).collect();
        let py: Vec<f64> = (0..ny).map(|y| (0..nx).map(|x| p_src[x * ny + y]).sum()).collect();
        let logs = |v: &[f64]| v.iter().map(|&p| if p > 0.0 { p.log2() } else { 0.0 }).collect();
        let mut d1k = vec![0.0; cells * m];
        let mut d2k = vec![0.0; cells * m];
        for x in 0..nx {
            for y in 0..ny {
                let c = x * ny + y;
                for xh in 0..nxh {
                    for yh in 0..nyh {
                        let k = xh * nyh + yh;
                        d1k[c * m + k] = inst.d1.get(x, xh);
                        d2k[c * m + k] = inst.d2.get(y, yh);
                    }
                }
            }
        }
        let weighted = |dk: &[f64]| -> Vec<f64> {
            (0..cells * m)
                .map(|i| p_src[i / m] * dk[i])
                .collect()
        };
        let halfspaces = vec![
            HalfSpace {
                normal: weighted(&d1k),
                offset: inst.targets.0,
            },
            HalfSpace {
                normal: weighted(&d2k),
                offset: inst.targets.1,
            },
        ];
        let mut w_floor = vec![0.0; cells * m];
        for x in 0..nx {
            let bx = (0..nxh)
                .min_by(|&a, &b| inst.d1.get(x, a).total_cmp(&inst.d1.get(x, b)))
                .unwrap_or(0);
            for y in 0..ny {
                let by = (0..nyh)
                    .min_by(|&a, &b| inst.d2.get(y, a).total_cmp(&inst.d2.get(y, b)))
                    .unwrap_or(0);
                w_floor[(x * ny + y) * m + bx * nyh + by] = 1.0;
            }
        }
        let floors = inst.distortion_floor();
        Self {
            cells,
            m,
            nx,
            ny,
            log_px: logs(&px),
            log_py: logs(&py),
            log_p: logs(&p_src),
            h_x: entropy_of_mass(&px),
            h_y: entropy_of_mass(&py),
            h_xy: entropy_of_mass(&p_src),
            p_src,
            d1k,
            d2k,
            halfspaces,
            targets: inst.targets,
            w_floor,
            floors,
        }
    }

    /// Restore the linear distortion constraints exactly: Dykstra for
    /// proximity, then a blend toward the floor kernel (the constraints are
    /// linear in w, so the blend coefficient solves in closed form).
    fn project_feasible(&self, w: &mut [f64]) {
        if self
            .halfspaces
            .iter()
            .all(|h| h.violation(w) <= 1e-12)
        {
            return;
        }
        dykstra_project(w, self.cells, self.m, &self.halfspaces);
        let e = |dk: &[f64], w: &[f64]| -> f64 {
            w.iter()
                .enumerate()
                .map(|(i, &v)| self.p_src[i / self.m] * v * dk[i])
                .sum()
        };
        let e1 = e(&self.d1k, w);
        let e2 = e(&self.d2k, w);
        let mut t = 0.0f64;
        if e1 > self.targets.0 && e1 > self.floors.0 {
            t = t.max((e1 - self.targets.0) / (e1 - self.floors.0));
        }
        if e2 > self.targets.1 && e2 > self.floors.1 {
            t = t.max((e2 - self.targets.1) / (e2 - self.floors.1));
        }
        if t > 0.0 {
            let t = (t * (1.0 + 1e-12)).min(1.0);
            for (v, &f) in w.iter_mut().zip(&self.w_floor) {
                *v = (1.0 - t) * *v + t * f;
            }
        }
    }

    fn marginals(&self, w: &[f64], q: &mut [f64], qa: &mut [f64], qxa: &mut [f64], qya: &mut [f64]) {
        qa.iter_mut().for_each(|v| *v = 0.0);
        qxa.iter_mut().for_each(|v| *v = 0.0);
        qya.iter_mut().for_each(|v| *v = 0.0);
        let (m, ny) = (self.m, self.ny);
        for c in 0..self.cells {
            let p = self.p_src[c];
            let (x, y) = (c / ny, c % ny);
            for k in 0..m {
                let v = p * w[c * m + k];
                q[c * m + k] = v;
                qa[k] += v;
                qxa[x * m + k] += v;
                qya[y * m + k] += v;
            }
        }
    }

    fn evaluate(&self, w: &[f64], mu: (f64, f64), beta: f64, scratch: &mut Scratch) -> Eval {
        self.marginals(w, &mut scratch.q, &mut scratch.qa, &mut scratch.qxa, &mut scratch.qya);
        let h_full = entropy_of_mass(&scratch.q);
        let h_a = entropy_of_mass(&scratch.qa);
        let h_xa = entropy_of_mass(&scratch.qxa);
        let h_ya = entropy_of_mass(&scratch.qya);
        let r1 = (self.h_xy - self.h_y - h_full + h_ya).max(0.0);
        let r2 = (self.h_xy - self.h_x - h_full + h_xa).max(0.0);
        let rsum = (self.h_xy + h_a - h_full).max(0.0);
        let gap = (h_xa + h_ya - h_full - h_a).max(0.0);
        let (value, coeffs, _, _) = scalarized_vertex(r1, r2, rsum, mu);
        let mut e1 = 0.0;
        let mut e2 = 0.0;
        for (i, &qv) in scratch.q.iter().enumerate() {
            e1 += qv * self.d1k[i];
            e2 += qv * self.d2k[i];
        }
        Eval {
            f: value + beta * gap,
            value,
            gap,
            e1,
            e2,
            coeffs,
        }
    }

    /// Gradient of the penalized objective with respect to w, using the
    /// active linearization picked by the last evaluation.
    fn gradient(&self, eval: &Eval, beta: f64, scratch: &mut Scratch) {
        let (m, ny) = (self.m, self.ny);
        let [c1, c2, cs] = eval.coeffs;
        for c in 0..self.cells {
            let p = self.p_src[c];
            let (x, y) = (c / ny, c % ny);
            for k in 0..m {
                let i = c * m + k;
                let qv = scratch.q[i];
                if p == 0.0 || qv == 0.0 {
                    scratch.grad[i] = 0.0;
                    continue;
                }
                let l = qv.log2();
                let la = safe_log2(scratch.qa[k]);
                let lxa = safe_log2(scratch.qxa[x * m + k]);
                let lya = safe_log2(scratch.qya[y * m + k]);
                let lp = self.log_p[c];
                let dr1 = -lp + self.log_py[y] + l - lya;
                let dr2 = -lp + self.log_px[x] + l - lxa;
                let drs = -lp - la + l;
                let dgap = -lxa - lya + l + la;
                scratch.grad[i] = p * (c1 * dr1 + c2 * dr2 + cs * drs + beta * dgap);
            }
        }
    }

    fn joint_pmf(&self, w: &[f64], inst: &ProblemInstance) -> JointPmf {
        let (m, ny) = (self.m, self.ny);
        let nyh = inst.yhat_alphabet.size();
        let nxh = inst.xhat_alphabet.size();
        let mut mass = vec![0.0; self.cells * m];
        // reorder from (c, k) = (x·ny+y, x̂·nyh+ŷ) into (x, y, x̂, ŷ) row-major
        for c in 0..self.cells {
            let (x, y) = (c / ny, c % ny);
            for k in 0..m {
                let (xh, yh) = (k / nyh, k % nyh);
                let idx = ((x * ny + y) * nxh + xh) * nyh + yh;
                mass[idx] = self.p_src[c] * w[c * m + k];
            }
        }
        // wash out accumulated float dust so the constructor's 1e-12 gate holds
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > 1e-15 {
            mass.iter_mut().for_each(|v| *v /= total);
        }
        JointPmf::new(
            vec![
                inst.x_alphabet.clone(),
                inst.y_alphabet.clone(),
                inst.xhat_alphabet.clone(),
                inst.yhat_alphabet.clone(),
            ],
            mass,
        )
        .expect("kernel rows are simplices over positive source mass")
    }
}

#[inline]
fn safe_log2(v: f64) -> f64 {
    if v > 0.0 {
        v.log2()
    } else {
        0.0
    }
}

struct Scratch {
    q: Vec<f64>,
    qa: Vec<f64>,
    qxa: Vec<f64>,
    qya: Vec<f64>,
    grad: Vec<f64>,
}

impl Scratch {
    fn new(ws: &Workspace) -> Self {
        Self {
            q: vec![0.0; ws.cells * ws.m],
            qa: vec![0.0; ws.m],
            qxa: vec![0.0; ws.nx * ws.m],
            qya: vec![0.0; ws.ny * ws.m],
            grad: vec![0.0; ws.cells * ws.m],
        }
    }
}

const MAX_STAGE_ITERS: usize = 400;
const MAX_WARMUP_ITERS: usize = 150;
const QUIET_ITERS_TO_CONVERGE: usize = 10;

/// One start: exponentiated-gradient descent over the kernel rows with an
/// escalating Markov penalty, distortion kept feasible by projection.
/// Returns the best chain-feasible iterate seen anywhere on the trajectory
/// (the final iterate when none qualified) plus the convergence flag.
fn solve_from(
    ws: &Workspace,
    mut w: Vec<f64>,
    mu: (f64, f64),
    opts: &SolverOptions,
) -> (Vec<f64>, bool) {
    let mut scratch = Scratch::new(ws);
    ws.project_feasible(&mut w);
    // unconverged means the final penalty stage never met the quiet rule
    let mut last_stage_converged = true;
    let mut best_feasible: Option<(f64, Vec<f64>)> = None;
    let track = |eval: &Eval, w: &[f64], best: &mut Option<(f64, Vec<f64>)>| {
        if eval.gap <= opts.feasibility_tol
            && best.as_ref().map_or(true, |(v, _)| eval.value < *v)
        {
            *best = Some((eval.value, w.to_vec()));
        }
    };
    let stages = opts.beta_schedule.len();
    for (stage, &beta) in opts.beta_schedule.iter().enumerate() {
        let iter_budget = if stage + 1 == stages {
            MAX_STAGE_ITERS
        } else {
            MAX_WARMUP_ITERS
        };
        let mut eval = ws.evaluate(&w, mu, beta, &mut scratch);
        track(&eval, &w, &mut best_feasible);
        let mut eta = 1.0f64;
        let mut quiet = 0usize;
        let mut converged = false;
        for _ in 0..iter_budget {
            ws.gradient(&eval, beta, &mut scratch);
            let mut accepted = false;
            let mut trial = w.clone();
            for _ in 0..28 {
                for (i, t) in trial.iter_mut().enumerate() {
                    let arg = (-eta * scratch.grad[i]).clamp(-50.0, 50.0);
                    *t = w[i] * arg.exp();
                }
                for c in 0..ws.cells {
                    let row = &mut trial[c * ws.m..(c + 1) * ws.m];
                    let s: f64 = row.iter().sum();
                    if s > 0.0 {
                        row.iter_mut().for_each(|v| *v /= s);
                    }
                }
                ws.project_feasible(&mut trial);
                let cand = ws.evaluate(&trial, mu, beta, &mut scratch);
                if cand.f <= eval.f {
                    let delta = eval.f - cand.f;
                    w.copy_from_slice(&trial);
                    eval = cand;
                    track(&eval, &w, &mut best_feasible);
                    eta = (eta * 1.25).min(1e4);
                    accepted = true;
                    if delta < opts.objective_tol {
                        quiet += 1;
                    } else {
                        quiet = 0;
                    }
                    break;
                }
                eta *= 0.5;
                trial.copy_from_slice(&w);
            }
            if !accepted {
                converged = true;
                break;
            }
            if quiet >= QUIET_ITERS_TO_CONVERGE {
                converged = true;
                break;
            }
        }
        last_stage_converged = converged;
    }
    match best_feasible {
        Some((_, best)) => (best, last_stage_converged),
        None => (w, last_stage_converged),
    }
}

fn deterministic_starts(ws: &Workspace, inst: &ProblemInstance) -> Vec<Vec<f64>> {
    let (cells, m) = (ws.cells, ws.m);
    let nyh = inst.yhat_alphabet.size();
    let smooth = |mut w: Vec<f64>| -> Vec<f64> {
        let eps = 1e-9;
        for c in 0..cells {
            let row = &mut w[c * m..(c + 1) * m];
            let s: f64 = row.iter().sum();
            for v in row.iter_mut() {
                *v = (1.0 - eps) * (if s > 0.0 { *v / s } else { 0.0 }) + eps / m as f64;
            }
        }
        w
    };
    let mut starts = Vec::new();
    // per-symbol distortion minimizers: always floor-feasible
    let argmin_x: Vec<usize> = (0..ws.nx)
        .map(|x| {
            (0..inst.xhat_alphabet.size())
                .min_by(|&a, &b| inst.d1.get(x, a).total_cmp(&inst.d1.get(x, b)))
                .unwrap_or(0)
        })
        .collect();
    let argmin_y: Vec<usize> = (0..ws.ny)
        .map(|y| {
            (0..inst.yhat_alphabet.size())
                .min_by(|&a, &b| inst.d2.get(y, a).total_cmp(&inst.d2.get(y, b)))
                .unwrap_or(0)
        })
        .collect();
    let mut w_id = vec![0.0; cells * m];
    for c in 0..cells {
        let (x, y) = (c / ws.ny, c % ws.ny);
        w_id[c * m + argmin_x[x] * nyh + argmin_y[y]] = 1.0;
    }
    starts.push(smooth(w_id));
    // best constant reconstructions
    let (b1, b2) = inst.best_constants();
    let mut w_const = vec![0.0; cells * m];
    for c in 0..cells {
        w_const[c * m + b1 * nyh + b2] = 1.0;
    }
    starts.push(smooth(w_const));
    // maximum-entropy kernel
    starts.push(vec![1.0 / m as f64; cells * m]);
    // product of the two single-source rate-distortion channels
    let nxh = inst.xhat_alphabet.size();
    if let (Ok(px), Ok(py)) = (inst.source.marginalize(&[0]), inst.source.marginalize(&[1])) {
        let w1 = crate::region::blahut_arimoto_detail(&px, &inst.d1, inst.targets.0);
        let w2 = crate::region::blahut_arimoto_detail(&py, &inst.d2, inst.targets.1);
        if let (Ok((_, w1)), Ok((_, w2))) = (w1, w2) {
            let mut w = vec![0.0; cells * m];
            for c in 0..cells {
                let (x, y) = (c / ws.ny, c % ws.ny);
                for xh in 0..nxh {
                    for yh in 0..nyh {
                        w[c * m + xh * nyh + yh] = w1[x * nxh + xh] * w2[y * nyh + yh];
                    }
                }
            }
            starts.push(smooth(w));
        }
    }
    // conditional rate-distortion channels with the other source pinned to
    // its per-symbol reconstruction
    if let Ok((_, wz)) = crate::region::conditional_rd_channel(&inst.source, &inst.d1, inst.targets.0)
    {
        let mut w = vec![0.0; cells * m];
        for c in 0..cells {
            let (x, y) = (c / ws.ny, c % ws.ny);
            for xh in 0..nxh {
                w[c * m + xh * nyh + argmin_y[y]] = wz[(x * ws.ny + y) * nxh + xh];
            }
        }
        starts.push(smooth(w));
    }
    if let Ok(flipped) = inst.source.permute_axes(&[1, 0]) {
        if let Ok((_, wz)) = crate::region::conditional_rd_channel(&flipped, &inst.d2, inst.targets.1)
        {
            let mut w = vec![0.0; cells * m];
            for c in 0..cells {
                let (x, y) = (c / ws.ny, c % ws.ny);
                for yh in 0..nyh {
                    w[c * m + argmin_x[x] * nyh + yh] = wz[(y * ws.nx + x) * nyh + yh];
                }
            }
            starts.push(smooth(w));
        }
    }
    starts
}

fn check_targets(inst: &ProblemInstance) -> Result<(), SolveError> {
    let (f1, f2) = inst.distortion_floor();
    let (d1, d2) = inst.targets;
    if d1 < f1 - 1e-12 || d2 < f2 - 1e-12 {
        return Err(SolveError::InfeasibleTargets { d1, d2, f1, f2 });
    }
    Ok(())
}

fn check_weights(mu: (f64, f64)) -> Result<(), SolveError> {
    if mu.0 < 0.0 || mu.1 < 0.0 || mu.0 + mu.1 <= 0.0 || !(mu.0 + mu.1).is_finite() {
        return Err(SolveError::BadWeights);
    }
    Ok(())
}

/// Best local minimum of the scalarized support over the candidate class,
/// across the option's multi-starts. The result is an upper estimate of the
/// true scalarized minimum: the search is nonconvex and carries no global
/// certificate.
pub fn scalarized_minimum(
    inst: &ProblemInstance,
    mu: (f64, f64),
    opts: &SolverOptions,
) -> Result<OuterSolution, SolveError> {
    scalarized_minimum_with(inst, mu, opts, &[])
}

/// As [`scalarized_minimum`], with caller-supplied warm starts appended to
/// the start list (used when tracing regions and by the sandwich driver).
pub fn scalarized_minimum_with(
    inst: &ProblemInstance,
    mu: (f64, f64),
    opts: &SolverOptions,
    extra_starts: &[Vec<f64>],
) -> Result<OuterSolution, SolveError> {
    check_weights(mu)?;
    check_targets(inst)?;
    let ws = Workspace::new(inst);
    let mut starts = deterministic_starts(&ws, inst);
    for extra in extra_starts {
        if extra.len() == ws.cells * ws.m {
            starts.push(extra.clone());
        }
    }
    let n_random = opts.starts.saturating_sub(starts.len());
    for s in 0..n_random {
        let mut rng = start_rng(opts.seed, s);
        let mut w = Vec::with_capacity(ws.cells * ws.m);
        for _ in 0..ws.cells {
            w.extend(dirichlet_row(&mut rng, ws.m));
        }
        starts.push(w);
    }

    let results = run_multistart(starts.len(), |i| {
        let (w, converged) = solve_from(&ws, starts[i].clone(), mu, opts);
        (i, w, converged)
    });

    let mut best: Option<(f64, usize, OuterSolution)> = None;
    for (i, w, stage_converged) in results {
        let joint = ws.joint_pmf(&w, inst);
        let residuals = residuals_of(&joint, inst).expect("axes are the instance's");
        let accepted = residuals.within(opts.feasibility_tol);
        let candidate = OuterCandidate {
            joint,
            residuals,
        };
        let triple = rate_triple(&candidate);
        let (value, support_point) = triple.scalarized(mu);
        let solution = OuterSolution {
            value,
            candidate,
            triple,
            support_point,
            converged: accepted && stage_converged,
            start_index: i,
        };
        // feasible results outrank infeasible ones, then value, then start order
        let key = (
            if accepted { 0.0 } else { 1.0 },
            value,
            i as f64,
        );
        let better = match &best {
            None => true,
            Some((_, _, b)) => {
                let bkey = (
                    if b.converged || b.candidate.residuals.within(opts.feasibility_tol) {
                        0.0
                    } else {
                        1.0
                    },
                    b.value,
                    b.start_index as f64,
                );
                (key.0, key.1, key.2) < bkey
            }
        };
        if better {
            best = Some((value, i, solution));
        }
    }
    Ok(best.expect("at least one start ran").2)
}

/// Trace the outer region by sweeping scalarization directions. Adjacent
/// directions warm-start each other.
pub fn trace_region(
    inst: &ProblemInstance,
    weight_sweep: &[(f64, f64)],
    opts: &SolverOptions,
) -> Result<RateRegion, SolveError> {
    if weight_sweep.is_empty() {
        return Err(SolveError::EmptySweep);
    }
    let mut entries = Vec::with_capacity(weight_sweep.len());
    let mut warm: Vec<Vec<f64>> = Vec::new();
    for &mu in weight_sweep {
        let solution = scalarized_minimum_with(inst, mu, opts, &warm)?;
        warm = vec![kernel_matrix(&solution.candidate.joint, inst)];
        entries.push(RegionEntry {
            mu,
            triple: solution.triple,
            support: solution.value,
            support_point: solution.support_point,
            candidate_id: format!("outer-start{}", solution.start_index),
            feasibility_residual: solution.candidate.residuals.worst(),
            converged: solution.converged,
        });
    }
    Ok(RateRegion::from_entries(BoundKind::Outer, entries))
}

/// Extract the conditional kernel w(x̂ŷ | xy) of a four-axis joint in the
/// solver's row layout; rows over zero-mass source cells left uniform.
pub fn kernel_matrix(joint: &JointPmf, inst: &ProblemInstance) -> Vec<f64> {
    let ny = inst.y_alphabet.size();
    let nyh = joint.axes()[3].size();
    let nxh = joint.axes()[2].size();
    let m = nxh * nyh;
    let cells = inst.x_alphabet.size() * ny;
    let mut w = vec![0.0; cells * m];
    for c in 0..cells {
        let (x, y) = (c / ny, c % ny);
        let p = inst.source.get(&[x, y]);
        for xh in 0..nxh {
            for yh in 0..nyh {
                let k = xh * nyh + yh;
                w[c * m + k] = if p > 0.0 {
                    joint.get(&[x, y, xh, yh]) / p
                } else {
                    1.0 / m as f64
                };
            }
        }
        let row = &mut w[c * m..(c + 1) * m];
        let s: f64 = row.iter().sum();
        if s > 0.0 {
            row.iter_mut().for_each(|v| *v /= s);
        }
    }
    w
}

/// A grid scan with local refinement for tiny instances. `lower` is a
/// rigorous but loose floor (grid best minus an entropy continuity modulus);
/// `refined` is the polished upper estimate.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CertifiedBracket {
    pub lower: f64,
    pub upper: f64,
    pub grid_value: f64,
    pub refined_value: f64,
    pub modulus: f64,
    pub grid_points: u64,
}

const CERTIFIED_CELL_CAP: usize = 16;

/// Exhaustive kernel-grid scan (step 1/K per row) over tiny instances,
/// followed by one local refinement from the best grid point.
pub fn certified_bracket(
    inst: &ProblemInstance,
    mu: (f64, f64),
    opts: &SolverOptions,
) -> Result<CertifiedBracket, SolveError> {
    check_weights(mu)?;
    check_targets(inst)?;
    let ws = Workspace::new(inst);
    let total_cells = ws.cells * ws.m;
    if total_cells > CERTIFIED_CELL_CAP {
        return Err(SolveError::TooLargeForCertified {
            cap: CERTIFIED_CELL_CAP,
            got: total_cells,
        });
    }
    let k = opts.grid_k.max(1);
    let rows = compositions(k, ws.m);
    let grid_rows: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| r.iter().map(|&c| c as f64 / k as f64).collect())
        .collect();

    // continuity moduli for the relaxed feasibility filter and the value
    let theta = ((ws.m as f64) / k as f64).min(0.5);
    let mod_h = |size: usize| -> f64 {
        if theta <= 0.0 {
            0.0
        } else {
            theta * ((size as f64) / theta).log2()
        }
    };
    let mod_full = mod_h(ws.cells * ws.m);
    let mod_xa = mod_h(ws.nx * ws.m);
    let mod_ya = mod_h(ws.ny * ws.m);
    let mod_a = mod_h(ws.m);
    let gap_relax = mod_xa + mod_ya + mod_full + mod_a + opts.feasibility_tol;
    let mod_r1 = mod_full + mod_ya;
    let mod_r2 = mod_full + mod_xa;
    let mod_rs = mod_full + mod_a;
    let (mu1, mu2) = mu;
    let modulus = (mu1 * mod_r1 + mu2 * mod_r2)
        .max((mu1 - mu2).abs() * mod_r1 + mu2 * mod_rs)
        .max((mu2 - mu1).abs() * mod_r2 + mu1 * mod_rs);
    let d_relax = ws.d1k.iter().chain(&ws.d2k).fold(0.0, |a: f64, &b| a.max(b)) * theta;

    let n_rows = grid_rows.len() as u64;
    let grid_points = n_rows.pow(ws.cells as u32);

    use rayon::prelude::*;
    let best = (0..grid_rows.len())
        .into_par_iter()
        .map(|first| {
            let mut scratch = Scratch::new(&ws);
            let mut w = vec![0.0; ws.cells * ws.m];
            w[..ws.m].copy_from_slice(&grid_rows[first]);
            let mut stack = vec![0usize; ws.cells];
            stack[0] = first;
            let mut local_best: Option<(f64, Vec<f64>)> = None;
            scan_rows(
                &ws,
                &grid_rows,
                &mut w,
                1,
                mu,
                gap_relax,
                d_relax,
                &mut scratch,
                &mut local_best,
            );
            local_best
        })
        .reduce(
            || None,
            |a, b| match (a, b) {
                (None, x) => x,
                (x, None) => x,
                (Some(a), Some(b)) => {
                    if a.0 <= b.0 {
                        Some(a)
                    } else {
                        Some(b)
                    }
                }
            },
        );

    let (grid_value, grid_w) = match best {
        Some((v, w)) => (v, w),
        None => (f64::INFINITY, vec![1.0 / ws.m as f64; ws.cells * ws.m]),
    };

    // local refinement from the best grid point
    let (w_ref, _) = solve_from(&ws, grid_w, mu, opts);
    let joint = ws.joint_pmf(&w_ref, inst);
    let residuals = residuals_of(&joint, inst).expect("instance axes");
    let cand = OuterCandidate { joint, residuals };
    let refined_value = rate_triple(&cand).scalarized(mu).0;
    let refined_ok = residuals.within(opts.feasibility_tol);
    let upper = if refined_ok {
        refined_value
    } else {
        grid_value.max(refined_value)
    };
    Ok(CertifiedBracket {
        lower: (grid_value.min(refined_value) - modulus).max(0.0),
        upper,
        grid_value,
        refined_value,
        modulus,
        grid_points,
    })
}

#[allow(clippy::too_many_arguments)]
fn scan_rows(
    ws: &Workspace,
    grid_rows: &[Vec<f64>],
    w: &mut Vec<f64>,
    depth: usize,
    mu: (f64, f64),
    gap_relax: f64,
    d_relax: f64,
    scratch: &mut Scratch,
    best: &mut Option<(f64, Vec<f64>)>,
) {
    if depth == ws.cells {
        let eval = ws.evaluate(w, mu, 0.0, scratch);
        if eval.gap > gap_relax {
            return;
        }
        if eval.e1 > ws.targets.0 + d_relax + 1e-12 || eval.e2 > ws.targets.1 + d_relax + 1e-12 {
            return;
        }
        if best.as_ref().map_or(true, |(v, _)| eval.value < *v) {
            *best = Some((eval.value, w.clone()));
        }
        return;
    }
    for row in grid_rows {
        w[depth * ws.m..(depth + 1) * ws.m].copy_from_slice(row);
        scan_rows(ws, grid_rows, w, depth + 1, mu, gap_relax, d_relax, scratch, best);
    }
}

/// All vectors of `parts` nonnegative integers summing to `total`.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    fn rec(total: usize, parts: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in 0..=total {
            prefix.push(first);
            rec(total - first, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    let mut prefix = Vec::new();
    rec(total, parts, &mut prefix, &mut out);
    out
}

/// Identity-style candidate q = p(xy)·δ(x̂=x)·δ(ŷ=y); needs matched-size
/// reconstruction alphabets.
pub fn identity_candidate(inst: &ProblemInstance) -> Option<JointPmf> {
    let nx = inst.x_alphabet.size();
    let ny = inst.y_alphabet.size();
    let nxh = inst.xhat_alphabet.size();
    let nyh = inst.yhat_alphabet.size();
    if nxh < nx || nyh < ny {
        return None;
    }
    let mut mass = vec![0.0; nx * ny * nxh * nyh];
    for x in 0..nx {
        for y in 0..ny {
            let idx = ((x * ny + y) * nxh + x) * nyh + y;
            mass[idx] = inst.source.get(&[x, y]);
        }
    }
    JointPmf::new(
        vec![
            inst.x_alphabet.clone(),
            inst.y_alphabet.clone(),
            inst.xhat_alphabet.clone(),
            inst.yhat_alphabet.clone(),
        ],
        mass,
    )
    .ok()
}

pub use crate::solver::default_directions;
