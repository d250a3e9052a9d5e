//! The achievability-side candidate class: auxiliary test channels
//! U ← X and V ← Y with decoder reconstruction maps, the induced rate
//! triples, the scalarized solver, and the intersection-degeneracy check
//! against the outer class.
//!
//! By construction every candidate's five-way joint factorizes as
//! p(xy)·t1(u|x)·t2(v|y), so the long chain holds exactly and only the
//! distortion constraints can bind.

use crate::instance::ProblemInstance;
use crate::outer::{RateTriple, SolveError};
use crate::prob::{entropy_of_mass, Alphabet, JointPmf, Kernel, ProbError};
use crate::region::{BoundKind, RateRegion, RegionEntry};
use crate::solver::{
    dirichlet_row, run_multistart, scalarized_vertex, start_rng, SolverOptions,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InnerError {
    #[error("joint must have four axes (X, Y, U, V)")]
    WrongShape,
    #[error(
        "not in the intersection: worst chain gap {gap:.3e} bits exceeds the tolerance {tol:.3e}"
    )]
    NotInIntersection { gap: f64, tol: f64 },
    #[error(transparent)]
    Prob(#[from] ProbError),
}

/// Auxiliary alphabet sizes. The defaults |U| = |X|+2, |V| = |Y|+2 follow
/// the usual support-counting heuristic; no published cardinality bound is
/// known for this class, so reports always record the sizes used.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AuxSizes {
    pub u: usize,
    pub v: usize,
}

impl AuxSizes {
    pub fn defaults_for(inst: &ProblemInstance) -> Self {
        Self {
            u: inst.x_alphabet.size() + 2,
            v: inst.y_alphabet.size() + 2,
        }
    }
}

/// An achievability candidate: test channels plus decoder maps.
#[derive(Debug, Clone)]
pub struct InnerCandidate {
    pub u_alphabet: Alphabet,
    pub v_alphabet: Alphabet,
    /// p(u | x), rows indexed by x.
    pub test_channel_1: Kernel,
    /// p(v | y), rows indexed by y.
    pub test_channel_2: Kernel,
    /// γ1: (u, v) → x̂ index, stored u-major.
    pub gamma1: Vec<usize>,
    /// γ2: (u, v) → ŷ index, stored u-major.
    pub gamma2: Vec<usize>,
}

impl InnerCandidate {
    /// The induced joint over (X, Y, U, V); factorizes bit-for-bit.
    pub fn induced_joint(&self, inst: &ProblemInstance) -> JointPmf {
        let (nx, ny) = (inst.x_alphabet.size(), inst.y_alphabet.size());
        let (nu, nv) = (self.u_alphabet.size(), self.v_alphabet.size());
        let mut mass = vec![0.0; nx * ny * nu * nv];
        for x in 0..nx {
            let t1 = self.test_channel_1.row(x);
            for y in 0..ny {
                let p = inst.source.get(&[x, y]);
                let t2 = self.test_channel_2.row(y);
                for u in 0..nu {
                    for v in 0..nv {
                        mass[((x * ny + y) * nu + u) * nv + v] = p * t1[u] * t2[v];
                    }
                }
            }
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > 1e-15 {
            mass.iter_mut().for_each(|m| *m /= total);
        }
        JointPmf::new(
            vec![
                inst.x_alphabet.clone(),
                inst.y_alphabet.clone(),
                self.u_alphabet.clone(),
                self.v_alphabet.clone(),
            ],
            mass,
        )
        .expect("kernel rows are simplices")
    }

    /// Expected distortions under the candidate's reconstruction maps.
    pub fn achieved_distortions(&self, inst: &ProblemInstance) -> (f64, f64) {
        let joint = self.induced_joint(inst);
        let (nu, nv) = (self.u_alphabet.size(), self.v_alphabet.size());
        let ny = inst.y_alphabet.size();
        let mut e1 = 0.0;
        let mut e2 = 0.0;
        for (idx, &m) in joint.mass().iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            let v = idx % nv;
            let u = (idx / nv) % nu;
            let y = (idx / (nv * nu)) % ny;
            let x = idx / (nv * nu * ny);
            e1 += m * inst.d1.get(x, self.gamma1[u * nv + v]);
            e2 += m * inst.d2.get(y, self.gamma2[u * nv + v]);
        }
        (e1, e2)
    }

    pub fn export(&self, inst: &ProblemInstance) -> InnerCandidateExport {
        let (nu, nv) = (self.u_alphabet.size(), self.v_alphabet.size());
        let triple = rate_triple_inner(self, inst);
        let achieved = self.achieved_distortions(inst);
        InnerCandidateExport {
            u_size: nu,
            v_size: nv,
            tc1: (0..inst.x_alphabet.size())
                .map(|x| self.test_channel_1.row(x).to_vec())
                .collect(),
            tc2: (0..inst.y_alphabet.size())
                .map(|y| self.test_channel_2.row(y).to_vec())
                .collect(),
            gamma1: (0..nu)
                .map(|u| self.gamma1[u * nv..(u + 1) * nv].to_vec())
                .collect(),
            gamma2: (0..nu)
                .map(|u| self.gamma2[u * nv..(u + 1) * nv].to_vec())
                .collect(),
            achieved_d1: achieved.0,
            achieved_d2: achieved.1,
            rate_triple: triple,
        }
    }
}

/// The JSON export schema for candidates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InnerCandidateExport {
    pub u_size: usize,
    pub v_size: usize,
    pub tc1: Vec<Vec<f64>>,
    pub tc2: Vec<Vec<f64>>,
    pub gamma1: Vec<Vec<usize>>,
    pub gamma2: Vec<Vec<usize>>,
    pub achieved_d1: f64,
    pub achieved_d2: f64,
    pub rate_triple: RateTriple,
}

/// Distortion-optimal decoder maps for the given test channels:
/// `γ1(u,v) = argmin_x̂ Σ_x p(x|u,v)·d1(x,x̂)`, ties toward the lowest
/// reconstruction index, zero-probability cells mapped to index 0.
pub fn optimal_reconstruction(
    inst: &ProblemInstance,
    tc1: &Kernel,
    tc2: &Kernel,
) -> (Vec<usize>, Vec<usize>) {
    let (nx, ny) = (inst.x_alphabet.size(), inst.y_alphabet.size());
    let nu = tc1.to_cells();
    let nv = tc2.to_cells();
    // q(x, u, v) and q(y, u, v)
    let mut q_xuv = vec![0.0; nx * nu * nv];
    let mut q_yuv = vec![0.0; ny * nu * nv];
    for x in 0..nx {
        for y in 0..ny {
            let p = inst.source.get(&[x, y]);
            if p == 0.0 {
                continue;
            }
            for u in 0..nu {
                let pu = tc1.row(x)[u];
                if pu == 0.0 {
                    continue;
                }
                for v in 0..nv {
                    let m = p * pu * tc2.row(y)[v];
                    q_xuv[(x * nu + u) * nv + v] += m;
                    q_yuv[(y * nu + u) * nv + v] += m;
                }
            }
        }
    }
    gamma_from_marginals(inst, &q_xuv, &q_yuv, nu, nv)
}

fn gamma_from_marginals(
    inst: &ProblemInstance,
    q_xuv: &[f64],
    q_yuv: &[f64],
    nu: usize,
    nv: usize,
) -> (Vec<usize>, Vec<usize>) {
    let (nx, ny) = (inst.x_alphabet.size(), inst.y_alphabet.size());
    let mut gamma1 = vec![0usize; nu * nv];
    let mut gamma2 = vec![0usize; nu * nv];
    for u in 0..nu {
        for v in 0..nv {
            let mass: f64 = (0..nx).map(|x| q_xuv[(x * nu + u) * nv + v]).sum();
            if mass > 0.0 {
                let mut best = (f64::INFINITY, 0usize);
                for xh in 0..inst.xhat_alphabet.size() {
                    let cost: f64 = (0..nx)
                        .map(|x| q_xuv[(x * nu + u) * nv + v] * inst.d1.get(x, xh))
                        .sum();
                    if cost < best.0 {
                        best = (cost, xh);
                    }
                }
                gamma1[u * nv + v] = best.1;
            }
            let mass: f64 = (0..ny).map(|y| q_yuv[(y * nu + u) * nv + v]).sum();
            if mass > 0.0 {
                let mut best = (f64::INFINITY, 0usize);
                for yh in 0..inst.yhat_alphabet.size() {
                    let cost: f64 = (0..ny)
                        .map(|y| q_yuv[(y * nu + u) * nv + v] * inst.d2.get(y, yh))
                        .sum();
                    if cost < best.0 {
                        best = (cost, yh);
                    }
                }
                gamma2[u * nv + v] = best.1;
            }
        }
    }
    (gamma1, gamma2)
}

/// `(I(XY ∧ U|V), I(XY ∧ V|U), I(XY ∧ UV))` under the induced joint.
pub fn rate_triple_inner(c: &InnerCandidate, inst: &ProblemInstance) -> RateTriple {
    let q = c.induced_joint(inst);
    let r1 = q
        .conditional_mutual_information(&[0, 1], &[2], &[3])
        .expect("fixed axes");
    let r2 = q
        .conditional_mutual_information(&[0, 1], &[3], &[2])
        .expect("fixed axes");
    let sum = q.mutual_information(&[0, 1], &[2, 3]).expect("fixed axes");
    RateTriple {
        r1_floor: r1.max(0.0),
        r2_floor: r2.max(0.0),
        sum_floor: sum.max(0.0),
    }
}

#[derive(Debug, Clone)]
pub struct InnerSolution {
    pub value: f64,
    pub candidate: InnerCandidate,
    pub triple: RateTriple,
    pub support_point: (f64, f64),
    /// Achieved distortions of the returned candidate.
    pub achieved: (f64, f64),
    pub converged: bool,
    pub start_index: usize,
}

// ---------------------------------------------------------------------------
// solver internals

struct InnerWorkspace {
    nx: usize,
    ny: usize,
    nu: usize,
    nv: usize,
    p_src: Vec<f64>, // x·ny + y
    log_p: Vec<f64>,
    h_xy: f64,
    targets: (f64, f64),
    pen_scale: f64,
}

struct InnerScratch {
    q: Vec<f64>,     // x,y,u,v
    q_uv: Vec<f64>,  // u·nv+v
    q_u: Vec<f64>,
    q_v: Vec<f64>,
    q_xyu: Vec<f64>, // (x·ny+y)·nu+u
    q_xyv: Vec<f64>,
    q_xuv: Vec<f64>, // (x·nu+u)·nv+v
    q_yuv: Vec<f64>,
    g1: Vec<f64>,
    g2: Vec<f64>,
}

struct InnerEval {
    f: f64,
    value: f64,
    e1: f64,
    e2: f64,
    coeffs: [f64; 3],
    gamma1: Vec<usize>,
    gamma2: Vec<usize>,
}

impl InnerWorkspace {
    fn new(inst: &ProblemInstance, aux: AuxSizes) -> Self {
        let nx = inst.x_alphabet.size();
        let ny = inst.y_alphabet.size();
        let mut p_src = vec![0.0; nx * ny];
        for x in 0..nx {
            for y in 0..ny {
                p_src[x * ny + y] = inst.source.get(&[x, y]);
            }
        }
        let log_p = p_src
            .iter()
            .map(|&p| if p > 0.0 { p.log2() } else { 0.0 })
            .collect();
        Self {
            nx,
            ny,
            nu: aux.u,
            nv: aux.v,
            h_xy: entropy_of_mass(&p_src),
            log_p,
            p_src,
            targets: inst.targets,
            pen_scale: inst.d1.d_max().max(inst.d2.d_max()).max(1.0),
        }
    }

    fn scratch(&self) -> InnerScratch {
        let (nx, ny, nu, nv) = (self.nx, self.ny, self.nu, self.nv);
        InnerScratch {
            q: vec![0.0; nx * ny * nu * nv],
            q_uv: vec![0.0; nu * nv],
            q_u: vec![0.0; nu],
            q_v: vec![0.0; nv],
            q_xyu: vec![0.0; nx * ny * nu],
            q_xyv: vec![0.0; nx * ny * nv],
            q_xuv: vec![0.0; nx * nu * nv],
            q_yuv: vec![0.0; ny * nu * nv],
            g1: vec![0.0; nx * nu],
            g2: vec![0.0; ny * nv],
        }
    }

    fn evaluate(
        &self,
        inst: &ProblemInstance,
        t1: &[f64],
        t2: &[f64],
        mu: (f64, f64),
        kappa: f64,
        s: &mut InnerScratch,
    ) -> InnerEval {
        let (nx, ny, nu, nv) = (self.nx, self.ny, self.nu, self.nv);
        for buf in [
            &mut s.q_uv,
            &mut s.q_u,
            &mut s.q_v,
            &mut s.q_xyu,
            &mut s.q_xyv,
            &mut s.q_xuv,
            &mut s.q_yuv,
        ] {
            buf.iter_mut().for_each(|x| *x = 0.0);
        }
        for x in 0..nx {
            for y in 0..ny {
                let c = x * ny + y;
                let p = self.p_src[c];
                for u in 0..nu {
                    let pu = p * t1[x * nu + u];
                    for v in 0..nv {
                        let m = pu * t2[y * nv + v];
                        s.q[(c * nu + u) * nv + v] = m;
                        if m == 0.0 {
                            continue;
                        }
                        s.q_uv[u * nv + v] += m;
                        s.q_u[u] += m;
                        s.q_v[v] += m;
                        s.q_xyu[c * nu + u] += m;
                        s.q_xyv[c * nv + v] += m;
                        s.q_xuv[(x * nu + u) * nv + v] += m;
                        s.q_yuv[(y * nu + u) * nv + v] += m;
                    }
                }
            }
        }
        let h_full = entropy_of_mass(&s.q);
        let h_uv = entropy_of_mass(&s.q_uv);
        let h_u = entropy_of_mass(&s.q_u);
        let h_v = entropy_of_mass(&s.q_v);
        let h_xyu = entropy_of_mass(&s.q_xyu);
        let h_xyv = entropy_of_mass(&s.q_xyv);
        let r1 = (h_xyv + h_uv - h_full - h_v).max(0.0);
        let r2 = (h_xyu + h_uv - h_full - h_u).max(0.0);
        let rsum = (self.h_xy + h_uv - h_full).max(0.0);
        let (value, coeffs, _, _) = scalarized_vertex(r1, r2, rsum, mu);
        let (gamma1, gamma2) = gamma_from_marginals(inst, &s.q_xuv, &s.q_yuv, nu, nv);
        let mut e1 = 0.0;
        let mut e2 = 0.0;
        for u in 0..nu {
            for v in 0..nv {
                let g1 = gamma1[u * nv + v];
                let g2 = gamma2[u * nv + v];
                for x in 0..nx {
                    e1 += s.q_xuv[(x * nu + u) * nv + v] * inst.d1.get(x, g1);
                }
                for y in 0..ny {
                    e2 += s.q_yuv[(y * nu + u) * nv + v] * inst.d2.get(y, g2);
                }
            }
        }
        let ex1 = (e1 - self.targets.0).max(0.0) / self.pen_scale;
        let ex2 = (e2 - self.targets.1).max(0.0) / self.pen_scale;
        InnerEval {
            f: value + kappa * (ex1 * ex1 + ex2 * ex2),
            value,
            e1,
            e2,
            coeffs,
            gamma1,
            gamma2,
        }
    }

    /// Gradients with respect to the two kernels, chained through the
    /// factorized joint; the decoder maps stay frozen at the evaluation's
    /// minimizers.
    fn gradients(
        &self,
        inst: &ProblemInstance,
        t1: &[f64],
        t2: &[f64],
        eval: &InnerEval,
        kappa: f64,
        s: &mut InnerScratch,
    ) {
        let (nx, ny, nu, nv) = (self.nx, self.ny, self.nu, self.nv);
        let [c1, c2, cs] = eval.coeffs;
        let pull1 = 2.0 * kappa * (eval.e1 - self.targets.0).max(0.0) / self.pen_scale.powi(2);
        let pull2 = 2.0 * kappa * (eval.e2 - self.targets.1).max(0.0) / self.pen_scale.powi(2);
        s.g1.iter_mut().for_each(|g| *g = 0.0);
        s.g2.iter_mut().for_each(|g| *g = 0.0);
        let lg = |v: f64| if v > 0.0 { v.log2() } else { 0.0 };
        for x in 0..nx {
            for y in 0..ny {
                let c = x * ny + y;
                let p = self.p_src[c];
                if p == 0.0 {
                    continue;
                }
                for u in 0..nu {
                    for v in 0..nv {
                        let qv = s.q[(c * nu + u) * nv + v];
                        if qv == 0.0 {
                            continue;
                        }
                        let l = qv.log2();
                        let luv = lg(s.q_uv[u * nv + v]);
                        let dr1 = l + lg(s.q_v[v]) - lg(s.q_xyv[c * nv + v]) - luv;
                        let dr2 = l + lg(s.q_u[u]) - lg(s.q_xyu[c * nu + u]) - luv;
                        let drs = l - self.log_p[c] - luv;
                        let dpen = pull1 * inst.d1.get(x, eval.gamma1[u * nv + v])
                            + pull2 * inst.d2.get(y, eval.gamma2[u * nv + v]);
                        let df = c1 * dr1 + c2 * dr2 + cs * drs + dpen;
                        s.g1[x * nu + u] += p * t2[y * nv + v] * df;
                        s.g2[y * nv + v] += p * t1[x * nu + u] * df;
                    }
                }
            }
        }
    }
}

const MAX_STAGE_ITERS: usize = 400;
const MAX_WARMUP_ITERS: usize = 150;
const QUIET_ITERS_TO_CONVERGE: usize = 10;

fn solve_inner_from(
    ws: &InnerWorkspace,
    inst: &ProblemInstance,
    mut t1: Vec<f64>,
    mut t2: Vec<f64>,
    mu: (f64, f64),
    opts: &SolverOptions,
) -> (Vec<f64>, Vec<f64>, bool) {
    let mut s = ws.scratch();
    // unconverged means the final penalty stage never met the quiet rule
    let mut last_stage_converged = true;
    let mut best_feasible: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    let tol = opts.feasibility_tol;
    let track =
        |eval: &InnerEval, t1: &[f64], t2: &[f64], best: &mut Option<(f64, Vec<f64>, Vec<f64>)>| {
            if eval.e1 <= ws.targets.0 + tol
                && eval.e2 <= ws.targets.1 + tol
                && best.as_ref().map_or(true, |(v, _, _)| eval.value < *v)
            {
                *best = Some((eval.value, t1.to_vec(), t2.to_vec()));
            }
        };
    let stages = opts.beta_schedule.len();
    for (stage, &kappa) in opts.beta_schedule.iter().enumerate() {
        let iter_budget = if stage + 1 == stages {
            MAX_STAGE_ITERS
        } else {
            MAX_WARMUP_ITERS
        };
        let mut eval = ws.evaluate(inst, &t1, &t2, mu, kappa, &mut s);
        track(&eval, &t1, &t2, &mut best_feasible);
        let mut eta = 1.0f64;
        let mut quiet = 0usize;
        let mut converged = false;
        for _ in 0..iter_budget {
            ws.gradients(inst, &t1, &t2, &eval, kappa, &mut s);
            let g1 = s.g1.clone();
            let g2 = s.g2.clone();
            let mut accepted = false;
            for _ in 0..28 {
                let mut n1 = t1.clone();
                let mut n2 = t2.clone();
                step_rows(&mut n1, &g1, ws.nu, eta);
                step_rows(&mut n2, &g2, ws.nv, eta);
                let cand = ws.evaluate(inst, &n1, &n2, mu, kappa, &mut s);
                if cand.f <= eval.f {
                    let delta = eval.f - cand.f;
                    t1 = n1;
                    t2 = n2;
                    eval = cand;
                    track(&eval, &t1, &t2, &mut best_feasible);
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
            }
            if !accepted || quiet >= QUIET_ITERS_TO_CONVERGE {
                converged = true;
                break;
            }
        }
        last_stage_converged = converged;
    }
    match best_feasible {
        Some((_, b1, b2)) => (b1, b2, last_stage_converged),
        None => (t1, t2, last_stage_converged),
    }
}

fn step_rows(t: &mut [f64], g: &[f64], cols: usize, eta: f64) {
    for (row_t, row_g) in t.chunks_mut(cols).zip(g.chunks(cols)) {
        let mut sum = 0.0;
        for (v, &gr) in row_t.iter_mut().zip(row_g) {
            let arg = (-eta * gr).clamp(-50.0, 50.0);
            *v *= arg.exp();
            sum += *v;
        }
        if sum > 0.0 {
            row_t.iter_mut().for_each(|v| *v /= sum);
        }
    }
}

fn smooth_rows(mut t: Vec<f64>, cols: usize) -> Vec<f64> {
    let eps = 1e-9;
    for row in t.chunks_mut(cols) {
        let s: f64 = row.iter().sum();
        for v in row.iter_mut() {
            *v = (1.0 - eps) * (if s > 0.0 { *v / s } else { 0.0 }) + eps / cols as f64;
        }
    }
    t
}

fn deterministic_inner_starts(
    ws: &InnerWorkspace,
    inst: &ProblemInstance,
) -> Vec<(Vec<f64>, Vec<f64>)> {
    let (nx, ny, nu, nv) = (ws.nx, ws.ny, ws.nu, ws.nv);
    // identity embedding (u tracks x, v tracks y): always floor-feasible
    let mut id1 = vec![0.0; nx * nu];
    for x in 0..nx {
        id1[x * nu + x.min(nu - 1)] = 1.0;
    }
    let mut id2 = vec![0.0; ny * nv];
    for y in 0..ny {
        id2[y * nv + y.min(nv - 1)] = 1.0;
    }
    // constant channels: the rate-zero corner
    let mut c1 = vec![0.0; nx * nu];
    for x in 0..nx {
        c1[x * nu] = 1.0;
    }
    let mut c2 = vec![0.0; ny * nv];
    for y in 0..ny {
        c2[y * nv] = 1.0;
    }
    let mut starts = vec![
        (smooth_rows(id1.clone(), nu), smooth_rows(id2.clone(), nv)),
        (smooth_rows(c1, nu), smooth_rows(c2, nv)),
        (smooth_rows(id1, nu), smooth_rows(vec![1.0; ny * nv], nv)),
        (
            vec![1.0 / nu as f64; nx * nu],
            vec![1.0 / nv as f64; ny * nv],
        ),
    ];
    // the single-source rate-distortion channels, embedded into U and V
    let ba = (|| -> Option<(Vec<f64>, Vec<f64>)> {
        let px = inst.source.marginalize(&[0]).ok()?;
        let py = inst.source.marginalize(&[1]).ok()?;
        let (_, w1) = crate::region::blahut_arimoto_detail(&px, &inst.d1, inst.targets.0).ok()?;
        let (_, w2) = crate::region::blahut_arimoto_detail(&py, &inst.d2, inst.targets.1).ok()?;
        let nxh = inst.xhat_alphabet.size();
        let nyh = inst.yhat_alphabet.size();
        let mut t1 = vec![0.0; nx * nu];
        for x in 0..nx {
            for xh in 0..nxh {
                t1[x * nu + xh.min(nu - 1)] += w1[x * nxh + xh];
            }
        }
        let mut t2 = vec![0.0; ny * nv];
        for y in 0..ny {
            for yh in 0..nyh {
                t2[y * nv + yh.min(nv - 1)] += w2[y * nyh + yh];
            }
        }
        Some((smooth_rows(t1, nu), smooth_rows(t2, nv)))
    })();
    if let Some(start) = ba {
        starts.push(start);
    }
    starts
}

/// Best local minimum of the scalarized support over the achievability
/// class. Over-estimates the minimal achievable scalarized rate.
pub fn scalarized_minimum_inner(
    inst: &ProblemInstance,
    mu: (f64, f64),
    opts: &SolverOptions,
    aux: AuxSizes,
) -> Result<InnerSolution, SolveError> {
    scalarized_minimum_inner_with(inst, mu, opts, aux, &[])
}

/// As [`scalarized_minimum_inner`], with caller-supplied warm-start channel
/// pairs appended to the start list.
pub fn scalarized_minimum_inner_with(
    inst: &ProblemInstance,
    mu: (f64, f64),
    opts: &SolverOptions,
    aux: AuxSizes,
    extra_starts: &[(Vec<f64>, Vec<f64>)],
) -> Result<InnerSolution, SolveError> {
    if mu.0 < 0.0 || mu.1 < 0.0 || mu.0 + mu.1 <= 0.0 {
        return Err(SolveError::BadWeights);
    }
    let (f1, f2) = inst.distortion_floor();
    if inst.targets.0 < f1 - 1e-12 || inst.targets.1 < f2 - 1e-12 {
        return Err(SolveError::InfeasibleTargets {
            d1: inst.targets.0,
            d2: inst.targets.1,
            f1,
            f2,
        });
    }
    let ws = InnerWorkspace::new(inst, aux);
    let mut starts = deterministic_inner_starts(&ws, inst);
    for (t1, t2) in extra_starts {
        if t1.len() == ws.nx * ws.nu && t2.len() == ws.ny * ws.nv {
            starts.push((t1.clone(), t2.clone()));
        }
    }
    for sidx in 0..opts.starts.saturating_sub(starts.len()) {
        let mut rng = start_rng(opts.seed.wrapping_add(0x1334), sidx);
        let mut t1 = Vec::with_capacity(ws.nx * ws.nu);
        for _ in 0..ws.nx {
            t1.extend(dirichlet_row(&mut rng, ws.nu));
        }
        let mut t2 = Vec::with_capacity(ws.ny * ws.nv);
        for _ in 0..ws.ny {
            t2.extend(dirichlet_row(&mut rng, ws.nv));
        }
        starts.push((t1, t2));
    }

    let results = run_multistart(starts.len(), |i| {
        let (t1, t2) = starts[i].clone();
        let (t1, t2, converged) = solve_inner_from(&ws, inst, t1, t2, mu, opts);
        (i, t1, t2, converged)
    });

    // pure identity embedding: exactly floor-feasible, used for restoration
    let fallback = {
        let mut id1 = vec![0.0; ws.nx * ws.nu];
        for x in 0..ws.nx {
            id1[x * ws.nu + x.min(ws.nu - 1)] = 1.0;
        }
        let mut id2 = vec![0.0; ws.ny * ws.nv];
        for y in 0..ws.ny {
            id2[y * ws.nv + y.min(ws.nv - 1)] = 1.0;
        }
        (id1, id2)
    };

    let mut best: Option<InnerSolution> = None;
    for (i, mut t1, mut t2, stage_converged) in results {
        let mut s = ws.scratch();
        let mut eval = ws.evaluate(inst, &t1, &t2, mu, 0.0, &mut s);
        let tol = opts.feasibility_tol;
        if eval.e1 > ws.targets.0 + tol || eval.e2 > ws.targets.1 + tol {
            // blend toward the floor-feasible channels until inside
            for k in (0..=6).rev() {
                let lambda = 0.5f64.powi(k);
                let b1 = blend(&t1, &fallback.0, lambda);
                let b2 = blend(&t2, &fallback.1, lambda);
                let e = ws.evaluate(inst, &b1, &b2, mu, 0.0, &mut s);
                if e.e1 <= ws.targets.0 + tol && e.e2 <= ws.targets.1 + tol {
                    t1 = b1;
                    t2 = b2;
                    eval = e;
                    break;
                }
            }
        }
        let feasible = eval.e1 <= ws.targets.0 + tol && eval.e2 <= ws.targets.1 + tol;
        let candidate = candidate_from(&ws, inst, &t1, &t2, &eval);
        let triple = rate_triple_inner(&candidate, inst);
        let (value, support_point) = triple.scalarized(mu);
        let solution = InnerSolution {
            value,
            candidate,
            triple,
            support_point,
            achieved: (eval.e1, eval.e2),
            converged: feasible && stage_converged,
            start_index: i,
        };
        let better = match &best {
            None => true,
            Some(b) => {
                let lhs = (u8::from(!feasible), value, i);
                let rhs = (
                    u8::from(!(b.achieved.0 <= ws.targets.0 + tol
                        && b.achieved.1 <= ws.targets.1 + tol)),
                    b.value,
                    b.start_index,
                );
                lhs < rhs
            }
        };
        if better {
            best = Some(solution);
        }
    }
    Ok(best.expect("at least one start"))
}

fn blend(a: &[f64], b: &[f64], lambda: f64) -> Vec<f64> {
    a.iter()
        .zip(b)
        .map(|(x, y)| (1.0 - lambda) * x + lambda * y)
        .collect()
}

fn candidate_from(
    ws: &InnerWorkspace,
    inst: &ProblemInstance,
    t1: &[f64],
    t2: &[f64],
    eval: &InnerEval,
) -> InnerCandidate {
    let u_alphabet = Alphabet::indexed("u", ws.nu).expect("nonempty");
    let v_alphabet = Alphabet::indexed("v", ws.nv).expect("nonempty");
    let tc1 = Kernel::new(
        vec![inst.x_alphabet.clone()],
        vec![u_alphabet.clone()],
        t1.to_vec(),
    )
    .expect("rows normalized");
    let tc2 = Kernel::new(
        vec![inst.y_alphabet.clone()],
        vec![v_alphabet.clone()],
        t2.to_vec(),
    )
    .expect("rows normalized");
    InnerCandidate {
        u_alphabet,
        v_alphabet,
        test_channel_1: tc1,
        test_channel_2: tc2,
        gamma1: eval.gamma1.clone(),
        gamma2: eval.gamma2.clone(),
    }
}

/// Trace the inner region by sweeping directions.
pub fn trace_region_inner(
    inst: &ProblemInstance,
    weight_sweep: &[(f64, f64)],
    opts: &SolverOptions,
    aux: AuxSizes,
) -> Result<RateRegion, SolveError> {
    if weight_sweep.is_empty() {
        return Err(SolveError::EmptySweep);
    }
    let mut entries = Vec::with_capacity(weight_sweep.len());
    for &mu in weight_sweep {
        let solution = scalarized_minimum_inner(inst, mu, opts, aux)?;
        entries.push(RegionEntry {
            mu,
            triple: solution.triple,
            support: solution.value,
            support_point: solution.support_point,
            candidate_id: format!(
                "inner-u{}v{}-start{}",
                aux.u, aux.v, solution.start_index
            ),
            feasibility_residual: (solution.achieved.0 - inst.targets.0)
                .max(solution.achieved.1 - inst.targets.1)
                .max(0.0),
            converged: solution.converged,
        });
    }
    Ok(RateRegion::from_entries(BoundKind::Inner, entries))
}

/// The reconstruction-law kernel w(x̂ŷ | xy) induced by an achievability
/// candidate, in the (x·|Y| + y)-row by (x̂·|Ŷ| + ŷ)-column layout the
/// outer solver accepts as a warm start. Source marginal and distortions
/// carry over exactly; only the chain constraint is left for the outer
/// solver to repair.
pub fn outer_warm_start(c: &InnerCandidate, inst: &ProblemInstance) -> Vec<f64> {
    let (nx, ny) = (inst.x_alphabet.size(), inst.y_alphabet.size());
    let (nu, nv) = (c.u_alphabet.size(), c.v_alphabet.size());
    let (nxh, nyh) = (inst.xhat_alphabet.size(), inst.yhat_alphabet.size());
    let m = nxh * nyh;
    let mut w = vec![0.0; nx * ny * m];
    for x in 0..nx {
        for y in 0..ny {
            let row = &mut w[(x * ny + y) * m..(x * ny + y + 1) * m];
            for u in 0..nu {
                let pu = c.test_channel_1.row(x)[u];
                if pu == 0.0 {
                    continue;
                }
                for v in 0..nv {
                    let k = c.gamma1[u * nv + v] * nyh + c.gamma2[u * nv + v];
                    row[k] += pu * c.test_channel_2.row(y)[v];
                }
            }
            let sum: f64 = row.iter().sum();
            if sum > 0.0 {
                row.iter_mut().for_each(|r| *r /= sum);
            } else {
                row.iter_mut().for_each(|r| *r = 1.0 / m as f64);
            }
        }
    }
    w
}

// ---------------------------------------------------------------------------
// intersection of the two candidate classes

/// Worst chain gap for membership in both classes: the short chain
/// X − UV − Y and the long chain U − X − Y − V.
pub fn intersection_gaps(q: &JointPmf) -> Result<f64, InnerError> {
    if q.num_axes() != 4 {
        return Err(InnerError::WrongShape);
    }
    let short = q.markov_gap(&[0], &[1], &[2, 3])?;
    let long_u = q.conditional_mutual_information(&[2], &[1, 3], &[0])?;
    let long_v = q.conditional_mutual_information(&[3], &[0, 2], &[1])?;
    Ok(short.max(long_u).max(long_v))
}

/// For joints in both candidate classes, the product identity
/// `p(xv)·p(yu) = p(xy)·p(uv)` must hold on the support. Returns the
/// maximum cell violation; rejects inputs outside the intersection.
pub fn intersection_degeneracy_check(q: &JointPmf, tol: f64) -> Result<f64, InnerError> {
    let gap = intersection_gaps(q)?;
    if gap > tol {
        return Err(InnerError::NotInIntersection { gap, tol });
    }
    let p_xy = q.marginalize(&[0, 1])?;
    let p_uv = q.marginalize(&[2, 3])?;
    let p_xv = q.marginalize(&[0, 3])?;
    let p_yu = q.marginalize(&[1, 2])?;
    let mut worst = 0.0f64;
    for (idx, &m) in q.mass().iter().enumerate() {
        if m <= 0.0 {
            continue;
        }
        let c = q.coords_of(idx);
        let (x, y, u, v) = (c[0], c[1], c[2], c[3]);
        let lhs = p_xv.get(&[x, v]) * p_yu.get(&[y, u]);
        let rhs = p_xy.get(&[x, y]) * p_uv.get(&[u, v]);
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

/// Replace `q` with its long-chain factorization
/// `q(xy)·q(u|x)·q(v|y)`, all components taken from `q` itself.
pub fn long_chain_projection(q: &JointPmf) -> Result<JointPmf, InnerError> {
    if q.num_axes() != 4 {
        return Err(InnerError::WrongShape);
    }
    let sizes: Vec<usize> = q.axes().iter().map(|a| a.size()).collect();
    let (nx, ny, nu, nv) = (sizes[0], sizes[1], sizes[2], sizes[3]);
    let p_xy = q.marginalize(&[0, 1])?;
    let p_xu = q.marginalize(&[0, 2])?;
    let p_yv = q.marginalize(&[1, 3])?;
    let p_x = q.marginalize(&[0])?;
    let p_y = q.marginalize(&[1])?;
    let mut mass = vec![0.0; q.num_cells()];
    for x in 0..nx {
        for y in 0..ny {
            let pxy = p_xy.get(&[x, y]);
            if pxy == 0.0 {
                continue;
            }
            for u in 0..nu {
                let pu = if p_x.get(&[x]) > 0.0 {
                    p_xu.get(&[x, u]) / p_x.get(&[x])
                } else {
                    0.0
                };
                for v in 0..nv {
                    let pv = if p_y.get(&[y]) > 0.0 {
                        p_yv.get(&[y, v]) / p_y.get(&[y])
                    } else {
                        0.0
                    };
                    mass[((x * ny + y) * nu + u) * nv + v] = pxy * pu * pv;
                }
            }
        }
    }
    let total: f64 = mass.iter().sum();
    if total > 0.0 && (total - 1.0).abs() > 1e-15 {
        mass.iter_mut().for_each(|m| *m /= total);
    }
    Ok(JointPmf::new(q.axes().to_vec(), mass)?)
}

/// Search for a member of the intersection by alternating the two chain
/// projections from `start`. Convergence is measured in L1 (a chain gap in
/// bits is quadratic in the deviation, so it under-reports); returns the
/// fixed point once both projections move the iterate less than `l1_tol`.
pub fn project_onto_intersection(
    start: &JointPmf,
    l1_tol: f64,
    max_iters: usize,
) -> Result<Option<JointPmf>, InnerError> {
    let mut q = start.clone();
    for _ in 0..max_iters {
        let long = long_chain_projection(&q)?;
        q = long.markov_projection(&[0], &[2, 3], &[1])?;
        let drift_short = q.l1_distance(&long)?;
        let drift_long = q.l1_distance(&long_chain_projection(&q)?)?;
        if drift_short <= l1_tol && drift_long <= l1_tol {
            return Ok(Some(q));
        }
    }
    Ok(None)
}
