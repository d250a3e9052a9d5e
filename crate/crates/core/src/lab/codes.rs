//! Blocklength-n distributed codes as partition pairs with per-index-pair
//! reconstruction blocks, plus the audits that run against them: the exact
//! distortion-constraint probability, the product-cover structure check,
//! and the cover-element size audit.

use super::seqs::{block_distortion, block_pair_prob, SeqSpace};
use super::typical::is_jointly_typical;
use super::{LabCaps, LabError};
use crate::instance::ProblemInstance;
use crate::outer::OuterCandidate;
use crate::prob::JointPmf;
use serde::{Deserialize, Serialize};

/// Reconstruction blocks for one index pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReconPair {
    pub xhat: Vec<usize>,
    pub yhat: Vec<usize>,
}

/// A distributed code: partitions of the two block spaces plus a
/// reconstruction pair for every cell-index pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistributedCode {
    n: usize,
    x_alphabet: usize,
    y_alphabet: usize,
    cells_1: Vec<Vec<u64>>,
    cells_2: Vec<Vec<u64>>,
    /// Row-major (i · #cells_2 + j).
    recon: Vec<ReconPair>,
    cell_of_1: Vec<u32>,
    cell_of_2: Vec<u32>,
}

impl DistributedCode {
    pub fn new(
        inst: &ProblemInstance,
        n: usize,
        cells_1: Vec<Vec<u64>>,
        cells_2: Vec<Vec<u64>>,
        recon: Vec<ReconPair>,
        caps: &LabCaps,
    ) -> Result<Self, LabError> {
        if n == 0 {
            return Err(LabError::BadBlocklength);
        }
        let x_alphabet = inst.x_alphabet.size();
        let y_alphabet = inst.y_alphabet.size();
        super::seqs::check_pair_cap(x_alphabet, y_alphabet, n, caps)?;
        let x_len = (x_alphabet as u64).pow(n as u32);
        let y_len = (y_alphabet as u64).pow(n as u32);
        let cell_of_1 = partition_lookup(&cells_1, x_len)?;
        let cell_of_2 = partition_lookup(&cells_2, y_len)?;
        if recon.len() != cells_1.len() * cells_2.len() {
            return Err(LabError::IncompleteReconstruction);
        }
        for r in &recon {
            if r.xhat.len() != n || r.yhat.len() != n {
                return Err(LabError::IncompleteReconstruction);
            }
            for (position, &s) in r.xhat.iter().enumerate() {
                if s >= inst.xhat_alphabet.size() {
                    return Err(LabError::ForeignSymbol {
                        position,
                        symbol: s,
                    });
                }
            }
            for (position, &s) in r.yhat.iter().enumerate() {
                if s >= inst.yhat_alphabet.size() {
                    return Err(LabError::ForeignSymbol {
                        position,
                        symbol: s,
                    });
                }
            }
        }
        Ok(Self {
            n,
            x_alphabet,
            y_alphabet,
            cells_1,
            cells_2,
            recon,
            cell_of_1,
            cell_of_2,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_cells(&self) -> (usize, usize) {
        (self.cells_1.len(), self.cells_2.len())
    }

    pub fn cells_1(&self) -> &[Vec<u64>] {
        &self.cells_1
    }

    pub fn cells_2(&self) -> &[Vec<u64>] {
        &self.cells_2
    }

    pub fn encode(&self, xid: u64, yid: u64) -> (usize, usize) {
        (
            self.cell_of_1[xid as usize] as usize,
            self.cell_of_2[yid as usize] as usize,
        )
    }

    pub fn recon(&self, i: usize, j: usize) -> &ReconPair {
        &self.recon[i * self.cells_2.len() + j]
    }

    pub fn x_space(&self) -> SeqSpace {
        SeqSpace {
            alphabet: self.x_alphabet,
            n: self.n,
        }
    }

    pub fn y_space(&self) -> SeqSpace {
        SeqSpace {
            alphabet: self.y_alphabet,
            n: self.n,
        }
    }
}

fn partition_lookup(cells: &[Vec<u64>], space_len: u64) -> Result<Vec<u32>, LabError> {
    let mut lookup = vec![u32::MAX; space_len as usize];
    for (i, cell) in cells.iter().enumerate() {
        for &id in cell {
            if id >= space_len || lookup[id as usize] != u32::MAX {
                return Err(LabError::NotAPartition);
            }
            lookup[id as usize] = i as u32;
        }
    }
    if lookup.iter().any(|&c| c == u32::MAX) {
        return Err(LabError::NotAPartition);
    }
    Ok(lookup)
}

/// Canned code families for the verification commands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodeKind {
    /// Every sequence its own cell.
    Singletons,
    /// One cell per side.
    OneCell,
    /// Greedy distortion-ball quantization cells, highest-probability
    /// centers first, capped at the given cell budgets.
    Balls,
}

/// Build a code of the given family, reconstructions chosen to maximize
/// the distortion-event mass per index pair.
pub fn build_code(
    inst: &ProblemInstance,
    n: usize,
    kind: CodeKind,
    max_cells_1: usize,
    max_cells_2: usize,
    epsilon: f64,
    caps: &LabCaps,
) -> Result<DistributedCode, LabError> {
    super::seqs::check_pair_cap(inst.x_alphabet.size(), inst.y_alphabet.size(), n, caps)?;
    let x_space = SeqSpace::new(inst.x_alphabet.size(), n)?;
    let y_space = SeqSpace::new(inst.y_alphabet.size(), n)?;
    let cells_1;
    let cells_2;
    match kind {
        CodeKind::Singletons => {
            cells_1 = x_space.ids().map(|id| vec![id]).collect();
            cells_2 = y_space.ids().map(|id| vec![id]).collect();
        }
        CodeKind::OneCell => {
            cells_1 = vec![x_space.ids().collect()];
            cells_2 = vec![y_space.ids().collect()];
        }
        CodeKind::Balls => {
            let px = inst.source.marginalize(&[0])?;
            let py = inst.source.marginalize(&[1])?;
            cells_1 = greedy_ball_cells(
                &x_space,
                |seq| super::seqs::block_prob(&px, seq),
                |center, seq| {
                    let recon: Vec<usize> = center
                        .iter()
                        .map(|&x| {
                            (0..inst.xhat_alphabet.size())
                                .min_by(|&a, &b| {
                                    inst.d1.get(x, a).total_cmp(&inst.d1.get(x, b))
                                })
                                .unwrap_or(0)
                        })
                        .collect();
                    block_distortion(&inst.d1, seq, &recon) < inst.targets.0 + epsilon
                },
                max_cells_1.max(1),
            );
            cells_2 = greedy_ball_cells(
                &y_space,
                |seq| super::seqs::block_prob(&py, seq),
                |center, seq| {
                    let recon: Vec<usize> = center
                        .iter()
                        .map(|&y| {
                            (0..inst.yhat_alphabet.size())
                                .min_by(|&a, &b| {
                                    inst.d2.get(y, a).total_cmp(&inst.d2.get(y, b))
                                })
                                .unwrap_or(0)
                        })
                        .collect();
                    block_distortion(&inst.d2, seq, &recon) < inst.targets.1 + epsilon
                },
                max_cells_2.max(1),
            );
        }
    }
    let dplus = (inst.targets.0 + epsilon, inst.targets.1 + epsilon);
    let mut recon = Vec::with_capacity(cells_1.len() * cells_2.len());
    for c1 in &cells_1 {
        for c2 in &cells_2 {
            recon.push(event_optimal_recon(inst, n, c1, c2, dplus).0);
        }
    }
    DistributedCode::new(inst, n, cells_1, cells_2, recon, caps)
}

fn greedy_ball_cells(
    space: &SeqSpace,
    prob: impl Fn(&[usize]) -> f64,
    in_ball: impl Fn(&[usize], &[usize]) -> bool,
    max_cells: usize,
) -> Vec<Vec<u64>> {
    let mut order: Vec<u64> = space.ids().collect();
    order.sort_by(|&a, &b| {
        prob(&space.decode(b))
            .total_cmp(&prob(&space.decode(a)))
            .then(a.cmp(&b))
    });
    let mut assigned = vec![false; space.len() as usize];
    let mut cells: Vec<Vec<u64>> = Vec::new();
    for &center_id in &order {
        if assigned[center_id as usize] {
            continue;
        }
        if cells.len() + 1 == max_cells {
            break;
        }
        let center = space.decode(center_id);
        let mut cell = Vec::new();
        for id in space.ids() {
            if !assigned[id as usize] && in_ball(&center, &space.decode(id)) {
                assigned[id as usize] = true;
                cell.push(id);
            }
        }
        if cell.is_empty() {
            assigned[center_id as usize] = true;
            cell.push(center_id);
        }
        cells.push(cell);
        if cells.len() == max_cells {
            break;
        }
    }
    let leftovers: Vec<u64> = space.ids().filter(|&id| !assigned[id as usize]).collect();
    if !leftovers.is_empty() {
        cells.push(leftovers);
    }
    cells
}

/// The reconstruction pair maximizing the mass of the distortion event over
/// one product cell; ties break toward the lowest (xhat, yhat) ids.
pub(crate) fn event_optimal_recon(
    inst: &ProblemInstance,
    n: usize,
    cell1: &[u64],
    cell2: &[u64],
    dplus: (f64, f64),
) -> (ReconPair, f64) {
    let x_space = SeqSpace {
        alphabet: inst.x_alphabet.size(),
        n,
    };
    let y_space = SeqSpace {
        alphabet: inst.y_alphabet.size(),
        n,
    };
    let xhat_space = SeqSpace {
        alphabet: inst.xhat_alphabet.size(),
        n,
    };
    let yhat_space = SeqSpace {
        alphabet: inst.yhat_alphabet.size(),
        n,
    };
    let xs: Vec<Vec<usize>> = cell1.iter().map(|&id| x_space.decode(id)).collect();
    let ys: Vec<Vec<usize>> = cell2.iter().map(|&id| y_space.decode(id)).collect();
    let mut best: Option<(f64, u64, u64)> = None;
    for xhat_id in xhat_space.ids() {
        let xhat = xhat_space.decode(xhat_id);
        let ok1: Vec<bool> = xs
            .iter()
            .map(|xn| block_distortion(&inst.d1, xn, &xhat) < dplus.0)
            .collect();
        if ok1.iter().all(|&b| !b) && best.is_some() {
            continue;
        }
        for yhat_id in yhat_space.ids() {
            let yhat = yhat_space.decode(yhat_id);
            let mut mass = 0.0;
            for (xn, &ok) in xs.iter().zip(&ok1) {
                if !ok {
                    continue;
                }
                for yn in &ys {
                    if block_distortion(&inst.d2, yn, &yhat) < dplus.1 {
                        mass += block_pair_prob(&inst.source, xn, yn);
                    }
                }
            }
            if best.as_ref().map_or(true, |(m, _, _)| mass > *m) {
                best = Some((mass, xhat_id, yhat_id));
            }
        }
    }
    let (mass, xhat_id, yhat_id) = best.expect("reconstruction spaces are nonempty");
    (
        ReconPair {
            xhat: xhat_space.decode(xhat_id),
            yhat: yhat_space.decode(yhat_id),
        },
        mass,
    )
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DistortionVerdict {
    /// Exact probability of the distortion event.
    pub probability: f64,
    /// Probability threshold (1 − ε) applied.
    pub threshold: f64,
    pub pass: bool,
}

/// Exact probability that both block distortions stay strictly below
/// D + ε under the code, and the pass verdict at threshold 1 − ε.
pub fn verify_distortion_constraint(
    code: &DistributedCode,
    inst: &ProblemInstance,
    epsilon: f64,
) -> Result<DistortionVerdict, LabError> {
    let x_space = code.x_space();
    let y_space = code.y_space();
    let dplus1 = inst.targets.0 + epsilon;
    let dplus2 = inst.targets.1 + epsilon;
    let (cells1, cells2) = code.num_cells();
    // distortion acceptability depends on the pair only through the cells
    let mut ok1 = vec![false; x_space.len() as usize * cells2];
    for xid in x_space.ids() {
        let xn = x_space.decode(xid);
        let i = code.encode(xid, 0).0;
        for j in 0..cells2 {
            ok1[xid as usize * cells2 + j] =
                block_distortion(&inst.d1, &xn, &code.recon(i, j).xhat) < dplus1;
        }
    }
    let mut ok2 = vec![false; y_space.len() as usize * cells1];
    for yid in y_space.ids() {
        let yn = y_space.decode(yid);
        let j = code.encode(0, yid).1;
        for i in 0..cells1 {
            ok2[yid as usize * cells1 + i] =
                block_distortion(&inst.d2, &yn, &code.recon(i, j).yhat) < dplus2;
        }
    }
    let mut probability = 0.0;
    for xid in x_space.ids() {
        let xn = x_space.decode(xid);
        let i = code.encode(xid, 0).0;
        for yid in y_space.ids() {
            let j = code.encode(0, yid).1;
            if ok1[xid as usize * cells2 + j] && ok2[yid as usize * cells1 + i] {
                probability += block_pair_prob(&inst.source, &xn, &y_space.decode(yid));
            }
        }
    }
    Ok(DistortionVerdict {
        probability,
        threshold: 1.0 - epsilon,
        pass: probability >= 1.0 - epsilon,
    })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Prop2Witness {
    pub i: usize,
    pub j: usize,
    pub xid: u64,
    pub yid: u64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Prop2Outcome {
    pub holds: bool,
    pub witness: Option<Prop2Witness>,
}

/// Check the product-cover structure property on a code's own cover:
/// every typical cross pair of a cell pair must belong to the cover
/// element. For partition-based codes this is a self-test of the cover
/// machinery — the property holds by construction.
pub fn prop2_check(
    code: &DistributedCode,
    inst: &ProblemInstance,
    epsilon: f64,
) -> Result<Prop2Outcome, LabError> {
    let product = |i: usize, j: usize, xid: u64, yid: u64| {
        let (ci, cj) = code.encode(xid, yid);
        ci == i && cj == j
    };
    prop2_check_cover(
        code.cells_1(),
        code.cells_2(),
        &product,
        &inst.source,
        code.n(),
        epsilon,
    )
}

/// The same check against an arbitrary (possibly hand-edited) assignment of
/// cover elements, used to demonstrate violations on non-product covers.
pub fn prop2_check_cover(
    cells_1: &[Vec<u64>],
    cells_2: &[Vec<u64>],
    sij_contains: &dyn Fn(usize, usize, u64, u64) -> bool,
    joint: &JointPmf,
    n: usize,
    epsilon: f64,
) -> Result<Prop2Outcome, LabError> {
    if joint.num_axes() != 2 {
        return Err(LabError::WrongShape);
    }
    let x_space = SeqSpace::new(joint.axes()[0].size(), n)?;
    let y_space = SeqSpace::new(joint.axes()[1].size(), n)?;
    for (i, c1) in cells_1.iter().enumerate() {
        for (j, c2) in cells_2.iter().enumerate() {
            for &xid in c1 {
                let xn = x_space.decode(xid);
                for &yid in c2 {
                    let yn = y_space.decode(yid);
                    if is_jointly_typical(joint, &xn, &yn, epsilon)
                        && !sij_contains(i, j, xid, yid)
                    {
                        return Ok(Prop2Outcome {
                            holds: false,
                            witness: Some(Prop2Witness { i, j, xid, yid }),
                        });
                    }
                }
            }
        }
    }
    Ok(Prop2Outcome {
        holds: true,
        witness: None,
    })
}

/// Per-letter empirical type of the code: the joint law of
/// (X_t, Y_t, X̂_t, Ŷ_t) at a uniformly random position.
pub fn empirical_type(
    code: &DistributedCode,
    inst: &ProblemInstance,
) -> Result<JointPmf, LabError> {
    let x_space = code.x_space();
    let y_space = code.y_space();
    let n = code.n();
    let nxh = inst.xhat_alphabet.size();
    let nyh = inst.yhat_alphabet.size();
    let ny = inst.y_alphabet.size();
    let mut mass = vec![0.0; inst.x_alphabet.size() * ny * nxh * nyh];
    for xid in x_space.ids() {
        let xn = x_space.decode(xid);
        for yid in y_space.ids() {
            let yn = y_space.decode(yid);
            let p = block_pair_prob(&inst.source, &xn, &yn);
            if p == 0.0 {
                continue;
            }
            let (i, j) = code.encode(xid, yid);
            let r = code.recon(i, j);
            let w = p / n as f64;
            for t in 0..n {
                mass[((xn[t] * ny + yn[t]) * nxh + r.xhat[t]) * nyh + r.yhat[t]] += w;
            }
        }
    }
    let total: f64 = mass.iter().sum();
    mass.iter_mut().for_each(|m| *m /= total);
    Ok(JointPmf::new(
        vec![
            inst.x_alphabet.clone(),
            inst.y_alphabet.clone(),
            inst.xhat_alphabet.clone(),
            inst.yhat_alphabet.clone(),
        ],
        mass,
    )?)
}

/// One audited cover element.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CellAudit {
    pub i: usize,
    pub j: usize,
    /// log2 of |cell ∩ typical set|; −∞ when the intersection is empty.
    pub log2_cell_size: f64,
    pub bound_bits: f64,
    /// bound − size; negative margins are violations of the audited bound.
    pub margin_bits: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Lemma3Report {
    pub rows: Vec<CellAudit>,
    pub joint_bound_bits: f64,
    pub cond_x_bound_bits: f64,
    pub cond_y_bound_bits: f64,
    pub worst_joint_margin: f64,
    pub worst_cond_x_margin: f64,
    pub worst_cond_y_margin: f64,
    /// All margins nonnegative. At desk-scale blocklengths a failure is a
    /// diagnostic about the audited candidate, not a disproof: the size
    /// bounds only promise a suitable candidate for n large enough.
    pub pass: bool,
}

/// Audit the cover-element size bounds of a code against a supplied outer
/// candidate: `log2|S̃_ij| ≤ n·(H(XY|X̂Ŷ) + slack)` per cell, plus the two
/// conditional variants over every conditioning block.
pub fn lemma3_size_audit(
    code: &DistributedCode,
    inst: &ProblemInstance,
    pi: &OuterCandidate,
    epsilon: f64,
    slack: f64,
    caps: &LabCaps,
) -> Result<Lemma3Report, LabError> {
    let n = code.n();
    super::seqs::check_pair_cap(inst.x_alphabet.size(), inst.y_alphabet.size(), n, caps)?;
    let x_space = code.x_space();
    let y_space = code.y_space();
    let nf = n as f64;

    let h_joint = pi.joint.conditional_entropy(&[0, 1], &[2, 3])?;
    let h_cond_x = pi.joint.conditional_entropy(&[0], &[2, 3, 1])?;
    let h_cond_y = pi.joint.conditional_entropy(&[1], &[2, 3, 0])?;
    let joint_bound_bits = nf * (h_joint + slack);
    let cond_x_bound_bits = nf * (h_cond_x + slack);
    let cond_y_bound_bits = nf * (h_cond_y + slack);

    let mut rows = Vec::new();
    let mut worst_joint = f64::INFINITY;
    for (i, c1) in code.cells_1().iter().enumerate() {
        for (j, c2) in code.cells_2().iter().enumerate() {
            let mut count = 0u64;
            for &xid in c1 {
                let xn = x_space.decode(xid);
                for &yid in c2 {
                    if is_jointly_typical(&inst.source, &xn, &y_space.decode(yid), epsilon) {
                        count += 1;
                    }
                }
            }
            let log2_cell_size = if count == 0 {
                f64::NEG_INFINITY
            } else {
                (count as f64).log2()
            };
            let margin_bits = joint_bound_bits - log2_cell_size;
            worst_joint = worst_joint.min(margin_bits);
            rows.push(CellAudit {
                i,
                j,
                log2_cell_size,
                bound_bits: joint_bound_bits,
                margin_bits,
            });
        }
    }

    // conditional bounds, worst case over cells and conditioning blocks
    let mut worst_cond_x = f64::INFINITY;
    for yid in y_space.ids() {
        let yn = y_space.decode(yid);
        let mut per_cell = vec![0u64; code.cells_1().len()];
        for xid in x_space.ids() {
            if is_jointly_typical(&inst.source, &x_space.decode(xid), &yn, epsilon) {
                per_cell[code.encode(xid, 0).0] += 1;
            }
        }
        for &count in &per_cell {
            if count > 0 {
                worst_cond_x = worst_cond_x.min(cond_x_bound_bits - (count as f64).log2());
            }
        }
    }
    let mut worst_cond_y = f64::INFINITY;
    for xid in x_space.ids() {
        let xn = x_space.decode(xid);
        let mut per_cell = vec![0u64; code.cells_2().len()];
        for yid in y_space.ids() {
            if is_jointly_typical(&inst.source, &xn, &y_space.decode(yid), epsilon) {
                per_cell[code.encode(0, yid).1] += 1;
            }
        }
        for &count in &per_cell {
            if count > 0 {
                worst_cond_y = worst_cond_y.min(cond_y_bound_bits - (count as f64).log2());
            }
        }
    }

    let pass = worst_joint >= 0.0 && worst_cond_x >= 0.0 && worst_cond_y >= 0.0;
    Ok(Lemma3Report {
        rows,
        joint_bound_bits,
        cond_x_bound_bits,
        cond_y_bound_bits,
        worst_joint_margin: worst_joint,
        worst_cond_x_margin: worst_cond_x,
        worst_cond_y_margin: worst_cond_y,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::dsbs_instance;
    use crate::outer::{identity_candidate, residuals_of};

    fn caps() -> LabCaps {
        LabCaps::default()
    }

    #[test]
    fn identity_code_passes_at_zero_distortion() {
        let inst = dsbs_instance(0.25, 0.0, 0.0);
        let code = build_code(&inst, 1, CodeKind::Singletons, 2, 2, 0.3, &caps()).unwrap();
        let verdict = verify_distortion_constraint(&code, &inst, 0.3).unwrap();
        assert_eq!(verdict.probability, 1.0);
        assert!(verdict.pass);
    }

    #[test]
    fn one_cell_code_passes_at_maximum_distortion() {
        let inst = dsbs_instance(0.25, 1.0, 1.0);
        let code = build_code(&inst, 2, CodeKind::OneCell, 1, 1, 0.2, &caps()).unwrap();
        let verdict = verify_distortion_constraint(&code, &inst, 0.2).unwrap();
        assert_eq!(verdict.probability, 1.0);
        assert!(verdict.pass);
    }

    #[test]
    fn one_cell_code_fails_at_zero_distortion_with_stated_mass() {
        let inst = dsbs_instance(0.25, 0.0, 0.0);
        let code = build_code(&inst, 1, CodeKind::OneCell, 1, 1, 0.01, &caps()).unwrap();
        let verdict = verify_distortion_constraint(&code, &inst, 0.01).unwrap();
        // best constant reconstruction pair captures P(X = xh, Y = yh) = 0.375
        assert!((verdict.probability - 0.375).abs() < 1e-12);
        assert!(!verdict.pass);
    }

    #[test]
    fn ball_code_covers_the_space() {
        let inst = dsbs_instance(0.25, 0.25, 0.25);
        let code = build_code(&inst, 2, CodeKind::Balls, 3, 3, 0.2, &caps()).unwrap();
        let (c1, c2) = code.num_cells();
        assert!(c1 <= 3 && c2 <= 3);
        let covered: u64 = code.cells_1().iter().map(|c| c.len() as u64).sum();
        assert_eq!(covered, 4);
    }

    #[test]
    fn partition_validation_rejects_overlaps_and_gaps() {
        let inst = dsbs_instance(0.25, 0.0, 0.0);
        let recon = vec![ReconPair {
            xhat: vec![0],
            yhat: vec![0],
        }];
        // overlap
        assert!(matches!(
            DistributedCode::new(
                &inst,
                1,
                vec![vec![0, 0]],
                vec![vec![0, 1]],
                recon.clone(),
                &caps()
            ),
            Err(LabError::NotAPartition)
        ));
        // gap
        assert!(matches!(
            DistributedCode::new(
                &inst,
                1,
                vec![vec![0]],
                vec![vec![0, 1]],
                recon,
                &caps()
            ),
            Err(LabError::NotAPartition)
        ));
    }

    #[test]
    fn prop2_holds_for_partition_codes() {
        let inst = dsbs_instance(0.25, 0.25, 0.25);
        for kind in [CodeKind::Singletons, CodeKind::OneCell, CodeKind::Balls] {
            let code = build_code(&inst, 2, kind, 2, 2, 0.9, &caps()).unwrap();
            let outcome = prop2_check(&code, &inst, 0.9).unwrap();
            assert!(outcome.holds, "{kind:?}");
        }
    }

    #[test]
    fn prop2_catches_edited_covers() {
        let inst = dsbs_instance(0.25, 0.0, 0.0);
        // n = 1, epsilon wide enough that (0, 0) is typical
        let epsilon = 2.6;
        let cells_1 = vec![vec![0u64], vec![1u64]];
        let cells_2 = vec![vec![0u64], vec![1u64]];
        // remove (0, 0) from its only cover element
        let edited =
            |i: usize, j: usize, xid: u64, yid: u64| !(i == 0 && j == 0 && xid == 0 && yid == 0);
        let outcome = prop2_check_cover(
            &cells_1,
            &cells_2,
            &edited,
            &inst.source,
            1,
            epsilon,
        )
        .unwrap();
        assert!(!outcome.holds);
        let w = outcome.witness.unwrap();
        assert_eq!((w.i, w.j, w.xid, w.yid), (0, 0, 0, 0));
    }

    #[test]
    fn empirical_type_matches_source_marginal() {
        let inst = dsbs_instance(0.25, 0.25, 0.25);
        let code = build_code(&inst, 2, CodeKind::Balls, 2, 2, 0.2, &caps()).unwrap();
        let q = empirical_type(&code, &inst).unwrap();
        let marg = q.marginalize(&[0, 1]).unwrap();
        assert!(marg.l1_distance(&inst.source).unwrap() < 1e-12);
    }

    #[test]
    fn singleton_cells_pass_any_nonnegative_bound() {
        let inst = dsbs_instance(0.25, 0.0, 0.0);
        let code = build_code(&inst, 2, CodeKind::Singletons, 4, 4, 0.9, &caps()).unwrap();
        let pi = identity_candidate(&inst).unwrap();
        let pi = OuterCandidate {
            residuals: residuals_of(&pi, &inst).unwrap(),
            joint: pi,
        };
        let report = lemma3_size_audit(&code, &inst, &pi, 0.9, 0.0, &caps()).unwrap();
        // singleton product cells hold at most one pair: log size 0
        assert!(report
            .rows
            .iter()
            .all(|r| r.log2_cell_size <= 0.0));
        assert!(report.worst_joint_margin >= 0.0);
    }

    #[test]
    fn one_cell_code_fails_small_slack_audit() {
        let inst = dsbs_instance(0.25, 0.0, 0.0);
        let n = 8;
        let code = build_code(&inst, n, CodeKind::OneCell, 1, 1, 0.4, &caps()).unwrap();
        let pi = identity_candidate(&inst).unwrap();
        let pi = OuterCandidate {
            residuals: residuals_of(&pi, &inst).unwrap(),
            joint: pi,
        };
        // identity candidate has H(XY|X̂Ŷ) = 0, so the bound is n·slack
        let report = lemma3_size_audit(&code, &inst, &pi, 0.4, 0.0, &caps()).unwrap();
        assert!(!report.pass);
        // the only cell is the whole space; its typical part has
        // 8!/(3!·1!·1!·3!) = 1120 pairs
        let expected = (1120f64).log2();
        assert!((report.rows[0].log2_cell_size - expected).abs() < 1e-9);
        assert!((report.worst_joint_margin + expected).abs() < 1e-9);
        // generous slack clears it
        let report = lemma3_size_audit(&code, &inst, &pi, 0.4, 2.0, &caps()).unwrap();
        assert!(report.worst_joint_margin >= 0.0);
    }
}
