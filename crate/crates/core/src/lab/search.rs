//! Search over partition-pair codes: exhaustive enumeration when the
//! candidate count is small enough (yielding achievability certificates),
//! seeded annealing otherwise.

use super::codes::DistributedCode;
use super::seqs::SeqSpace;
use super::{LabCaps, LabError};
use crate::instance::ProblemInstance;
use rand::{Rng as _, SeedableRng as _};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Number of set partitions of `m` elements into at most `max_blocks`
/// blocks (a Stirling-number sum, computed in f64).
pub fn count_partitions(m: u64, max_blocks: u64) -> f64 {
    let m = m as usize;
    let b = max_blocks.min(m as u64) as usize;
    if m == 0 || b == 0 {
        return 0.0;
    }
    let mut dp = vec![vec![0.0f64; b + 1]; m + 1];
    dp[0][0] = 1.0;
    for i in 1..=m {
        for j in 1..=b.min(i) {
            dp[i][j] = j as f64 * dp[i - 1][j] + dp[i - 1][j - 1];
        }
    }
    (1..=b).map(|j| dp[m][j]).sum()
}

/// Restricted growth strings: canonical labelings of set partitions of
/// `m` elements into at most `max_blocks` blocks.
fn enumerate_rgs(m: usize, max_blocks: usize, f: &mut impl FnMut(&[u32])) {
    fn rec(a: &mut Vec<u32>, m: usize, max_blocks: usize, f: &mut impl FnMut(&[u32])) {
        if a.len() == m {
            f(a);
            return;
        }
        let top = a.iter().copied().max().map_or(0, |t| t + 1);
        for next in 0..=top.min(max_blocks as u32 - 1) {
            a.push(next);
            rec(a, m, max_blocks, f);
            a.pop();
        }
    }
    let mut a = Vec::with_capacity(m);
    rec(&mut a, m, max_blocks, f);
}

struct SearchTables {
    x_len: usize,
    y_len: usize,
    xh_len: usize,
    yh_len: usize,
    /// p(xn, yn), row-major over (xid, yid).
    pair_p: Vec<f64>,
    /// mean block distortion (xid, xhat_id).
    d1: Vec<f64>,
    d2: Vec<f64>,
    dplus: (f64, f64),
}

impl SearchTables {
    fn new(inst: &ProblemInstance, n: usize, epsilon: f64, caps: &LabCaps) -> Result<Self, LabError> {
        super::seqs::check_pair_cap(inst.x_alphabet.size(), inst.y_alphabet.size(), n, caps)?;
        super::seqs::check_pair_cap(inst.xhat_alphabet.size(), inst.yhat_alphabet.size(), n, caps)?;
        let x_space = SeqSpace::new(inst.x_alphabet.size(), n)?;
        let y_space = SeqSpace::new(inst.y_alphabet.size(), n)?;
        let xh_space = SeqSpace::new(inst.xhat_alphabet.size(), n)?;
        let yh_space = SeqSpace::new(inst.yhat_alphabet.size(), n)?;
        let (x_len, y_len) = (x_space.len() as usize, y_space.len() as usize);
        let (xh_len, yh_len) = (xh_space.len() as usize, yh_space.len() as usize);
        let xs: Vec<Vec<usize>> = x_space.ids().map(|i| x_space.decode(i)).collect();
        let ys: Vec<Vec<usize>> = y_space.ids().map(|i| y_space.decode(i)).collect();
        let mut pair_p = vec![0.0; x_len * y_len];
        for (xi, xn) in xs.iter().enumerate() {
            for (yi, yn) in ys.iter().enumerate() {
                pair_p[xi * y_len + yi] = super::seqs::block_pair_prob(&inst.source, xn, yn);
            }
        }
        let mut d1 = vec![0.0; x_len * xh_len];
        for (xi, xn) in xs.iter().enumerate() {
            for hid in xh_space.ids() {
                d1[xi * xh_len + hid as usize] =
                    super::seqs::block_distortion(&inst.d1, xn, &xh_space.decode(hid));
            }
        }
        let mut d2 = vec![0.0; y_len * yh_len];
        for (yi, yn) in ys.iter().enumerate() {
            for hid in yh_space.ids() {
                d2[yi * yh_len + hid as usize] =
                    super::seqs::block_distortion(&inst.d2, yn, &yh_space.decode(hid));
            }
        }
        Ok(Self {
            x_len,
            y_len,
            xh_len,
            yh_len,
            pair_p,
            d1,
            d2,
            dplus: (inst.targets.0 + epsilon, inst.targets.1 + epsilon),
        })
    }

    fn cells_of(assign: &[u32]) -> Vec<Vec<u64>> {
        let blocks = assign.iter().copied().max().map_or(0, |t| t + 1) as usize;
        let mut cells = vec![Vec::new(); blocks];
        for (id, &c) in assign.iter().enumerate() {
            cells[c as usize].push(id as u64);
        }
        cells
    }

    /// Event probability of the assignment pair with per-cell-pair optimal
    /// reconstructions, plus those reconstruction ids.
    fn event_prob(&self, a1: &[u32], a2: &[u32]) -> (f64, Vec<(u64, u64)>) {
        let cells1 = Self::cells_of(a1);
        let cells2 = Self::cells_of(a2);
        let mut recon = Vec::with_capacity(cells1.len() * cells2.len());
        let mut total = 0.0;
        for c1 in &cells1 {
            for c2 in &cells2 {
                let mut best = (f64::NEG_INFINITY, 0u64, 0u64);
                for xh in 0..self.xh_len {
                    let ok1: Vec<bool> = c1
                        .iter()
                        .map(|&x| self.d1[x as usize * self.xh_len + xh] < self.dplus.0)
                        .collect();
                    if !ok1.iter().any(|&b| b) && best.0 >= 0.0 {
                        continue;
                    }
                    for yh in 0..self.yh_len {
                        let mut mass = 0.0;
                        for (&x, &ok) in c1.iter().zip(&ok1) {
                            if !ok {
                                continue;
                            }
                            for &y in c2 {
                                if self.d2[y as usize * self.yh_len + yh] < self.dplus.1 {
                                    mass += self.pair_p[x as usize * self.y_len + y as usize];
                                }
                            }
                        }
                        if mass > best.0 {
                            best = (mass, xh as u64, yh as u64);
                        }
                    }
                }
                total += best.0.max(0.0);
                recon.push((best.1, best.2));
            }
        }
        (total, recon)
    }

    /// Expected distortions with per-cell-pair expectation-optimal
    /// reconstructions (chosen coordinatewise).
    fn expected_distortions(&self, a1: &[u32], a2: &[u32]) -> (f64, f64) {
        let cells1 = Self::cells_of(a1);
        let cells2 = Self::cells_of(a2);
        let mut e1 = 0.0;
        let mut e2 = 0.0;
        for c1 in &cells1 {
            for c2 in &cells2 {
                let mut best1 = f64::INFINITY;
                for xh in 0..self.xh_len {
                    let cost: f64 = c1
                        .iter()
                        .map(|&x| {
                            let w: f64 = c2
                                .iter()
                                .map(|&y| self.pair_p[x as usize * self.y_len + y as usize])
                                .sum();
                            w * self.d1[x as usize * self.xh_len + xh]
                        })
                        .sum();
                    best1 = best1.min(cost);
                }
                let mut best2 = f64::INFINITY;
                for yh in 0..self.yh_len {
                    let cost: f64 = c2
                        .iter()
                        .map(|&y| {
                            let w: f64 = c1
                                .iter()
                                .map(|&x| self.pair_p[x as usize * self.y_len + y as usize])
                                .sum();
                            w * self.d2[y as usize * self.yh_len + yh]
                        })
                        .sum();
                    best2 = best2.min(cost);
                }
                e1 += best1;
                e2 += best2;
            }
        }
        (e1, e2)
    }
}

/// One code that met the distortion constraint during the search.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CodeSummary {
    pub cells_1: Vec<Vec<u64>>,
    pub cells_2: Vec<Vec<u64>>,
    pub event_prob: f64,
    pub expected_d1: f64,
    pub expected_d2: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BruteForceOutcome {
    /// Whether the whole candidate space was enumerated.
    pub exhaustive: bool,
    /// True when an exhaustive request fell back to randomized search.
    pub fallback: bool,
    pub candidates_evaluated: u64,
    /// Some(achievable) only in exhaustive mode.
    pub certificate: Option<bool>,
    pub best_event_prob: f64,
    /// Lowest-sum expected distortion pair seen across evaluated codes.
    pub best_expected_distortions: (f64, f64),
    /// Verified codes (capped), best event probability first.
    pub passing: Vec<CodeSummary>,
    /// The event-probability-best code seen, verified or not.
    pub best_code: Option<CodeSummary>,
    pub rates_bits: (f64, f64),
    pub epsilon: f64,
}

const MAX_KEPT_CODES: usize = 8;

/// Search for codes of blocklength `n` at rates (`r1`, `r2`) bits/symbol
/// meeting the distortion constraint at `epsilon`. Exhaustive when the
/// partition-pair count fits the cap, otherwise seeded annealing within
/// `budget` evaluations.
pub fn brute_force_achievable(
    inst: &ProblemInstance,
    n: usize,
    r1: f64,
    r2: f64,
    epsilon: f64,
    budget: u64,
    seed: u64,
    caps: &LabCaps,
) -> Result<BruteForceOutcome, LabError> {
    if n == 0 {
        return Err(LabError::BadBlocklength);
    }
    if !(epsilon > 0.0) {
        return Err(LabError::BadEpsilon);
    }
    let tables = SearchTables::new(inst, n, epsilon, caps)?;
    let blocks = |r: f64, len: usize| -> usize {
        let raw = (2f64).powf(n as f64 * r);
        (raw + 1e-9).floor().max(1.0).min(len as f64) as usize
    };
    let b1 = blocks(r1, tables.x_len);
    let b2 = blocks(r2, tables.y_len);
    let candidates = count_partitions(tables.x_len as u64, b1 as u64)
        * count_partitions(tables.y_len as u64, b2 as u64);
    let threshold = 1.0 - epsilon;

    let mut best_prob = f64::NEG_INFINITY;
    let mut best_assign: Option<(Vec<u32>, Vec<u32>)> = None;
    let mut best_expected = (f64::INFINITY, f64::INFINITY);
    let mut passing: Vec<(f64, Vec<u32>, Vec<u32>)> = Vec::new();
    let mut evaluated = 0u64;

    let consider = |a1: &[u32], a2: &[u32],
                        tables: &SearchTables,
                        best_prob: &mut f64,
                        best_assign: &mut Option<(Vec<u32>, Vec<u32>)>,
                        best_expected: &mut (f64, f64),
                        passing: &mut Vec<(f64, Vec<u32>, Vec<u32>)>| {
        let (prob, _) = tables.event_prob(a1, a2);
        if prob > *best_prob {
            *best_prob = prob;
            *best_assign = Some((a1.to_vec(), a2.to_vec()));
        }
        let (e1, e2) = tables.expected_distortions(a1, a2);
        if e1 + e2 < best_expected.0 + best_expected.1 {
            *best_expected = (e1, e2);
        }
        if prob >= threshold {
            let duplicate = passing
                .iter()
                .any(|(_, p1, p2)| p1 == a1 && p2 == a2);
            if !duplicate {
                passing.push((prob, a1.to_vec(), a2.to_vec()));
                passing.sort_by(|a, b| b.0.total_cmp(&a.0));
                passing.truncate(MAX_KEPT_CODES);
            }
        }
        prob
    };

    let exhaustive = candidates <= caps.partition_cap as f64;
    let fallback = !exhaustive;
    if exhaustive {
        let mut assigns1: Vec<Vec<u32>> = Vec::new();
        enumerate_rgs(tables.x_len, b1, &mut |a| assigns1.push(a.to_vec()));
        let mut assigns2: Vec<Vec<u32>> = Vec::new();
        enumerate_rgs(tables.y_len, b2, &mut |a| assigns2.push(a.to_vec()));
        for a1 in &assigns1 {
            for a2 in &assigns2 {
                evaluated += 1;
                consider(
                    a1,
                    a2,
                    &tables,
                    &mut best_prob,
                    &mut best_assign,
                    &mut best_expected,
                    &mut passing,
                );
            }
        }
    } else {
        // seeded annealing over raw assignment pairs
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a1: Vec<u32> = (0..tables.x_len).map(|i| (i % b1) as u32).collect();
        let mut a2: Vec<u32> = (0..tables.y_len).map(|i| (i % b2) as u32).collect();
        let mut current = consider(
            &a1,
            &a2,
            &tables,
            &mut best_prob,
            &mut best_assign,
            &mut best_expected,
            &mut passing,
        );
        evaluated += 1;
        let t0 = 1.0f64;
        for k in 0..budget.saturating_sub(1) {
            let temp = (t0 * 0.995f64.powi(k.min(i32::MAX as u64) as i32)).max(1e-9);
            let side = rng.gen_bool(0.5);
            let (vec_ref, b) = if side { (&mut a1, b1) } else { (&mut a2, b2) };
            let pos = rng.gen_range(0..vec_ref.len());
            let old = vec_ref[pos];
            let new = rng.gen_range(0..b as u32);
            if new == old {
                continue;
            }
            vec_ref[pos] = new;
            evaluated += 1;
            let prob = consider(
                &a1,
                &a2,
                &tables,
                &mut best_prob,
                &mut best_assign,
                &mut best_expected,
                &mut passing,
            );
            let delta = current - prob; // positive when the move is worse
            if delta <= 0.0 || rng.gen::<f64>() < (-delta / temp).exp() {
                current = prob;
            } else {
                let (vec_ref, _) = if side { (&mut a1, b1) } else { (&mut a2, b2) };
                vec_ref[pos] = old;
            }
        }
    }

    let passing: Vec<CodeSummary> = passing
        .into_iter()
        .map(|(prob, a1, a2)| {
            let (e1, e2) = tables.expected_distortions(&a1, &a2);
            CodeSummary {
                cells_1: SearchTables::cells_of(&a1),
                cells_2: SearchTables::cells_of(&a2),
                event_prob: prob,
                expected_d1: e1,
                expected_d2: e2,
            }
        })
        .collect();

    let best_code = best_assign.map(|(a1, a2)| CodeSummary {
        cells_1: SearchTables::cells_of(&a1),
        cells_2: SearchTables::cells_of(&a2),
        event_prob: best_prob.max(0.0),
        expected_d1: tables.expected_distortions(&a1, &a2).0,
        expected_d2: tables.expected_distortions(&a1, &a2).1,
    });
    Ok(BruteForceOutcome {
        exhaustive,
        fallback,
        candidates_evaluated: evaluated,
        certificate: exhaustive.then_some(!passing.is_empty()),
        best_event_prob: best_prob.max(0.0),
        best_expected_distortions: best_expected,
        passing,
        best_code,
        rates_bits: (r1, r2),
        epsilon,
    })
}

/// Materialize a summary into a checked code (reconstructions re-derived).
pub fn code_from_summary(
    inst: &ProblemInstance,
    n: usize,
    summary: &CodeSummary,
    epsilon: f64,
    caps: &LabCaps,
) -> Result<DistributedCode, LabError> {
    let dplus = (inst.targets.0 + epsilon, inst.targets.1 + epsilon);
    let mut recon = Vec::new();
    for c1 in &summary.cells_1 {
        for c2 in &summary.cells_2 {
            recon.push(super::codes::event_optimal_recon(inst, n, c1, c2, dplus).0);
        }
    }
    DistributedCode::new(
        inst,
        n,
        summary.cells_1.clone(),
        summary.cells_2.clone(),
        recon,
        caps,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::dsbs_instance;
    use crate::lab::verify_distortion_constraint;

    fn caps() -> LabCaps {
        LabCaps::default()
    }

    #[test]
    fn stirling_counts() {
        assert_eq!(count_partitions(4, 2), 8.0); // S(4,1) + S(4,2) = 1 + 7
        assert_eq!(count_partitions(4, 4), 15.0); // Bell(4)
        assert_eq!(count_partitions(2, 2), 2.0);
    }

    #[test]
    fn rgs_enumerates_canonically() {
        let mut seen = Vec::new();
        enumerate_rgs(3, 2, &mut |a| seen.push(a.to_vec()));
        assert_eq!(
            seen,
            vec![
                vec![0, 0, 0],
                vec![0, 0, 1],
                vec![0, 1, 0],
                vec![0, 1, 1],
            ]
        );
    }

    #[test]
    fn lossless_identity_code_is_found_at_n1() {
        let inst = dsbs_instance(0.25, 0.0, 0.0);
        let out = brute_force_achievable(&inst, 1, 1.0, 1.0, 0.1, 0, 0, &caps()).unwrap();
        assert!(out.exhaustive);
        assert_eq!(out.certificate, Some(true));
        assert!((out.best_event_prob - 1.0).abs() < 1e-12);
        assert!(!out.passing.is_empty());
        // materialized codes re-verify
        let code = code_from_summary(&inst, 1, &out.passing[0], 0.1, &caps()).unwrap();
        let verdict = verify_distortion_constraint(&code, &inst, 0.1).unwrap();
        assert!(verdict.pass);
        assert!((verdict.probability - out.passing[0].event_prob).abs() < 1e-12);
    }

    #[test]
    fn zero_rate_zero_distortion_is_certified_unachievable() {
        let inst = dsbs_instance(0.25, 0.0, 0.0);
        let out = brute_force_achievable(&inst, 1, 0.0, 0.0, 0.01, 0, 0, &caps()).unwrap();
        assert!(out.exhaustive);
        assert_eq!(out.certificate, Some(false));
        assert!((out.best_event_prob - 0.375).abs() < 1e-12);
    }

    #[test]
    fn n2_single_bit_best_distortions_match_oracle() {
        let inst = dsbs_instance(0.25, 0.5, 0.5);
        let out = brute_force_achievable(&inst, 2, 0.5, 0.5, 0.2, 0, 0, &caps()).unwrap();
        assert!(out.exhaustive);
        // oracle: enumerate all labeled 2-colorings of both 4-element spaces
        // directly and minimize the summed expected distortion
        let tables = SearchTables::new(&inst, 2, 0.2, &caps()).unwrap();
        let mut best = f64::INFINITY;
        for m1 in 0..16u32 {
            let a1: Vec<u32> = (0..4).map(|i| (m1 >> i) & 1).collect();
            for m2 in 0..16u32 {
                let a2: Vec<u32> = (0..4).map(|i| (m2 >> i) & 1).collect();
                let (e1, e2) = tables.expected_distortions(&a1, &a2);
                best = best.min(e1 + e2);
            }
        }
        let got = out.best_expected_distortions.0 + out.best_expected_distortions.1;
        assert!((got - best).abs() < 1e-12, "{got} vs {best}");
    }

    #[test]
    fn randomized_fallback_reports_no_certificate() {
        let tiny = LabCaps {
            enumeration_cap: 10_000_000,
            partition_cap: 4,
        };
        let inst = dsbs_instance(0.25, 0.25, 0.25);
        let out = brute_force_achievable(&inst, 2, 0.5, 0.5, 0.3, 500, 7, &tiny).unwrap();
        assert!(!out.exhaustive);
        assert!(out.fallback);
        assert_eq!(out.certificate, None);
        assert!(out.best_event_prob >= 0.0);
        // deterministic under the same seed
        let again = brute_force_achievable(&inst, 2, 0.5, 0.5, 0.3, 500, 7, &tiny).unwrap();
        assert_eq!(out.best_event_prob, again.best_event_prob);
        assert_eq!(out.candidates_evaluated, again.candidates_evaluated);
    }
}
