//! Exact strong-typicality enumeration. All set definitions use strict
//! inequalities and per-symbol count bins of width epsilon over the
//! relevant alphabet size.

use super::seqs::{check_cap, check_pair_cap, SeqSpace};
use super::{LabCaps, LabError, TypicalSetSpec};
use crate::instance::DistortionMeasure;
use crate::prob::JointPmf;
use std::collections::BTreeSet;

/// Strict strong-typicality of a single-axis sequence:
/// every symbol count stays within `epsilon/|A|` of its probability.
pub fn is_typical(pmf: &JointPmf, seq: &[usize], epsilon: f64) -> bool {
    let m = pmf.num_cells();
    let n = seq.len() as f64;
    let mut counts = vec![0u32; m];
    for &s in seq {
        counts[s] += 1;
    }
    let bin = epsilon / m as f64;
    counts
        .iter()
        .zip(pmf.mass())
        .all(|(&c, &p)| (c as f64 / n - p).abs() < bin)
}

/// Joint typicality of a sequence pair under a two-axis joint:
/// pair counts within `epsilon/(|X||Y|)` of the joint mass.
pub fn is_jointly_typical(
    joint: &JointPmf,
    xs: &[usize],
    ys: &[usize],
    epsilon: f64,
) -> bool {
    let nx = joint.axes()[0].size();
    let ny = joint.axes()[1].size();
    let n = xs.len() as f64;
    let mut counts = vec![0u32; nx * ny];
    for (&x, &y) in xs.iter().zip(ys) {
        counts[x * ny + y] += 1;
    }
    let bin = epsilon / (nx * ny) as f64;
    counts
        .iter()
        .zip(joint.mass())
        .all(|(&c, &p)| (c as f64 / n - p).abs() < bin)
}

/// Enumerate the strongly typical set, in lexicographic id order.
pub fn typical_set(spec: &TypicalSetSpec, caps: &LabCaps) -> Result<Vec<u64>, LabError> {
    let m: usize = spec.pmf.axes().iter().map(|a| a.size()).product();
    check_cap(m, spec.n, caps)?;
    let flat = flatten(&spec.pmf)?;
    let space = SeqSpace::new(m, spec.n)?;
    Ok(space
        .ids()
        .filter(|&id| is_typical(&flat, &space.decode(id), spec.epsilon))
        .collect())
}

fn flatten(pmf: &JointPmf) -> Result<JointPmf, LabError> {
    if pmf.num_axes() == 1 {
        return Ok(pmf.clone());
    }
    let m = pmf.num_cells();
    Ok(JointPmf::new(
        vec![crate::prob::Alphabet::indexed("s", m).map_err(crate::prob::ProbError::from)?],
        pmf.mass().to_vec(),
    )?)
}

/// The conditional typical set of X given `yn`: those `xn` whose pair
/// counts with `yn` stay within the joint bin width. Equivalently, the
/// `xn` jointly typical with `yn`.
pub fn conditional_typical_set(
    joint: &JointPmf,
    yn: &[usize],
    epsilon: f64,
    caps: &LabCaps,
) -> Result<Vec<u64>, LabError> {
    if joint.num_axes() != 2 {
        return Err(LabError::WrongShape);
    }
    let nx = joint.axes()[0].size();
    check_cap(nx, yn.len(), caps)?;
    for (position, &y) in yn.iter().enumerate() {
        if y >= joint.axes()[1].size() {
            return Err(LabError::ForeignSymbol {
                position,
                symbol: y,
            });
        }
    }
    let space = SeqSpace::new(nx, yn.len())?;
    Ok(space
        .ids()
        .filter(|&id| is_jointly_typical(joint, &space.decode(id), yn, epsilon))
        .collect())
}

/// Union of conditional typical sets over a collection of conditioning
/// sequences (given by id over the Y space).
pub fn typical_with_set(
    joint: &JointPmf,
    ys: &[u64],
    n: usize,
    epsilon: f64,
    caps: &LabCaps,
) -> Result<Vec<u64>, LabError> {
    if joint.num_axes() != 2 {
        return Err(LabError::WrongShape);
    }
    let y_space = SeqSpace::new(joint.axes()[1].size(), n)?;
    let mut out = BTreeSet::new();
    for &yid in ys {
        let yn = y_space.decode(yid);
        for xid in conditional_typical_set(joint, &yn, epsilon, caps)? {
            out.insert(xid);
        }
    }
    Ok(out.into_iter().collect())
}

/// `{xn : T(Y | xn) ≠ ∅}` — the typical sequences that have at least one
/// jointly typical partner. Always a subset of the typical set of X.
pub fn extended_support(
    joint: &JointPmf,
    n: usize,
    epsilon: f64,
    caps: &LabCaps,
) -> Result<Vec<u64>, LabError> {
    if joint.num_axes() != 2 {
        return Err(LabError::WrongShape);
    }
    let nx = joint.axes()[0].size();
    let ny = joint.axes()[1].size();
    check_pair_cap(nx, ny, n, caps)?;
    let x_space = SeqSpace::new(nx, n)?;
    let y_space = SeqSpace::new(ny, n)?;
    let mut out = Vec::new();
    for xid in x_space.ids() {
        let xn = x_space.decode(xid);
        let found = y_space
            .ids()
            .any(|yid| is_jointly_typical(joint, &xn, &y_space.decode(yid), epsilon));
        if found {
            out.push(xid);
        }
    }
    Ok(out)
}

/// All jointly typical pairs `(xid, yid)` in lexicographic order.
pub fn joint_typical_pairs(
    joint: &JointPmf,
    n: usize,
    epsilon: f64,
    caps: &LabCaps,
) -> Result<Vec<(u64, u64)>, LabError> {
    if joint.num_axes() != 2 {
        return Err(LabError::WrongShape);
    }
    let nx = joint.axes()[0].size();
    let ny = joint.axes()[1].size();
    check_pair_cap(nx, ny, n, caps)?;
    let x_space = SeqSpace::new(nx, n)?;
    let y_space = SeqSpace::new(ny, n)?;
    let mut out = Vec::new();
    for xid in x_space.ids() {
        let xn = x_space.decode(xid);
        for yid in y_space.ids() {
            if is_jointly_typical(joint, &xn, &y_space.decode(yid), epsilon) {
                out.push((xid, yid));
            }
        }
    }
    Ok(out)
}

/// `A ⊆_ε B`: true iff `P(B | A) > 1 − ε` under the supplied measure.
pub fn weak_inclusion(
    a: &[u64],
    b: &[u64],
    prob_of: impl Fn(u64) -> f64,
    epsilon: f64,
) -> Result<bool, LabError> {
    let p_a: f64 = a.iter().map(|&id| prob_of(id)).sum();
    if p_a <= 0.0 {
        return Err(LabError::ZeroProbabilityEvent);
    }
    let b_set: BTreeSet<u64> = b.iter().copied().collect();
    let p_ab: f64 = a
        .iter()
        .filter(|id| b_set.contains(id))
        .map(|&id| prob_of(id))
        .sum();
    Ok(p_ab / p_a > 1.0 - epsilon)
}

/// The open ball `{xn : d(xn, center) < radius}` of source blocks around a
/// reconstruction block, under the normalized block distortion.
pub fn distortion_ball(
    center: &[usize],
    radius: f64,
    d: &DistortionMeasure,
    caps: &LabCaps,
) -> Result<Vec<u64>, LabError> {
    let n = center.len();
    if n == 0 {
        return Err(LabError::BadBlocklength);
    }
    for (position, &r) in center.iter().enumerate() {
        if r >= d.recon_alphabet().size() {
            return Err(LabError::ForeignSymbol {
                position,
                symbol: r,
            });
        }
    }
    let ns = d.source_alphabet().size();
    check_cap(ns, n, caps)?;
    let space = SeqSpace::new(ns, n)?;
    Ok(space
        .ids()
        .filter(|&id| {
            let xs = space.decode(id);
            super::seqs::block_distortion(d, &xs, center) < radius
        })
        .collect())
}

/// Closure property of a distributed typical set: whenever (xn, y1n) and
/// (x1n, yn) belong, the recombination (xn, yn) belongs too unless it is
/// atypical. `s` must be a subset of the jointly typical set.
pub fn is_distributed_typical_set(
    s: &[(u64, u64)],
    joint: &JointPmf,
    n: usize,
    epsilon: f64,
) -> Result<bool, LabError> {
    if joint.num_axes() != 2 {
        return Err(LabError::WrongShape);
    }
    let x_space = SeqSpace::new(joint.axes()[0].size(), n)?;
    let y_space = SeqSpace::new(joint.axes()[1].size(), n)?;
    let members: BTreeSet<(u64, u64)> = s.iter().copied().collect();
    for &(xid, yid) in s {
        if !is_jointly_typical(joint, &x_space.decode(xid), &y_space.decode(yid), epsilon) {
            return Err(LabError::NotTypicalSubset);
        }
    }
    for &(x, _y1) in s {
        let xn = x_space.decode(x);
        for &(_x1, y) in s {
            if members.contains(&(x, y)) {
                continue;
            }
            if is_jointly_typical(joint, &xn, &y_space.decode(y), epsilon) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Findings of one reverse-Markov audit over a three-axis joint (X, Z, Y).
#[derive(Debug, Clone)]
pub struct ReverseMarkovReport {
    /// A conditioning sequence witnessing the product condition
    /// `T(X|zn) × T(Y|zn) = T(XY|zn)` with both factors nonempty.
    pub witness: Option<Vec<usize>>,
    pub condition_holds: bool,
    /// L1 distance from the joint to its chain projection p(z)p(x|z)p(y|z).
    pub l1_to_markov: f64,
    /// Whether `l1 < 2ε`, when the condition was witnessed.
    pub conclusion_holds: Option<bool>,
    /// Number of conditioning sequences examined.
    pub z_checked: u64,
}

/// Empirical audit of the reverse Markov statement on a three-axis joint
/// with axes ordered (X, Z, Y): search for a conditioning block whose
/// conditional typical sets factorize, and compare the joint's distance to
/// its chain projection against the `2ε` budget.
///
/// A witness requires nonempty factors: an empty-set equality carries no
/// information about the joint.
pub fn reverse_markov_check(
    p: &JointPmf,
    n: usize,
    epsilon: f64,
    caps: &LabCaps,
) -> Result<ReverseMarkovReport, LabError> {
    if p.num_axes() != 3 {
        return Err(LabError::WrongShape);
    }
    let nx = p.axes()[0].size();
    let nz = p.axes()[1].size();
    let ny = p.axes()[2].size();
    // the witness search touches |Z|^n · (|X|^n + |Y|^n + |X|^n·|Y|^n) states
    let need = (nz as u128).pow(n as u32)
        * ((nx as u128).pow(n as u32) * (ny as u128).pow(n as u32)
            + (nx as u128).pow(n as u32)
            + (ny as u128).pow(n as u32));
    if need > caps.enumeration_cap as u128 {
        return Err(LabError::CapExceeded {
            need,
            cap: caps.enumeration_cap,
        });
    }

    let p_xz = p.marginalize(&[0, 1])?;
    let p_yz = p.marginalize(&[2, 1])?;
    let projection = p.markov_projection(&[0], &[1], &[2])?;
    let l1_to_markov = p.l1_distance(&projection)?;

    let z_space = SeqSpace::new(nz, n)?;
    let x_space = SeqSpace::new(nx, n)?;
    let y_space = SeqSpace::new(ny, n)?;
    let triple_bin = epsilon / (nx * ny * nz) as f64;

    let mut witness = None;
    let mut z_checked = 0u64;
    'zs: for zid in z_space.ids() {
        z_checked += 1;
        let zn = z_space.decode(zid);
        let tx: Vec<u64> = x_space
            .ids()
            .filter(|&xid| is_jointly_typical(&p_xz, &x_space.decode(xid), &zn, epsilon))
            .collect();
        if tx.is_empty() {
            continue;
        }
        let ty: Vec<u64> = y_space
            .ids()
            .filter(|&yid| is_jointly_typical(&p_yz, &y_space.decode(yid), &zn, epsilon))
            .collect();
        if ty.is_empty() {
            continue;
        }
        // T(XY|zn) ⊆ T(X|zn) × T(Y|zn) holds by marginalizing counts, so
        // equality reduces to every cross pair being triple-typical
        let mut counts = vec![0u32; nx * nz * ny];
        for &xid in &tx {
            let xn = x_space.decode(xid);
            for &yid in &ty {
                let yn = y_space.decode(yid);
                counts.iter_mut().for_each(|c| *c = 0);
                for t in 0..n {
                    counts[(xn[t] * nz + zn[t]) * ny + yn[t]] += 1;
                }
                let off = counts
                    .iter()
                    .zip(p.mass())
                    .any(|(&c, &cell)| ((c as f64) / n as f64 - cell).abs() >= triple_bin);
                if off {
                    continue 'zs; // some recombination is not triple-typical
                }
            }
        }
        witness = Some(zn);
        break;
    }

    let condition_holds = witness.is_some();
    Ok(ReverseMarkovReport {
        conclusion_holds: condition_holds.then_some(l1_to_markov < 2.0 * epsilon),
        witness,
        condition_holds,
        l1_to_markov,
        z_checked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::Alphabet;

    fn binary() -> Alphabet {
        Alphabet::indexed("s", 2).unwrap()
    }

    fn caps() -> LabCaps {
        LabCaps::default()
    }

    fn uniform_binary_spec(n: usize, epsilon: f64) -> TypicalSetSpec {
        TypicalSetSpec::new(
            n,
            epsilon,
            JointPmf::uniform(vec![binary()]).unwrap(),
            &caps(),
        )
        .unwrap()
    }

    #[test]
    fn uniform_binary_n2_oracle() {
        // strict bins: |k/2 − 1/2| < 0.3 admits only balanced sequences
        let set = typical_set(&uniform_binary_spec(2, 0.6), &caps()).unwrap();
        assert_eq!(set, vec![0b01, 0b10]);
        // widening epsilon past 1.0 admits everything
        let set = typical_set(&uniform_binary_spec(2, 1.2), &caps()).unwrap();
        assert_eq!(set.len(), 4);
    }

    #[test]
    fn point_mass_admits_only_the_constant_sequence() {
        let spec = TypicalSetSpec::new(
            3,
            0.6,
            JointPmf::new(vec![binary()], vec![1.0, 0.0]).unwrap(),
            &caps(),
        )
        .unwrap();
        let set = typical_set(&spec, &caps()).unwrap();
        assert_eq!(set, vec![0]);
    }

    #[test]
    fn vanishing_epsilon_empties_the_set() {
        // n = 3 cannot match p = 1/2 exactly, and the inequality is strict
        let set = typical_set(&uniform_binary_spec(3, 1e-9), &caps()).unwrap();
        assert!(set.is_empty());
    }

    #[test]
    fn enumeration_matches_naive_oracle() {
        let pmf = JointPmf::new(vec![binary()], vec![0.25, 0.75]).unwrap();
        let spec = TypicalSetSpec::new(4, 0.7, pmf.clone(), &caps()).unwrap();
        let set = typical_set(&spec, &caps()).unwrap();
        // oracle: recount from scratch for every sequence
        let space = SeqSpace::new(2, 4).unwrap();
        for id in space.ids() {
            let seq = space.decode(id);
            let ones = seq.iter().filter(|&&s| s == 1).count() as f64;
            let inside = (ones / 4.0 - 0.75).abs() < 0.7 / 2.0
                && ((4.0 - ones) / 4.0 - 0.25).abs() < 0.7 / 2.0;
            assert_eq!(set.contains(&id), inside, "id {id}");
        }
    }

    #[test]
    fn cap_is_enforced() {
        let tiny = LabCaps {
            enumeration_cap: 4,
            partition_cap: 10,
        };
        assert!(matches!(
            TypicalSetSpec::new(
                3,
                0.5,
                JointPmf::uniform(vec![binary()]).unwrap(),
                &tiny
            ),
            Err(LabError::CapExceeded { .. })
        ));
    }

    fn copy_joint() -> JointPmf {
        JointPmf::new(vec![binary(), binary()], vec![0.5, 0.0, 0.0, 0.5]).unwrap()
    }

    fn dsbs_joint(c: f64) -> JointPmf {
        JointPmf::new(
            vec![binary(), binary()],
            vec![(1.0 - c) / 2.0, c / 2.0, c / 2.0, (1.0 - c) / 2.0],
        )
        .unwrap()
    }

    #[test]
    fn conditional_copy_joint_pins_x_to_y() {
        let joint = copy_joint();
        // balanced yn is typical; the only conditionally typical xn is yn
        let set = conditional_typical_set(&joint, &[0, 1, 0, 1], 0.8, &caps()).unwrap();
        let space = SeqSpace::new(2, 4).unwrap();
        assert_eq!(set, vec![space.encode(&[0, 1, 0, 1]).unwrap()]);
        // atypical yn leaves nothing
        let set = conditional_typical_set(&joint, &[0, 0, 0, 0], 0.8, &caps()).unwrap();
        assert!(set.is_empty());
    }

    #[test]
    fn conditional_independent_joint_matches_oracle() {
        let joint = JointPmf::uniform(vec![binary(), binary()]).unwrap();
        let yn = [0, 1, 1, 0];
        let got = conditional_typical_set(&joint, &yn, 0.9, &caps()).unwrap();
        // oracle: direct pair-count enumeration
        let space = SeqSpace::new(2, 4).unwrap();
        let bin = 0.9 / 4.0;
        for id in space.ids() {
            let xn = space.decode(id);
            let mut counts = [0.0f64; 4];
            for t in 0..4 {
                counts[xn[t] * 2 + yn[t]] += 0.25; // 1/n with n = 4
            }
            let inside = counts.iter().all(|c| (c - 0.25).abs() < bin);
            assert_eq!(got.contains(&id), inside, "id {id}");
        }
    }

    #[test]
    fn typical_with_set_union_semantics() {
        let joint = dsbs_joint(0.25);
        let y_space = SeqSpace::new(2, 4).unwrap();
        let y1 = y_space.encode(&[0, 1, 0, 1]).unwrap();
        let single = typical_with_set(&joint, &[y1], 4, 0.9, &caps()).unwrap();
        let direct = conditional_typical_set(&joint, &[0, 1, 0, 1], 0.9, &caps()).unwrap();
        assert_eq!(single, direct);
        assert!(typical_with_set(&joint, &[], 4, 0.9, &caps())
            .unwrap()
            .is_empty());
        let y2 = y_space.encode(&[1, 0, 1, 0]).unwrap();
        let both = typical_with_set(&joint, &[y1, y2], 4, 0.9, &caps()).unwrap();
        assert!(both.len() >= single.len());
        for id in &single {
            assert!(both.contains(id));
        }
    }

    #[test]
    fn extended_support_is_inside_typical_set() {
        for eps in [0.5, 0.8, 1.1] {
            let joint = dsbs_joint(0.25);
            let ext = extended_support(&joint, 4, eps, &caps()).unwrap();
            let spec = TypicalSetSpec::new(
                4,
                eps,
                joint.marginalize(&[0]).unwrap(),
                &caps(),
            )
            .unwrap();
            let typ = typical_set(&spec, &caps()).unwrap();
            for id in &ext {
                assert!(typ.contains(id), "eps {eps}: {id} not typical");
            }
        }
    }

    #[test]
    fn extended_support_of_copy_joint_is_full_typical_set() {
        // at eps = 0.5 both the marginal bin (0.25) and the pair bin (0.125)
        // admit exactly the balanced sequences, so the sets coincide
        let joint = copy_joint();
        let ext = extended_support(&joint, 4, 0.5, &caps()).unwrap();
        let spec = TypicalSetSpec::new(
            4,
            0.5,
            joint.marginalize(&[0]).unwrap(),
            &caps(),
        )
        .unwrap();
        let typ = typical_set(&spec, &caps()).unwrap();
        assert_eq!(ext, typ);
        assert!(!ext.is_empty());
    }

    #[test]
    fn extended_support_of_independent_joint_at_large_epsilon_is_everything() {
        let joint = JointPmf::uniform(vec![binary(), binary()]).unwrap();
        let ext = extended_support(&joint, 4, 1.6, &caps()).unwrap();
        let spec = TypicalSetSpec::new(
            4,
            1.6,
            joint.marginalize(&[0]).unwrap(),
            &caps(),
        )
        .unwrap();
        let typ = typical_set(&spec, &caps()).unwrap();
        assert_eq!(ext, typ);
        assert_eq!(ext.len(), 16);
    }

    #[test]
    fn weak_inclusion_examples() {
        let prob = |id: u64| match id {
            0 => 0.5,
            1 => 0.45,
            2 => 0.05,
            _ => 0.0,
        };
        // subset: always weakly included
        assert!(weak_inclusion(&[0], &[0, 1], prob, 0.01).unwrap());
        // disjoint: never, for epsilon < 1
        assert!(!weak_inclusion(&[0], &[1], prob, 0.9).unwrap());
        // P(B|A) = 0.95 vs epsilon = 0.1
        assert!(weak_inclusion(&[0, 1, 2], &[0, 1], prob, 0.1).unwrap());
        assert!(matches!(
            weak_inclusion(&[3], &[0], prob, 0.5),
            Err(LabError::ZeroProbabilityEvent)
        ));
    }

    #[test]
    fn hamming_ball_examples() {
        let d = DistortionMeasure::hamming(binary());
        // strict inequality: a zero-radius ball is empty
        assert!(distortion_ball(&[0, 1, 0], 0.0, &d, &caps()).unwrap().is_empty());
        // radius above the maximum captures the whole space
        assert_eq!(
            distortion_ball(&[0, 1, 0], 1.5, &d, &caps()).unwrap().len(),
            8
        );
        // radius 0.34 at n = 3: the center plus its three 1-flips
        let ball = distortion_ball(&[0, 1, 0], 0.34, &d, &caps()).unwrap();
        assert_eq!(ball.len(), 4);
        let space = SeqSpace::new(2, 3).unwrap();
        assert!(ball.contains(&space.encode(&[0, 1, 0]).unwrap()));
    }

    #[test]
    fn singletons_and_rectangles_are_distributed_typical() {
        let joint = dsbs_joint(0.25);
        let pairs = joint_typical_pairs(&joint, 4, 0.9, &caps()).unwrap();
        assert!(!pairs.is_empty());
        // singletons
        assert!(is_distributed_typical_set(&pairs[..1], &joint, 4, 0.9).unwrap());
        // a full rectangle intersected with the typical set
        let xs: BTreeSet<u64> = pairs.iter().map(|p| p.0).take(3).collect();
        let ys: BTreeSet<u64> = pairs.iter().map(|p| p.1).take(3).collect();
        let rect: Vec<(u64, u64)> = pairs
            .iter()
            .copied()
            .filter(|(x, y)| xs.contains(x) && ys.contains(y))
            .collect();
        assert!(is_distributed_typical_set(&rect, &joint, 4, 0.9).unwrap());
    }

    #[test]
    fn broken_recombination_is_detected() {
        let joint = dsbs_joint(0.25);
        let pairs = joint_typical_pairs(&joint, 4, 0.9, &caps()).unwrap();
        let members: BTreeSet<(u64, u64)> = pairs.iter().copied().collect();
        // find (a,b), (c,d) typical with (a,d) typical too; drop (a,d)
        let mut example = None;
        'outer: for &(a, b) in &pairs {
            for &(c, d) in &pairs {
                if a != c && b != d && members.contains(&(a, d)) {
                    example = Some(vec![(a, b), (c, d)]);
                    break 'outer;
                }
            }
        }
        let s = example.expect("recombination example exists at this epsilon");
        assert!(!is_distributed_typical_set(&s, &joint, 4, 0.9).unwrap());
    }

    #[test]
    fn non_typical_member_is_a_domain_error() {
        let joint = dsbs_joint(0.25);
        // (0000, 1111) has wildly wrong pair counts at small epsilon
        assert!(matches!(
            is_distributed_typical_set(&[(0, 15)], &joint, 4, 0.4),
            Err(LabError::NotTypicalSubset)
        ));
    }

    #[test]
    fn typical_mass_grows_toward_one_minus_epsilon() {
        // P(T) is not monotone in n (integer count effects), but along this
        // subsequence it grows and clears the 1 − eps floor at the top
        let joint = dsbs_joint(0.25);
        let eps = 0.8;
        let mut last = 0.0;
        for n in [2usize, 4, 8, 10] {
            let pairs = joint_typical_pairs(&joint, n, eps, &caps()).unwrap();
            let x_space = SeqSpace::new(2, n).unwrap();
            let y_space = SeqSpace::new(2, n).unwrap();
            let mass: f64 = pairs
                .iter()
                .map(|&(x, y)| {
                    crate::lab::block_pair_prob(&joint, &x_space.decode(x), &y_space.decode(y))
                })
                .sum();
            assert!(mass + 1e-12 >= last, "n = {n}: {mass} < {last}");
            last = mass;
        }
        assert!(last >= 1.0 - eps, "largest blocklength reaches {last}");
    }

    #[test]
    fn thousand_random_rectangles_are_distributed_typical() {
        use rand::{Rng as _, SeedableRng as _};
        let joint = dsbs_joint(0.25);
        let n = 4;
        let eps = 0.9;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(123);
        let pairs = joint_typical_pairs(&joint, n, eps, &caps()).unwrap();
        assert!(!pairs.is_empty());
        for _ in 0..1000 {
            let mut s1 = BTreeSet::new();
            let mut s2 = BTreeSet::new();
            for _ in 0..rng.gen_range(1..6usize) {
                s1.insert(rng.gen_range(0..16u64));
                s2.insert(rng.gen_range(0..16u64));
            }
            let rect: Vec<(u64, u64)> = pairs
                .iter()
                .copied()
                .filter(|(x, y)| s1.contains(x) && s2.contains(y))
                .collect();
            assert!(
                is_distributed_typical_set(&rect, &joint, n, eps).unwrap(),
                "rectangle {s1:?} x {s2:?}"
            );
        }
    }

    fn exact_chain() -> JointPmf {
        // Z uniform, X = Z, Y = BSC(0.25)(Z): exactly Markov X − Z − Y
        let mut mass = vec![0.0; 8];
        for z in 0..2 {
            for y in 0..2 {
                let py = if y == z { 0.75 } else { 0.25 };
                mass[z * 4 + z * 2 + y] = 0.5 * py;
            }
        }
        JointPmf::new(vec![binary(), binary(), binary()], mass).unwrap()
    }

    #[test]
    fn exact_copy_chain_witnesses_and_satisfies_the_bound() {
        // X = Z = Y: balanced blocks have exact types at n = 4
        let mass = {
            let mut m = vec![0.0; 8];
            m[0] = 0.5;
            m[7] = 0.5;
            m
        };
        let p = JointPmf::new(vec![binary(), binary(), binary()], mass).unwrap();
        let report = reverse_markov_check(&p, 4, 0.8, &caps()).unwrap();
        assert!(report.condition_holds, "no witness found: {report:?}");
        assert!(report.l1_to_markov < 1e-12);
        assert_eq!(report.conclusion_holds, Some(true));
    }

    #[test]
    fn exact_bsc_chain_witnesses_at_matching_blocklength() {
        // the (0.375, 0.125) cells have exact types at n = 8
        let p = exact_chain();
        let wide = LabCaps {
            enumeration_cap: 200_000_000,
            partition_cap: 1_000_000,
        };
        let report = reverse_markov_check(&p, 8, 0.4, &wide).unwrap();
        assert!(report.condition_holds, "no witness found: {report:?}");
        assert!(report.l1_to_markov < 1e-12);
        assert_eq!(report.conclusion_holds, Some(true));
    }

    #[test]
    fn xor_structure_fails_the_condition() {
        // X, Y independent uniform, Z = X xor Y: far from any chain X−Z−Y
        let mut mass = vec![0.0; 8];
        for x in 0..2 {
            for y in 0..2 {
                let z = x ^ y;
                mass[x * 4 + z * 2 + y] = 0.25;
            }
        }
        let p = JointPmf::new(vec![binary(), binary(), binary()], mass).unwrap();
        let report = reverse_markov_check(&p, 4, 0.4, &caps()).unwrap();
        assert!(!report.condition_holds);
        assert!(report.conclusion_holds.is_none());
        assert!(report.l1_to_markov > 0.4);
    }

    #[test]
    fn perturbed_chain_keeps_the_bound_when_witnessed() {
        for seed in 0..20u64 {
            let delta = 0.01;
            let base = exact_chain();
            let mut mass = base.mass().to_vec();
            // shift delta/2 of mass between two cells with room
            let donor = mass
                .iter()
                .position(|&v| v > delta)
                .expect("cell with mass");
            let recipient = (donor + 1 + seed as usize % 7) % 8;
            mass[donor] -= delta / 2.0;
            mass[recipient] += delta / 2.0;
            let p = JointPmf::new(base.axes().to_vec(), mass).unwrap();
            for eps in [0.1, 0.2, 0.5, 0.9] {
                let report = reverse_markov_check(&p, 6, eps, &caps()).unwrap();
                if report.condition_holds {
                    assert_eq!(report.conclusion_holds, Some(report.l1_to_markov < 2.0 * eps));
                    assert!(
                        report.l1_to_markov < 2.0 * eps,
                        "seed {seed} eps {eps}: l1 {} ≥ {}",
                        report.l1_to_markov,
                        2.0 * eps
                    );
                }
            }
        }
    }
}
