//! Rate-region geometry: unions of member polyhedra, Pareto frontiers,
//! convex closures, per-direction sandwich comparisons, and the classical
//! two-terminal baselines.

use crate::instance::DistortionMeasure;
use crate::outer::RateTriple;
use crate::prob::{entropy_of_mass, JointPmf, ProbError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RegionError {
    #[error("a region needs at least one member triple")]
    Empty,
    #[error("distortion target {target} is below the floor {floor}")]
    BelowFloor { target: f64, floor: f64 },
    #[error("rate-distortion source must be a single-axis pmf")]
    WrongShape,
    #[error(transparent)]
    Prob(#[from] ProbError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    Inner,
    Outer,
}

impl std::fmt::Display for BoundKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundKind::Inner => write!(f, "inner"),
            BoundKind::Outer => write!(f, "outer"),
        }
    }
}

/// One traced support: the direction, the member triple that won it, and
/// provenance for reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionEntry {
    pub mu: (f64, f64),
    pub triple: RateTriple,
    /// Scalarized support value at `mu`.
    pub support: f64,
    /// Vertex of `triple` attaining the support.
    pub support_point: (f64, f64),
    pub candidate_id: String,
    pub feasibility_residual: f64,
    pub converged: bool,
}

/// A union of member polyhedra plus its cached Pareto frontier.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateRegion {
    kind: BoundKind,
    entries: Vec<RegionEntry>,
    frontier: Vec<(f64, f64)>,
}

impl RateRegion {
    pub fn from_entries(kind: BoundKind, entries: Vec<RegionEntry>) -> Self {
        let frontier = pareto_frontier(
            entries
                .iter()
                .flat_map(|e| e.triple.vertices())
                .collect(),
        );
        Self {
            kind,
            entries,
            frontier,
        }
    }

    pub fn kind(&self) -> BoundKind {
        self.kind
    }

    pub fn entries(&self) -> &[RegionEntry] {
        &self.entries
    }

    pub fn triples(&self) -> impl Iterator<Item = &RateTriple> {
        self.entries.iter().map(|e| &e.triple)
    }

    /// Pareto-minimal supporting vertices, sorted by R1 ascending.
    pub fn frontier(&self) -> &[(f64, f64)] {
        &self.frontier
    }

    /// Union membership: inside iff some member triple admits the point.
    pub fn contains(&self, r1: f64, r2: f64) -> bool {
        self.contains_with_slack(r1, r2, 0.0)
    }

    pub fn contains_with_slack(&self, r1: f64, r2: f64, slack: f64) -> bool {
        self.entries.iter().any(|e| e.triple.admits(r1, r2, slack))
    }

    /// Scalarized support of the union in direction `mu`: the minimum over
    /// member triples.
    pub fn support(&self, mu: (f64, f64)) -> f64 {
        self.entries
            .iter()
            .map(|e| e.triple.scalarized(mu).0)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Build a region from bare triples (used by tests and the lab);
/// traced regions carry richer entries.
pub fn region_from_triples(
    kind: BoundKind,
    triples: &[(RateTriple, String)],
) -> Result<RateRegion, RegionError> {
    if triples.is_empty() {
        return Err(RegionError::Empty);
    }
    let entries = triples
        .iter()
        .map(|(t, id)| RegionEntry {
            mu: (f64::NAN, f64::NAN),
            triple: *t,
            support: f64::NAN,
            support_point: (f64::NAN, f64::NAN),
            candidate_id: id.clone(),
            feasibility_residual: 0.0,
            converged: true,
        })
        .collect();
    Ok(RateRegion::from_entries(kind, entries))
}

/// Pareto-minimal points of a set (componentwise minimization), sorted by
/// R1 ascending; duplicates removed.
fn pareto_frontier(mut points: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    points.dedup();
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut best_r2 = f64::INFINITY;
    for p in points {
        if p.1 < best_r2 {
            // drop an earlier point with equal R1 but larger R2
            if let Some(last) = out.last() {
                if last.0 == p.0 {
                    out.pop();
                }
            }
            out.push(p);
            best_r2 = p.1;
        }
    }
    out
}

/// Lower-left convex hull of the region's frontier, sorted by R1 ascending.
/// Interior points above a chord are removed.
pub fn convex_closure_frontier(region: &RateRegion) -> Vec<(f64, f64)> {
    let pts = region.frontier();
    if pts.len() <= 2 {
        return pts.to_vec();
    }
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for &p in pts {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            // pop b when the turn a→b→p is clockwise or collinear,
            // i.e. b sits on or above the chord a--p
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross <= 1e-15 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}

/// One direction of a sandwich comparison.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DirectionGap {
    pub mu: (f64, f64),
    pub outer_support: f64,
    pub inner_support: f64,
    /// `inner − outer`; the sandwich predicts this stays ≥ −tolerance.
    pub gap: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SandwichReport {
    pub rows: Vec<DirectionGap>,
    pub tolerance: f64,
    pub all_ok: bool,
}

/// Compare scalarized supports direction by direction. Violations are
/// report rows, not errors.
pub fn sandwich_check(
    inner: &RateRegion,
    outer: &RateRegion,
    directions: &[(f64, f64)],
    tolerance: f64,
) -> SandwichReport {
    let rows: Vec<DirectionGap> = directions
        .iter()
        .map(|&mu| {
            let outer_support = outer.support(mu);
            let inner_support = inner.support(mu);
            let gap = inner_support - outer_support;
            DirectionGap {
                mu,
                outer_support,
                inner_support,
                gap,
                ok: gap >= -tolerance,
            }
        })
        .collect();
    let all_ok = rows.iter().all(|r| r.ok);
    SandwichReport {
        rows,
        tolerance,
        all_ok,
    }
}

/// `(H(X|Y), H(Y|X), H(XY))` — the corner rates of lossless distributed
/// coding of a dependent pair.
pub fn slepian_wolf_region(p: &JointPmf) -> Result<RateTriple, RegionError> {
    if p.num_axes() != 2 {
        return Err(RegionError::WrongShape);
    }
    Ok(RateTriple {
        r1_floor: p.conditional_entropy(&[0], &[1])?,
        r2_floor: p.conditional_entropy(&[1], &[0])?,
        sum_floor: p.entropy(&[0, 1])?,
    })
}

const BA_MAX_ITERS: usize = 20_000;
const BA_RATE_TOL: f64 = 1e-9;
const BA_DISTORTION_TOL: f64 = 1e-6;

/// R(D) for a single source by alternating minimization, with a bisection
/// on the Lagrange slope to land on the distortion target.
pub fn blahut_arimoto(
    p: &JointPmf,
    d: &DistortionMeasure,
    target: f64,
) -> Result<f64, RegionError> {
    blahut_arimoto_detail(p, d, target).map(|(rate, _)| rate)
}

/// As [`blahut_arimoto`], additionally returning the converged test
/// channel w(x̂ | x) in row-major |X| × |X̂| form.
pub fn blahut_arimoto_detail(
    p: &JointPmf,
    d: &DistortionMeasure,
    target: f64,
) -> Result<(f64, Vec<f64>), RegionError> {
    if p.num_axes() != 1 {
        return Err(RegionError::WrongShape);
    }
    let px = p.mass();
    let n = px.len();
    let m = d.recon_alphabet().size();
    let floor: f64 = px
        .iter()
        .enumerate()
        .map(|(x, &v)| v * d.row_min(x))
        .sum();
    if target < floor - 1e-12 {
        return Err(RegionError::BelowFloor {
            target,
            floor,
        });
    }
    let ceiling: f64 = (0..m)
        .map(|r| px.iter().enumerate().map(|(x, &v)| v * d.get(x, r)).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    if target >= ceiling {
        // rate zero: the best constant reconstruction, independent of x
        let best = (0..m)
            .min_by(|&a, &b| {
                let ea: f64 = px.iter().enumerate().map(|(x, &v)| v * d.get(x, a)).sum();
                let eb: f64 = px.iter().enumerate().map(|(x, &v)| v * d.get(x, b)).sum();
                ea.total_cmp(&eb)
            })
            .unwrap_or(0);
        let mut w = vec![0.0; n * m];
        for x in 0..n {
            w[x * m + best] = 1.0;
        }
        return Ok((0.0, w));
    }
    if target <= floor + BA_DISTORTION_TOL * 1e-3 {
        // distortion pinned at the floor: restrict support to row minimizers
        // and minimize mutual information over that support
        let mask: Vec<bool> = (0..n * m)
            .map(|i| {
                let (x, r) = (i / m, i % m);
                d.get(x, r) <= d.row_min(x) + 1e-15
            })
            .collect();
        let (rate, _, w) = ba_fixed_kernel(
            px,
            m,
            |x, r| if mask[x * m + r] { 1.0 } else { 0.0 },
            |x, r| d.get(x, r),
        );
        return Ok((rate, w));
    }

    // D(s) decreases in s; bracket then bisect
    let eval = |s: f64| {
        ba_fixed_kernel(px, m, |x, r| (-s * d.get(x, r)).exp2(), |x, r| d.get(x, r))
    };
    let mut s_lo = 0.0;
    let mut s_hi = 1.0;
    let mut hi = eval(s_hi);
    let mut guard = 0;
    while hi.1 > target && guard < 60 {
        s_hi *= 2.0;
        hi = eval(s_hi);
        guard += 1;
    }
    let mut rate = hi.0;
    let mut channel = hi.2;
    for _ in 0..200 {
        let mid = 0.5 * (s_lo + s_hi);
        let (r, dist, w) = eval(mid);
        let close = (dist - target).abs() < BA_DISTORTION_TOL;
        if dist > target && !close {
            s_lo = mid;
        } else {
            s_hi = mid;
            rate = r;
            channel = w;
        }
        if close || (s_hi - s_lo) * d.d_max() < 1e-12 {
            break;
        }
    }
    Ok((rate.max(0.0), channel))
}

/// Conditional rate-distortion with the conditioner known at both ends:
/// `min I(X; X̂ | Y)` subject to `E[d(X, X̂)] ≤ target`, solved by per-`y`
/// alternating minimization under a common Lagrange slope. Returns the rate
/// and the channel q(x̂ | x, y) in row-major ((x·|Y| + y), x̂) layout.
pub fn conditional_rd_channel(
    joint: &JointPmf,
    d: &DistortionMeasure,
    target: f64,
) -> Result<(f64, Vec<f64>), RegionError> {
    if joint.num_axes() != 2 {
        return Err(RegionError::WrongShape);
    }
    let nx = joint.axes()[0].size();
    let ny = joint.axes()[1].size();
    let m = d.recon_alphabet().size();
    let py: Vec<f64> = (0..ny)
        .map(|y| (0..nx).map(|x| joint.get(&[x, y])).sum())
        .collect();
    // conditional sources p(x | y)
    let cond: Vec<Vec<f64>> = (0..ny)
        .map(|y| {
            (0..nx)
                .map(|x| {
                    if py[y] > 0.0 {
                        joint.get(&[x, y]) / py[y]
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let floor: f64 = (0..ny)
        .map(|y| {
            py[y]
                * cond[y]
                    .iter()
                    .enumerate()
                    .map(|(x, &v)| v * d.row_min(x))
                    .sum::<f64>()
        })
        .sum();
    if target < floor - 1e-12 {
        return Err(RegionError::BelowFloor {
            target,
            floor,
        });
    }
    let run = |slope: f64| -> (f64, f64, Vec<f64>) {
        let mut rate = 0.0;
        let mut dist = 0.0;
        let mut w = vec![0.0; nx * ny * m];
        for y in 0..ny {
            if py[y] == 0.0 {
                continue;
            }
            let (r, dd, wy) = if slope.is_infinite() {
                ba_fixed_kernel(
                    &cond[y],
                    m,
                    |x, r| {
                        if d.get(x, r) <= d.row_min(x) + 1e-15 {
                            1.0
                        } else {
                            0.0
                        }
                    },
                    |x, r| d.get(x, r),
                )
            } else {
                ba_fixed_kernel(
                    &cond[y],
                    m,
                    |x, r| (-slope * d.get(x, r)).exp2(),
                    |x, r| d.get(x, r),
                )
            };
            rate += py[y] * r;
            dist += py[y] * dd;
            for x in 0..nx {
                for r in 0..m {
                    w[(x * ny + y) * m + r] = wy[x * m + r];
                }
            }
        }
        (rate, dist, w)
    };
    if target <= floor + BA_DISTORTION_TOL * 1e-3 {
        let (rate, _, w) = run(f64::INFINITY);
        return Ok((rate, w));
    }
    let mut s_hi = 1.0;
    let mut hi = run(s_hi);
    let mut guard = 0;
    while hi.1 > target && guard < 60 {
        s_hi *= 2.0;
        hi = run(s_hi);
        guard += 1;
    }
    let mut s_lo = 0.0;
    let (mut rate, mut channel) = (hi.0, hi.2);
    for _ in 0..200 {
        let mid = 0.5 * (s_lo + s_hi);
        let (r, dist, w) = run(mid);
        let close = (dist - target).abs() < BA_DISTORTION_TOL;
        if dist > target && !close {
            s_lo = mid;
        } else {
            s_hi = mid;
            rate = r;
            channel = w;
        }
        if close || (s_hi - s_lo) * d.d_max() < 1e-12 {
            break;
        }
    }
    Ok((rate.max(0.0), channel))
}

/// Alternating minimization at a fixed exponential weight `a(x, r)`;
/// returns `(I(X; X̂), E[d], channel)` at the converged test channel.
fn ba_fixed_kernel(
    px: &[f64],
    m: usize,
    a: impl Fn(usize, usize) -> f64,
    d: impl Fn(usize, usize) -> f64,
) -> (f64, f64, Vec<f64>) {
    let n = px.len();
    let mut qr = vec![1.0 / m as f64; m];
    let mut w = vec![0.0; n * m];
    let mut last_rate = f64::INFINITY;
    for _ in 0..BA_MAX_ITERS {
        // channel update
        for x in 0..n {
            let mut z = 0.0;
            for r in 0..m {
                let v = qr[r] * a(x, r);
                w[x * m + r] = v;
                z += v;
            }
            if z > 0.0 {
                for r in 0..m {
                    w[x * m + r] /= z;
                }
            }
        }
        // output update
        for (r, q) in qr.iter_mut().enumerate() {
            *q = (0..n).map(|x| px[x] * w[x * m + r]).sum();
        }
        // rate at the current pair
        let mut rate = 0.0;
        for x in 0..n {
            for r in 0..m {
                let v = px[x] * w[x * m + r];
                if v > 0.0 && qr[r] > 0.0 {
                    rate += v * (w[x * m + r] / qr[r]).log2();
                }
            }
        }
        let done = (last_rate - rate).abs() < BA_RATE_TOL;
        last_rate = rate;
        if done {
            break;
        }
    }
    let mut joint = vec![0.0; n * m];
    let mut dist = 0.0;
    for x in 0..n {
        for r in 0..m {
            let v = px[x] * w[x * m + r];
            joint[x * m + r] = v;
            dist += v * d(x, r);
        }
    }
    let rate = (entropy_of_mass(px) + entropy_of_mass(&qr) - entropy_of_mass(&joint)).max(0.0);
    (rate, dist, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::dsbs_instance;
    use crate::prob::{xlog2, Alphabet};

    fn h2(q: f64) -> f64 {
        -xlog2(q) - xlog2(1.0 - q)
    }

    fn triple(a: f64, b: f64, c: f64) -> RateTriple {
        RateTriple {
            r1_floor: a,
            r2_floor: b,
            sum_floor: c,
        }
    }

    #[test]
    fn single_triple_frontier_is_its_two_vertices() {
        let region =
            region_from_triples(BoundKind::Outer, &[(triple(0.3, 0.4, 1.0), "t".into())]).unwrap();
        assert_eq!(region.frontier(), &[(0.3, 0.7), (0.6, 0.4)]);
    }

    #[test]
    fn zero_triple_gives_full_quadrant() {
        let region =
            region_from_triples(BoundKind::Outer, &[(triple(0.0, 0.0, 0.0), "t".into())]).unwrap();
        assert!(region.contains(0.0, 0.0));
        assert!(region.contains(3.0, 0.0));
        assert_eq!(region.frontier(), &[(0.0, 0.0)]);
    }

    #[test]
    fn nested_triples_keep_only_the_looser_frontier() {
        let loose = triple(0.2, 0.2, 0.5);
        let tight = triple(0.4, 0.4, 1.0);
        let region = region_from_triples(
            BoundKind::Outer,
            &[(loose, "a".into()), (tight, "b".into())],
        )
        .unwrap();
        for &(r1, r2) in region.frontier() {
            assert!(loose.admits(r1, r2, 1e-12));
        }
    }

    #[test]
    fn empty_region_is_an_error() {
        assert!(matches!(
            region_from_triples(BoundKind::Inner, &[]),
            Err(RegionError::Empty)
        ));
    }

    #[test]
    fn membership_consistency_on_frontier() {
        let region = region_from_triples(
            BoundKind::Outer,
            &[
                (triple(0.3, 0.4, 1.0), "a".into()),
                (triple(0.1, 0.8, 1.1), "b".into()),
            ],
        )
        .unwrap();
        for &(r1, r2) in region.frontier() {
            assert!(region.contains(r1, r2));
        }
    }

    #[test]
    fn hull_removes_point_above_chord() {
        let region = region_from_triples(
            BoundKind::Outer,
            &[
                (triple(0.0, 1.0, 1.0), "a".into()),
                (triple(1.0, 0.0, 1.0), "b".into()),
                (triple(0.5, 0.9, 1.4), "c".into()),
            ],
        )
        .unwrap();
        let hull = convex_closure_frontier(&region);
        assert!(hull.iter().all(|&(_, r2)| r2 <= 1.0 + 1e-12));
        // chord from (0,1) to (1,0): the (0.5, 0.9) vertex sits above it
        assert!(!hull.contains(&(0.5, 0.9)));
    }

    #[test]
    fn hull_of_single_point_is_itself() {
        let region =
            region_from_triples(BoundKind::Outer, &[(triple(0.5, 0.5, 1.0), "a".into())])
                .unwrap();
        let hull = convex_closure_frontier(&region);
        assert_eq!(hull, region.frontier().to_vec());
    }

    #[test]
    fn hull_slopes_flatten_left_to_right() {
        let region = region_from_triples(
            BoundKind::Outer,
            &[
                (triple(0.0, 2.0, 2.0), "a".into()),
                (triple(0.8, 0.2, 1.2), "b".into()),
                (triple(2.0, 0.0, 2.0), "c".into()),
            ],
        )
        .unwrap();
        let hull = convex_closure_frontier(&region);
        let mut last_slope = f64::NEG_INFINITY;
        for pair in hull.windows(2) {
            let slope = (pair[1].1 - pair[0].1) / (pair[1].0 - pair[0].0);
            assert!(slope >= last_slope - 1e-12, "hull not convex: {hull:?}");
            last_slope = slope;
        }
    }

    #[test]
    fn sandwich_on_identical_regions_is_all_zero() {
        let region =
            region_from_triples(BoundKind::Outer, &[(triple(0.3, 0.3, 0.9), "a".into())])
                .unwrap();
        let report = sandwich_check(&region, &region, &crate::solver::default_directions(), 1e-9);
        assert!(report.all_ok);
        assert!(report.rows.iter().all(|r| r.gap.abs() < 1e-12));
    }

    #[test]
    fn sandwich_against_full_quadrant_outer() {
        let inner =
            region_from_triples(BoundKind::Inner, &[(triple(0.4, 0.4, 1.0), "a".into())])
                .unwrap();
        let outer =
            region_from_triples(BoundKind::Outer, &[(triple(0.0, 0.0, 0.0), "b".into())])
                .unwrap();
        let report = sandwich_check(&inner, &outer, &[(1.0, 1.0)], 1e-9);
        assert!(report.all_ok);
        assert!((report.rows[0].gap - 1.0).abs() < 1e-12);
    }

    #[test]
    fn slepian_wolf_triple_examples() {
        let p = dsbs_instance(0.25, 0.0, 0.0).source;
        let t = slepian_wolf_region(&p).unwrap();
        assert!((t.r1_floor - h2(0.25)).abs() < 1e-12);
        assert!((t.r2_floor - h2(0.25)).abs() < 1e-12);
        assert!((t.sum_floor - (1.0 + h2(0.25))).abs() < 1e-12);

        let binary = Alphabet::new(vec!["0".into(), "1".into()]).unwrap();
        let ind = JointPmf::uniform(vec![binary.clone(), binary.clone()]).unwrap();
        let t = slepian_wolf_region(&ind).unwrap();
        assert!((t.r1_floor - 1.0).abs() < 1e-12);
        assert!((t.sum_floor - 2.0).abs() < 1e-12);

        let copy = JointPmf::new(vec![binary.clone(), binary], vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        let t = slepian_wolf_region(&copy).unwrap();
        assert!(t.r1_floor < 1e-12);
        assert!(t.r2_floor < 1e-12);
        assert!((t.sum_floor - 1.0).abs() < 1e-12);
    }

    fn uniform_binary_hamming() -> (JointPmf, DistortionMeasure) {
        let b = Alphabet::new(vec!["0".into(), "1".into()]).unwrap();
        (
            JointPmf::uniform(vec![b.clone()]).unwrap(),
            DistortionMeasure::hamming(b),
        )
    }

    #[test]
    fn ba_matches_closed_form_at_quarter() {
        let (p, d) = uniform_binary_hamming();
        let r = blahut_arimoto(&p, &d, 0.25).unwrap();
        assert!((r - (1.0 - h2(0.25))).abs() < 1e-4, "rate {r}");
    }

    #[test]
    fn ba_matches_closed_form_at_eleven_percent() {
        let (p, d) = uniform_binary_hamming();
        let r = blahut_arimoto(&p, &d, 0.11).unwrap();
        assert!((r - (1.0 - h2(0.11))).abs() < 1e-4, "rate {r}");
    }

    #[test]
    fn ba_is_zero_at_rate_zero_ceiling() {
        let (p, d) = uniform_binary_hamming();
        assert_eq!(blahut_arimoto(&p, &d, 0.5).unwrap(), 0.0);
        assert_eq!(blahut_arimoto(&p, &d, 0.8).unwrap(), 0.0);
    }

    #[test]
    fn ba_at_zero_distortion_is_source_entropy() {
        let (p, d) = uniform_binary_hamming();
        let r = blahut_arimoto(&p, &d, 0.0).unwrap();
        assert!((r - 1.0).abs() < 1e-6, "rate {r}");

        let b = Alphabet::new(vec!["0".into(), "1".into()]).unwrap();
        let skew = JointPmf::new(vec![b.clone()], vec![0.25, 0.75]).unwrap();
        let r = blahut_arimoto(&skew, &DistortionMeasure::hamming(b), 0.0).unwrap();
        assert!((r - h2(0.25)).abs() < 1e-6, "rate {r}");
    }

    #[test]
    fn ba_rejects_targets_below_floor() {
        let b = Alphabet::new(vec!["0".into(), "1".into()]).unwrap();
        let p = JointPmf::uniform(vec![b.clone()]).unwrap();
        let d = DistortionMeasure::new(
            b.clone(),
            b,
            &[vec![0.2, 1.0], vec![1.0, 0.2]],
        )
        .unwrap();
        assert!(matches!(
            blahut_arimoto(&p, &d, 0.1),
            Err(RegionError::BelowFloor { .. })
        ));
    }

    #[test]
    fn ba_is_monotone_in_distortion() {
        let (p, d) = uniform_binary_hamming();
        let mut last = f64::INFINITY;
        for i in 0..20 {
            let target = i as f64 * 0.025;
            let r = blahut_arimoto(&p, &d, target).unwrap();
            assert!(r <= last + 1e-6, "R({target}) = {r} after {last}");
            last = r;
        }
    }
}
