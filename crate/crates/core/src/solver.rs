//! Machinery shared by the two bound solvers: user-facing options, the
//! default direction sweep, simplex and halfspace projections, and the
//! multi-start harness.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Knobs accepted in the instance document's `solver` object and as CLI
/// overrides. Defaults are the documented ones; tests shrink `starts` and
/// `grid_K` where runtime matters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub starts: usize,
    pub seed: u64,
    pub beta_schedule: Vec<f64>,
    #[serde(rename = "grid_K")]
    pub grid_k: usize,
    pub feasibility_tol: f64,
    pub objective_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            starts: 32,
            seed: 0,
            beta_schedule: vec![1.0, 10.0, 100.0, 1e3, 1e4],
            grid_k: 8,
            feasibility_tol: 1e-6,
            objective_tol: 1e-9,
        }
    }
}

/// 17 weight directions with `mu1/(mu1+mu2)` running over {0, 1/16, ..., 1}.
pub fn default_directions() -> Vec<(f64, f64)> {
    (0..=16)
        .map(|k| {
            let t = k as f64 / 16.0;
            (t, 1.0 - t)
        })
        .collect()
}

/// Per-start RNG: one seed, independent ChaCha streams.
pub fn start_rng(seed: u64, start: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(start as u64);
    rng
}

/// Dirichlet(1) draw: normalized exponentials.
pub fn dirichlet_row(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let mut row: Vec<f64> = (0..m).map(|_| -f64::ln(1.0 - rng.gen::<f64>())).collect();
    let sum: f64 = row.iter().sum();
    row.iter_mut().for_each(|v| *v /= sum);
    row
}

/// Euclidean projection of `v` onto the probability simplex.
pub fn simplex_project(v: &mut [f64]) {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
    // renormalize away the last float crumbs
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    } else if !v.is_empty() {
        let u = 1.0 / v.len() as f64;
        v.iter_mut().for_each(|x| *x = u);
    }
}

/// A closed halfspace `⟨normal, w⟩ ≤ offset`.
#[derive(Debug, Clone)]
pub struct HalfSpace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl HalfSpace {
    pub fn violation(&self, w: &[f64]) -> f64 {
        let dot: f64 = self.normal.iter().zip(w).map(|(a, b)| a * b).sum();
        dot - self.offset
    }

    fn project(&self, w: &mut [f64]) {
        let viol = self.violation(w);
        if viol <= 0.0 {
            return;
        }
        let norm2: f64 = self.normal.iter().map(|a| a * a).sum();
        if norm2 == 0.0 {
            return;
        }
        let step = viol / norm2;
        for (x, a) in w.iter_mut().zip(&self.normal) {
            *x -= step * a;
        }
    }
}

/// Dykstra's alternating projections onto the intersection of the per-row
/// simplices of `w` (rows × cols, row-major) and the given halfspaces.
///
/// Keeps the linear constraints satisfied to float precision while staying
/// as close as possible to the input point.
pub fn dykstra_project(w: &mut [f64], rows: usize, cols: usize, halfspaces: &[HalfSpace]) {
    debug_assert_eq!(w.len(), rows * cols);
    let n_sets = 1 + halfspaces.len();
    let mut corrections = vec![vec![0.0; w.len()]; n_sets];
    let mut prev = w.to_vec();
    for _cycle in 0..500 {
        for (set, corr) in corrections.iter_mut().enumerate() {
            for (x, c) in w.iter_mut().zip(corr.iter()) {
                *x += *c;
            }
            let before = w.to_vec();
            if set == 0 {
                for r in 0..rows {
                    simplex_project(&mut w[r * cols..(r + 1) * cols]);
                }
            } else {
                halfspaces[set - 1].project(w);
            }
            for ((c, b), x) in corr.iter_mut().zip(before).zip(w.iter()) {
                *c = b - *x;
            }
        }
        let drift = w
            .iter()
            .zip(&prev)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let feasible = halfspaces.iter().all(|h| h.violation(w) <= 1e-12);
        if drift < 1e-13 && feasible {
            break;
        }
        prev.copy_from_slice(w);
    }
    // final pass so rows are exact pmfs
    for r in 0..rows {
        let row = &mut w[r * cols..(r + 1) * cols];
        for x in row.iter_mut() {
            *x = x.max(0.0);
        }
        let s: f64 = row.iter().sum();
        if s > 0.0 {
            row.iter_mut().for_each(|x| *x /= s);
        }
    }
}

/// Which polyhedron vertex a scalarized evaluation picked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VertexChoice {
    First,
    Second,
}

/// Minimum of `mu1·R1 + mu2·R2` over the polyhedron
/// `{R1 ≥ r1, R2 ≥ r2, R1+R2 ≥ rsum}`, attained at one of its two vertices.
///
/// Returns the value, the coefficients `(c1, c2, cs)` such that the value is
/// `c1·r1 + c2·r2 + cs·rsum` (the active linearization used for gradients),
/// the chosen vertex, and its coordinates. Ties break toward the first vertex.
pub fn scalarized_vertex(
    r1: f64,
    r2: f64,
    rsum: f64,
    mu: (f64, f64),
) -> (f64, [f64; 3], VertexChoice, (f64, f64)) {
    let (mu1, mu2) = mu;
    // vertex 1: (r1, max(r2, rsum − r1))
    let (v1_r2, c_v1) = if rsum - r1 > r2 {
        (rsum - r1, [mu1 - mu2, 0.0, mu2])
    } else {
        (r2, [mu1, mu2, 0.0])
    };
    let val1 = mu1 * r1 + mu2 * v1_r2;
    // vertex 2: (max(r1, rsum − r2), r2)
    let (v2_r1, c_v2) = if rsum - r2 > r1 {
        (rsum - r2, [0.0, mu2 - mu1, mu1])
    } else {
        (r1, [mu1, mu2, 0.0])
    };
    let val2 = mu1 * v2_r1 + mu2 * r2;
    if val1 <= val2 {
        (val1, c_v1, VertexChoice::First, (r1, v1_r2))
    } else {
        (val2, c_v2, VertexChoice::Second, (v2_r1, r2))
    }
}

/// Run `starts` independent tasks, in parallel, preserving index order.
pub(crate) fn run_multistart<T: Send>(
    starts: usize,
    f: impl Fn(usize) -> T + Sync + Send,
) -> Vec<T> {
    (0..starts).into_par_iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_projection_is_identity_on_simplex() {
        let mut v = vec![0.2, 0.3, 0.5];
        simplex_project(&mut v);
        assert!((v[0] - 0.2).abs() < 1e-12);
        assert!((v[2] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn simplex_projection_clips_negatives() {
        let mut v = vec![1.4, -0.2, -0.2];
        simplex_project(&mut v);
        assert!((v[0] - 1.0).abs() < 1e-12);
        assert_eq!(v[1], 0.0);
        let s: f64 = v.iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dykstra_satisfies_rows_and_halfspace() {
        // two rows of width 2, constraint w[1] + w[3] ≤ 0.3
        let mut w = vec![0.2, 0.8, 0.1, 0.9];
        let hs = HalfSpace {
            normal: vec![0.0, 1.0, 0.0, 1.0],
            offset: 0.3,
        };
        dykstra_project(&mut w, 2, 2, &[hs.clone()]);
        assert!(hs.violation(&w) <= 1e-9);
        assert!(((w[0] + w[1]) - 1.0).abs() < 1e-12);
        assert!(((w[2] + w[3]) - 1.0).abs() < 1e-12);
        assert!(w.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn vertex_tie_breaks_toward_first() {
        // symmetric triple: both vertices give the same value
        let (val, _, choice, point) = scalarized_vertex(0.5, 0.5, 1.2, (1.0, 1.0));
        assert!((val - 1.2).abs() < 1e-12);
        assert_eq!(choice, VertexChoice::First);
        assert!((point.0 - 0.5).abs() < 1e-12);
        assert!((point.1 - 0.7).abs() < 1e-12);
    }

    #[test]
    fn degenerate_weight_reduces_to_r1_floor() {
        let (val, _, choice, _) = scalarized_vertex(0.3, 0.9, 1.0, (1.0, 0.0));
        assert!((val - 0.3).abs() < 1e-12);
        assert_eq!(choice, VertexChoice::First);
    }

    #[test]
    fn direction_sweep_has_17_normalized_entries() {
        let dirs = default_directions();
        assert_eq!(dirs.len(), 17);
        for (a, b) in dirs {
            assert!((a + b - 1.0).abs() < 1e-12);
        }
    }
}
