//! Finite-alphabet probability: dense joint mass functions, conditional
//! kernels, and the information measures everything else is built on.
//!
//! Conventions: logarithms are base 2 (all quantities are in bits),
//! `0·log 0 = 0`, and information values within [`INFO_CLAMP`] below zero
//! are clamped to zero. Joints are stored dense; alphabets stay desk-scale.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Mass functions must sum to one within this.
pub const NORMALIZATION_TOL: f64 = 1e-12;
/// Width of the clamp-to-zero band for information quantities.
pub const INFO_CLAMP: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ProbError {
    #[error("alphabet needs at least one symbol")]
    EmptyAlphabet,
    #[error("duplicate symbol label `{0}`")]
    DuplicateLabel(String),
    #[error("axis {axis} out of range for {num_axes} axes")]
    AxisOutOfRange { axis: usize, num_axes: usize },
    #[error("axis sets must be disjoint (axis {0} repeated)")]
    OverlappingAxes(usize),
    #[error("axis set must be nonempty")]
    EmptyAxisSet,
    #[error("axis blocks must cover every axis exactly once")]
    BadAxisPartition,
    #[error("mass must be nonnegative (cell {index} holds {value})")]
    NegativeMass { index: usize, value: f64 },
    #[error("mass sums to {sum:.17}, expected 1 within {tol}")]
    NotNormalized { sum: f64, tol: f64 },
    #[error("mass length {got} does not match product alphabet size {want}")]
    WrongLength { got: usize, want: usize },
    #[error("operands are defined over different alphabets")]
    AxisMismatch,
    #[error("kernel row {row} sums to {sum:.17}, expected 1")]
    BadKernelRow { row: usize, sum: f64 },
    #[error("kernel has no row for a conditioning cell with positive mass")]
    MissingKernelRow,
    #[error("tolerances must be nonnegative")]
    NegativeTolerance,
}

/// Neumaier compensated accumulator; keeps entropy sums accurate enough
/// that clamp bands of 1e-12 are meaningful even on 4-axis joints.
#[derive(Clone, Copy, Default)]
pub(crate) struct Accum {
    sum: f64,
    comp: f64,
}

impl Accum {
    pub(crate) fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(self) -> f64 {
        self.sum + self.comp
    }
}

/// `p·log2 p` with the `0·log 0 = 0` convention.
#[inline]
pub fn xlog2(p: f64) -> f64 {
    if p > 0.0 {
        p * p.log2()
    } else {
        0.0
    }
}

/// Entropy in bits of a raw nonnegative mass slice (not necessarily checked).
pub fn entropy_of_mass(mass: &[f64]) -> f64 {
    let mut acc = Accum::default();
    for &p in mass {
        acc.add(-xlog2(p));
    }
    clamp_info(acc.value())
}

#[inline]
pub(crate) fn clamp_info(v: f64) -> f64 {
    if v < 0.0 && v > -INFO_CLAMP {
        0.0
    } else {
        v
    }
}

/// A finite, ordered symbol alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    labels: Vec<String>,
}

impl Alphabet {
    pub fn new(labels: Vec<String>) -> Result<Self, ProbError> {
        if labels.is_empty() {
            return Err(ProbError::EmptyAlphabet);
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(ProbError::DuplicateLabel(l.clone()));
            }
        }
        Ok(Self { labels })
    }

    /// `size` symbols named `prefix0`, `prefix1`, ...
    pub fn indexed(prefix: &str, size: usize) -> Result<Self, ProbError> {
        Self::new((0..size).map(|i| format!("{prefix}{i}")).collect())
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// A normalized joint probability mass function over a product of alphabets.
///
/// Storage is dense row-major with the last axis varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointPmf {
    axes: Vec<Alphabet>,
    mass: Vec<f64>,
}

fn strides(axes: &[Alphabet]) -> Vec<usize> {
    let mut s = vec![1usize; axes.len()];
    for i in (0..axes.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * axes[i + 1].size();
    }
    s
}

fn check_axes(axes: &[&[usize]], num_axes: usize) -> Result<(), ProbError> {
    let mut seen = vec![false; num_axes];
    for block in axes {
        for &a in *block {
            if a >= num_axes {
                return Err(ProbError::AxisOutOfRange { axis: a, num_axes });
            }
            if seen[a] {
                return Err(ProbError::OverlappingAxes(a));
            }
            seen[a] = true;
        }
    }
    Ok(())
}

impl JointPmf {
    pub fn new(axes: Vec<Alphabet>, mass: Vec<f64>) -> Result<Self, ProbError> {
        if axes.is_empty() {
            return Err(ProbError::EmptyAxisSet);
        }
        let want: usize = axes.iter().map(Alphabet::size).product();
        if mass.len() != want {
            return Err(ProbError::WrongLength {
                got: mass.len(),
                want,
            });
        }
        let mut acc = Accum::default();
        for (i, &v) in mass.iter().enumerate() {
            if v < 0.0 || !v.is_finite() {
                return Err(ProbError::NegativeMass { index: i, value: v });
            }
            acc.add(v);
        }
        let sum = acc.value();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(ProbError::NotNormalized {
                sum,
                tol: NORMALIZATION_TOL,
            });
        }
        Ok(Self { axes, mass })
    }

    pub fn uniform(axes: Vec<Alphabet>) -> Result<Self, ProbError> {
        if axes.is_empty() {
            return Err(ProbError::EmptyAxisSet);
        }
        let n: usize = axes.iter().map(Alphabet::size).product();
        let mass = vec![1.0 / n as f64; n];
        Self::new(axes, mass)
    }

    pub fn axes(&self) -> &[Alphabet] {
        &self.axes
    }

    pub fn num_axes(&self) -> usize {
        self.axes.len()
    }

    pub fn num_cells(&self) -> usize {
        self.mass.len()
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn get(&self, coords: &[usize]) -> f64 {
        self.mass[self.flat_index(coords)]
    }

    pub fn flat_index(&self, coords: &[usize]) -> usize {
        debug_assert_eq!(coords.len(), self.axes.len());
        let s = strides(&self.axes);
        coords.iter().zip(&s).map(|(&c, &st)| c * st).sum()
    }

    pub fn coords_of(&self, mut index: usize) -> Vec<usize> {
        let s = strides(&self.axes);
        s.iter()
            .map(|&st| {
                let c = index / st;
                index %= st;
                c
            })
            .collect()
    }

    /// Entropy in bits of the marginal on `subset`.
    pub fn entropy(&self, subset: &[usize]) -> Result<f64, ProbError> {
        let marg = self.marginalize(subset)?;
        Ok(entropy_of_mass(&marg.mass))
    }

    /// `H(target | given) = H(target, given) − H(given)`, clamped at zero.
    pub fn conditional_entropy(&self, target: &[usize], given: &[usize]) -> Result<f64, ProbError> {
        check_axes(&[target, given], self.axes.len())?;
        if target.is_empty() {
            return Err(ProbError::EmptyAxisSet);
        }
        let joint: Vec<usize> = target.iter().chain(given).copied().collect();
        let h_joint = self.entropy(&joint)?;
        let h_given = if given.is_empty() {
            0.0
        } else {
            self.entropy(given)?
        };
        Ok(clamp_info(h_joint - h_given))
    }

    /// `I(a ∧ b) = H(a) + H(b) − H(a,b)`, clamped at zero.
    pub fn mutual_information(&self, a: &[usize], b: &[usize]) -> Result<f64, ProbError> {
        check_axes(&[a, b], self.axes.len())?;
        if a.is_empty() || b.is_empty() {
            return Err(ProbError::EmptyAxisSet);
        }
        let joint: Vec<usize> = a.iter().chain(b).copied().collect();
        Ok(clamp_info(
            self.entropy(a)? + self.entropy(b)? - self.entropy(&joint)?,
        ))
    }

    /// `I(a ∧ b | c) = H(a|c) − H(a|b,c)`, clamped at zero.
    ///
    /// An empty `c` degrades to plain mutual information.
    pub fn conditional_mutual_information(
        &self,
        a: &[usize],
        b: &[usize],
        c: &[usize],
    ) -> Result<f64, ProbError> {
        check_axes(&[a, b, c], self.axes.len())?;
        if a.is_empty() || b.is_empty() {
            return Err(ProbError::EmptyAxisSet);
        }
        if c.is_empty() {
            return self.mutual_information(a, b);
        }
        let ac: Vec<usize> = a.iter().chain(c).copied().collect();
        let bc: Vec<usize> = b.iter().chain(c).copied().collect();
        let abc: Vec<usize> = a.iter().chain(b).chain(c).copied().collect();
        Ok(clamp_info(
            self.entropy(&ac)? + self.entropy(&bc)? - self.entropy(&abc)? - self.entropy(c)?,
        ))
    }

    /// Sum out every axis not in `keep`; output axes follow the order of `keep`.
    pub fn marginalize(&self, keep: &[usize]) -> Result<JointPmf, ProbError> {
        check_axes(&[keep], self.axes.len())?;
        if keep.is_empty() {
            return Err(ProbError::EmptyAxisSet);
        }
        let out_axes: Vec<Alphabet> = keep.iter().map(|&a| self.axes[a].clone()).collect();
        let out_strides = strides(&out_axes);
        let n_out: usize = out_axes.iter().map(Alphabet::size).product();
        let mut out = vec![0.0; n_out];
        let s = strides(&self.axes);
        for (idx, &v) in self.mass.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let mut o = 0usize;
            for (k, &a) in keep.iter().enumerate() {
                o += ((idx / s[a]) % self.axes[a].size()) * out_strides[k];
            }
            out[o] += v;
        }
        Ok(JointPmf {
            axes: out_axes,
            mass: out,
        })
    }

    /// Condition on the axes in `given`; remaining axes keep their original order.
    ///
    /// Conditioning cells with zero mass are flagged in the kernel's support
    /// mask rather than given fabricated rows.
    pub fn condition(&self, given: &[usize]) -> Result<Kernel, ProbError> {
        check_axes(&[given], self.axes.len())?;
        if given.is_empty() || given.len() == self.axes.len() {
            return Err(ProbError::EmptyAxisSet);
        }
        let kept: Vec<usize> = (0..self.axes.len()).filter(|a| !given.contains(a)).collect();
        let from_axes: Vec<Alphabet> = given.iter().map(|&a| self.axes[a].clone()).collect();
        let to_axes: Vec<Alphabet> = kept.iter().map(|&a| self.axes[a].clone()).collect();
        let fc: usize = from_axes.iter().map(Alphabet::size).product();
        let tc: usize = to_axes.iter().map(Alphabet::size).product();
        let f_str = strides(&from_axes);
        let t_str = strides(&to_axes);
        let s = strides(&self.axes);

        let mut rows = vec![0.0; fc * tc];
        let mut row_mass = vec![0.0; fc];
        for (idx, &v) in self.mass.iter().enumerate() {
            let mut fi = 0usize;
            for (k, &a) in given.iter().enumerate() {
                fi += ((idx / s[a]) % self.axes[a].size()) * f_str[k];
            }
            let mut ti = 0usize;
            for (k, &a) in kept.iter().enumerate() {
                ti += ((idx / s[a]) % self.axes[a].size()) * t_str[k];
            }
            rows[fi * tc + ti] += v;
            row_mass[fi] += v;
        }
        let mut support = vec![false; fc];
        for (fi, &m) in row_mass.iter().enumerate() {
            if m > 0.0 {
                support[fi] = true;
                for t in 0..tc {
                    rows[fi * tc + t] /= m;
                }
            } else {
                for t in 0..tc {
                    rows[fi * tc + t] = 0.0;
                }
            }
        }
        Kernel::new_masked(from_axes, to_axes, rows, support)
    }

    /// `Σ |p − q|` over cells; both operands must share alphabets.
    pub fn l1_distance(&self, other: &JointPmf) -> Result<f64, ProbError> {
        if self.axes != other.axes {
            return Err(ProbError::AxisMismatch);
        }
        let mut acc = Accum::default();
        for (a, b) in self.mass.iter().zip(&other.mass) {
            acc.add((a - b).abs());
        }
        Ok(acc.value())
    }

    /// Project onto the set of Markov chains `x − z − y`:
    /// `p'(x,z,y) = p(z)·p(x|z)·p(y|z)` with all components taken from `self`.
    ///
    /// The axis blocks must partition the axes. An empty `z` block yields the
    /// unconditional product of the `x` and `y` marginals.
    pub fn markov_projection(
        &self,
        x_axes: &[usize],
        z_axes: &[usize],
        y_axes: &[usize],
    ) -> Result<JointPmf, ProbError> {
        check_axes(&[x_axes, z_axes, y_axes], self.axes.len())?;
        if x_axes.is_empty() || y_axes.is_empty() {
            return Err(ProbError::EmptyAxisSet);
        }
        if x_axes.len() + z_axes.len() + y_axes.len() != self.axes.len() {
            return Err(ProbError::BadAxisPartition);
        }
        let s = strides(&self.axes);
        let block_index = |idx: usize, block: &[usize]| -> usize {
            let mut out = 0usize;
            for &a in block {
                out = out * self.axes[a].size() + (idx / s[a]) % self.axes[a].size();
            }
            out
        };
        let size_of = |block: &[usize]| -> usize {
            block.iter().map(|&a| self.axes[a].size()).product::<usize>().max(1)
        };
        let (nx, nz, ny) = (size_of(x_axes), size_of(z_axes), size_of(y_axes));
        let mut m_xz = vec![0.0; nx * nz];
        let mut m_zy = vec![0.0; nz * ny];
        let mut m_z = vec![0.0; nz];
        for (idx, &v) in self.mass.iter().enumerate() {
            let (kx, kz, ky) = (
                block_index(idx, x_axes),
                block_index(idx, z_axes),
                block_index(idx, y_axes),
            );
            m_xz[kx * nz + kz] += v;
            m_zy[kz * ny + ky] += v;
            m_z[kz] += v;
        }
        let mut out = vec![0.0; self.mass.len()];
        for idx in 0..self.mass.len() {
            let (kx, kz, ky) = (
                block_index(idx, x_axes),
                block_index(idx, z_axes),
                block_index(idx, y_axes),
            );
            if m_z[kz] > 0.0 {
                out[idx] = m_xz[kx * nz + kz] * m_zy[kz * ny + ky] / m_z[kz];
            }
        }
        Ok(JointPmf {
            axes: self.axes.clone(),
            mass: out,
        })
    }

    /// `I(a ∧ b | given)`: zero exactly when the chain `a − given − b` holds.
    pub fn markov_gap(
        &self,
        a: &[usize],
        b: &[usize],
        given: &[usize],
    ) -> Result<f64, ProbError> {
        self.conditional_mutual_information(a, b, given)
    }

    /// Reorder axes; `order[i]` names the source axis for output axis `i`.
    pub fn permute_axes(&self, order: &[usize]) -> Result<JointPmf, ProbError> {
        check_axes(&[order], self.axes.len())?;
        if order.len() != self.axes.len() {
            return Err(ProbError::BadAxisPartition);
        }
        let out_axes: Vec<Alphabet> = order.iter().map(|&a| self.axes[a].clone()).collect();
        let out_strides = strides(&out_axes);
        let s = strides(&self.axes);
        let mut out = vec![0.0; self.mass.len()];
        for (idx, &v) in self.mass.iter().enumerate() {
            let mut o = 0usize;
            for (k, &a) in order.iter().enumerate() {
                o += ((idx / s[a]) % self.axes[a].size()) * out_strides[k];
            }
            out[o] = v;
        }
        Ok(JointPmf {
            axes: out_axes,
            mass: out,
        })
    }
}

/// A conditional distribution: one row (a pmf over `to_axes`) per
/// conditioning cell of `from_axes`. Rows outside `support` were
/// unobservable (zero-mass conditioning cells) and are zero-filled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    from_axes: Vec<Alphabet>,
    to_axes: Vec<Alphabet>,
    rows: Vec<f64>,
    support: Vec<bool>,
}

impl Kernel {
    pub fn new(
        from_axes: Vec<Alphabet>,
        to_axes: Vec<Alphabet>,
        rows: Vec<f64>,
    ) -> Result<Self, ProbError> {
        let fc: usize = from_axes.iter().map(Alphabet::size).product();
        Self::new_masked(from_axes, to_axes, rows, vec![true; fc])
    }

    pub fn new_masked(
        from_axes: Vec<Alphabet>,
        to_axes: Vec<Alphabet>,
        rows: Vec<f64>,
        support: Vec<bool>,
    ) -> Result<Self, ProbError> {
        if from_axes.is_empty() || to_axes.is_empty() {
            return Err(ProbError::EmptyAxisSet);
        }
        let fc: usize = from_axes.iter().map(Alphabet::size).product();
        let tc: usize = to_axes.iter().map(Alphabet::size).product();
        if rows.len() != fc * tc || support.len() != fc {
            return Err(ProbError::WrongLength {
                got: rows.len(),
                want: fc * tc,
            });
        }
        for f in 0..fc {
            let row = &rows[f * tc..(f + 1) * tc];
            if let Some((i, &v)) = row.iter().enumerate().find(|(_, v)| **v < 0.0) {
                return Err(ProbError::NegativeMass {
                    index: f * tc + i,
                    value: v,
                });
            }
            let sum: f64 = row.iter().sum();
            if support[f] {
                if (sum - 1.0).abs() > NORMALIZATION_TOL {
                    return Err(ProbError::BadKernelRow { row: f, sum });
                }
            } else if sum != 0.0 {
                return Err(ProbError::BadKernelRow { row: f, sum });
            }
        }
        Ok(Self {
            from_axes,
            to_axes,
            rows,
            support,
        })
    }

    pub fn from_axes(&self) -> &[Alphabet] {
        &self.from_axes
    }

    pub fn to_axes(&self) -> &[Alphabet] {
        &self.to_axes
    }

    pub fn from_cells(&self) -> usize {
        self.from_axes.iter().map(Alphabet::size).product()
    }

    pub fn to_cells(&self) -> usize {
        self.to_axes.iter().map(Alphabet::size).product()
    }

    pub fn row(&self, cell: usize) -> &[f64] {
        let tc = self.to_cells();
        &self.rows[cell * tc..(cell + 1) * tc]
    }

    pub fn support(&self) -> &[bool] {
        &self.support
    }

    /// Recompose `marginal(from) ⊗ kernel` into a joint over `from ++ to`.
    pub fn compose(&self, marginal: &JointPmf) -> Result<JointPmf, ProbError> {
        if marginal.axes() != self.from_axes {
            return Err(ProbError::AxisMismatch);
        }
        let tc = self.to_cells();
        for (f, &m) in marginal.mass().iter().enumerate() {
            if m > 0.0 && !self.support[f] {
                return Err(ProbError::MissingKernelRow);
            }
        }
        let mut mass = vec![0.0; marginal.num_cells() * tc];
        for (f, &m) in marginal.mass().iter().enumerate() {
            for t in 0..tc {
                mass[f * tc + t] = m * self.rows[f * tc + t];
            }
        }
        let axes: Vec<Alphabet> = self
            .from_axes
            .iter()
            .chain(&self.to_axes)
            .cloned()
            .collect();
        JointPmf::new(axes, mass)
    }
}

/// The numeric budgets shared across solvers, membership checks, and audits.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Tolerances {
    /// Mass functions must sum to one within this.
    pub normalization_tol: f64,
    /// Markov gaps, marginal residuals, distortion excess allowed in members.
    pub feasibility_tol: f64,
    /// Solver convergence threshold on objective change.
    pub objective_tol: f64,
    /// Slack budget (bits) granted to the lemma audits.
    pub audit_slack: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            normalization_tol: 1e-12,
            feasibility_tol: 1e-6,
            objective_tol: 1e-9,
            audit_slack: 0.0,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<(), ProbError> {
        let all = [
            self.normalization_tol,
            self.feasibility_tol,
            self.objective_tol,
            self.audit_slack,
        ];
        if all.iter().any(|t| *t < 0.0 || !t.is_finite()) {
            return Err(ProbError::NegativeTolerance);
        }
        Ok(())
    }
}
