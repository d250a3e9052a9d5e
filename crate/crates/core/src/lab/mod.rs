//! Small-blocklength combinatorics: exact typical-set enumeration,
//! distributed covers and codes, and empirical audits of the structural
//! results the rate-region bounds are built on.
//!
//! Everything here is exact — sets are enumerated, probabilities are summed
//! over the whole block space — so alphabet^blocklength products are gated
//! by [`LabCaps`]. Strict inequalities in the set definitions are kept
//! strict throughout.

mod codes;
mod search;
mod seqs;
mod typical;

pub use codes::{
    build_code, empirical_type, lemma3_size_audit, prop2_check, prop2_check_cover,
    verify_distortion_constraint, CellAudit, CodeKind, DistortionVerdict, DistributedCode,
    Lemma3Report, Prop2Outcome, Prop2Witness, ReconPair,
};
pub use search::{
    brute_force_achievable, code_from_summary, count_partitions, BruteForceOutcome, CodeSummary,
};
pub use seqs::{block_distortion, block_pair_prob, block_prob, type_counts, SeqSpace};
pub use typical::{
    conditional_typical_set, distortion_ball, extended_support, is_distributed_typical_set,
    is_jointly_typical, is_typical, joint_typical_pairs, reverse_markov_check, typical_set,
    typical_with_set, weak_inclusion, ReverseMarkovReport,
};

use crate::prob::{JointPmf, ProbError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("enumeration needs {need} states, cap is {cap}")]
    CapExceeded { need: u128, cap: u64 },
    #[error("symbol {symbol} at position {position} is outside the alphabet")]
    ForeignSymbol { position: usize, symbol: usize },
    #[error("blocklength must be at least 1")]
    BadBlocklength,
    #[error("epsilon must be positive")]
    BadEpsilon,
    #[error("pmf has the wrong number of axes for this check")]
    WrongShape,
    #[error("sequence length {got} does not match blocklength {want}")]
    WrongLength { got: usize, want: usize },
    #[error("conditioning event has zero probability")]
    ZeroProbabilityEvent,
    #[error("set is not a subset of the jointly typical set")]
    NotTypicalSubset,
    #[error("cells do not partition the sequence space")]
    NotAPartition,
    #[error("reconstruction table does not cover every index pair")]
    IncompleteReconstruction,
    #[error(transparent)]
    Prob(#[from] ProbError),
}

/// Resource budgets for exact enumeration and exhaustive code search.
#[derive(Debug, Clone, Copy)]
pub struct LabCaps {
    /// Largest admissible alphabet^n product for a single enumeration.
    pub enumeration_cap: u64,
    /// Largest admissible number of candidate partition pairs for
    /// exhaustive code search.
    pub partition_cap: u64,
}

impl Default for LabCaps {
    fn default() -> Self {
        Self {
            enumeration_cap: 10_000_000,
            partition_cap: 1_000_000,
        }
    }
}

/// Parameters of one strong-typicality enumeration over a single
/// (possibly compound) symbol axis.
#[derive(Debug, Clone)]
pub struct TypicalSetSpec {
    pub n: usize,
    pub epsilon: f64,
    pub pmf: JointPmf,
}

impl TypicalSetSpec {
    pub fn new(n: usize, epsilon: f64, pmf: JointPmf, caps: &LabCaps) -> Result<Self, LabError> {
        if n == 0 {
            return Err(LabError::BadBlocklength);
        }
        if !(epsilon > 0.0) {
            return Err(LabError::BadEpsilon);
        }
        let alphabet: usize = pmf.axes().iter().map(|a| a.size()).product();
        seqs::check_cap(alphabet, n, caps)?;
        Ok(Self { n, epsilon, pmf })
    }
}
