//! Problem instances: source distribution, distortion measures, targets,
//! and the JSON document format the CLI ingests.
//!
//! Validation is strict-fail: a document that does not satisfy the
//! invariants is rejected with the full list of violations, never silently
//! renormalized.

use crate::prob::{Alphabet, JointPmf, ProbError, NORMALIZATION_TOL};
use crate::solver::SolverOptions;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("malformed instance document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid instance: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error("could not read instance file: {0}")]
    Io(#[from] std::io::Error),
}

/// A per-letter distortion measure between a source and a reconstruction
/// alphabet. Entries are finite and nonnegative, so the measure is bounded.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionMeasure {
    source: Alphabet,
    recon: Alphabet,
    matrix: Vec<f64>, // |source| × |recon|, row-major
}

impl DistortionMeasure {
    pub fn new(
        source: Alphabet,
        recon: Alphabet,
        rows: &[Vec<f64>],
    ) -> Result<Self, InstanceError> {
        let mut violations = Vec::new();
        if rows.len() != source.size() {
            violations.push(format!(
                "distortion matrix has {} rows, source alphabet has {} symbols",
                rows.len(),
                source.size()
            ));
        }
        let mut matrix = Vec::with_capacity(source.size() * recon.size());
        for (i, row) in rows.iter().enumerate() {
            if row.len() != recon.size() {
                violations.push(format!(
                    "distortion row {i} has {} entries, reconstruction alphabet has {}",
                    row.len(),
                    recon.size()
                ));
                continue;
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    violations.push(format!("distortion entry ({i},{j}) is {v}"));
                }
                matrix.push(v);
            }
        }
        if violations.is_empty() {
            Ok(Self {
                source,
                recon,
                matrix,
            })
        } else {
            Err(InstanceError::Invalid(violations))
        }
    }

    pub fn hamming(alphabet: Alphabet) -> Self {
        let n = alphabet.size();
        let mut matrix = vec![1.0; n * n];
        for i in 0..n {
            matrix[i * n + i] = 0.0;
        }
        Self {
            source: alphabet.clone(),
            recon: alphabet,
            matrix,
        }
    }

    pub fn get(&self, source_symbol: usize, recon_symbol: usize) -> f64 {
        self.matrix[source_symbol * self.recon.size() + recon_symbol]
    }

    pub fn source_alphabet(&self) -> &Alphabet {
        &self.source
    }

    pub fn recon_alphabet(&self) -> &Alphabet {
        &self.recon
    }

    pub fn d_max(&self) -> f64 {
        self.matrix.iter().copied().fold(0.0, f64::max)
    }

    /// Smallest distortion reachable from `source_symbol`.
    pub fn row_min(&self, source_symbol: usize) -> f64 {
        (0..self.recon.size())
            .map(|r| self.get(source_symbol, r))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.source.size())
            .map(|i| self.matrix[i * self.recon.size()..(i + 1) * self.recon.size()].to_vec())
            .collect()
    }
}

/// The full problem statement: a joint source over (X, Y), two distortion
/// measures, and the distortion targets (D1, D2).
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub x_alphabet: Alphabet,
    pub y_alphabet: Alphabet,
    pub xhat_alphabet: Alphabet,
    pub yhat_alphabet: Alphabet,
    /// Joint source over axes (X, Y).
    pub source: JointPmf,
    pub d1: DistortionMeasure,
    pub d2: DistortionMeasure,
    pub targets: (f64, f64),
    pub solver: SolverOptions,
}

impl ProblemInstance {
    /// Per-source minimum expected distortion with perfect information:
    /// any target below this floor leaves every candidate set empty.
    pub fn distortion_floor(&self) -> (f64, f64) {
        let px = self.source.marginalize(&[0]).expect("axis 0 exists");
        let py = self.source.marginalize(&[1]).expect("axis 1 exists");
        let f1: f64 = px
            .mass()
            .iter()
            .enumerate()
            .map(|(x, &p)| p * self.d1.row_min(x))
            .sum();
        let f2: f64 = py
            .mass()
            .iter()
            .enumerate()
            .map(|(y, &p)| p * self.d2.row_min(y))
            .sum();
        (f1, f2)
    }

    /// Best expected distortion of a constant reconstruction: at or above
    /// this ceiling, rate zero suffices for the corresponding source.
    pub fn rate_zero_ceiling(&self) -> (f64, f64) {
        let px = self.source.marginalize(&[0]).expect("axis 0 exists");
        let py = self.source.marginalize(&[1]).expect("axis 1 exists");
        let best = |p: &JointPmf, d: &DistortionMeasure| -> f64 {
            (0..d.recon_alphabet().size())
                .map(|r| {
                    p.mass()
                        .iter()
                        .enumerate()
                        .map(|(s, &m)| m * d.get(s, r))
                        .sum::<f64>()
                })
                .fold(f64::INFINITY, f64::min)
        };
        (best(&px, &self.d1), best(&py, &self.d2))
    }

    /// Best constant reconstruction indices (ties toward the lowest index).
    pub fn best_constants(&self) -> (usize, usize) {
        let px = self.source.marginalize(&[0]).expect("axis 0 exists");
        let py = self.source.marginalize(&[1]).expect("axis 1 exists");
        let pick = |p: &JointPmf, d: &DistortionMeasure| -> usize {
            let mut best = (f64::INFINITY, 0usize);
            for r in 0..d.recon_alphabet().size() {
                let e: f64 = p
                    .mass()
                    .iter()
                    .enumerate()
                    .map(|(s, &m)| m * d.get(s, r))
                    .sum();
                if e < best.0 {
                    best = (e, r);
                }
            }
            best.1
        };
        (pick(&px, &self.d1), pick(&py, &self.d2))
    }

    pub fn to_document(&self) -> InstanceDocument {
        InstanceDocument {
            x_labels: self.x_alphabet.labels().to_vec(),
            y_labels: self.y_alphabet.labels().to_vec(),
            xhat_labels: Some(self.xhat_alphabet.labels().to_vec()),
            yhat_labels: Some(self.yhat_alphabet.labels().to_vec()),
            p_xy: (0..self.x_alphabet.size())
                .map(|x| {
                    (0..self.y_alphabet.size())
                        .map(|y| self.source.get(&[x, y]))
                        .collect()
                })
                .collect(),
            d1: self.d1.rows(),
            d2: self.d2.rows(),
            target_d1: self.targets.0,
            target_d2: self.targets.1,
            solver: Some(self.solver.clone()),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("document serializes")
    }
}

/// The on-disk JSON schema. `p_xy` is row-major |X|×|Y|; reconstruction
/// alphabets default to the source alphabets when omitted.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceDocument {
    pub x_labels: Vec<String>,
    pub y_labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xhat_labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub yhat_labels: Option<Vec<String>>,
    pub p_xy: Vec<Vec<f64>>,
    pub d1: Vec<Vec<f64>>,
    pub d2: Vec<Vec<f64>>,
    #[serde(rename = "D1")]
    pub target_d1: f64,
    #[serde(rename = "D2")]
    pub target_d2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverOptions>,
}

/// Parse and validate an instance document.
pub fn load_instance(text: &str) -> Result<ProblemInstance, InstanceError> {
    let doc: InstanceDocument = serde_json::from_str(text)?;
    instance_from_document(doc)
}

pub fn load_instance_path(path: &std::path::Path) -> Result<ProblemInstance, InstanceError> {
    let text = std::fs::read_to_string(path)?;
    load_instance(&text)
}

pub fn instance_from_document(doc: InstanceDocument) -> Result<ProblemInstance, InstanceError> {
    let mut violations = Vec::new();

    let alphabet = |labels: &[String], name: &str, violations: &mut Vec<String>| {
        match Alphabet::new(labels.to_vec()) {
            Ok(a) => Some(a),
            Err(e) => {
                violations.push(format!("{name}: {e}"));
                None
            }
        }
    };
    let x = alphabet(&doc.x_labels, "x_labels", &mut violations);
    let y = alphabet(&doc.y_labels, "y_labels", &mut violations);
    let xhat = match &doc.xhat_labels {
        Some(l) => alphabet(l, "xhat_labels", &mut violations),
        None => x.clone(),
    };
    let yhat = match &doc.yhat_labels {
        Some(l) => alphabet(l, "yhat_labels", &mut violations),
        None => y.clone(),
    };
    let (x, y, xhat, yhat) = match (x, y, xhat, yhat) {
        (Some(x), Some(y), Some(xh), Some(yh)) => (x, y, xh, yh),
        _ => return Err(InstanceError::Invalid(violations)),
    };

    // source shape + normalization
    let mut mass = Vec::with_capacity(x.size() * y.size());
    if doc.p_xy.len() != x.size() {
        violations.push(format!(
            "p_xy has {} rows, expected {}",
            doc.p_xy.len(),
            x.size()
        ));
    }
    for (i, row) in doc.p_xy.iter().enumerate() {
        if row.len() != y.size() {
            violations.push(format!(
                "p_xy row {i} has {} entries, expected {}",
                row.len(),
                y.size()
            ));
        }
        mass.extend_from_slice(row);
    }
    let source = if violations.is_empty() {
        match JointPmf::new(vec![x.clone(), y.clone()], mass) {
            Ok(p) => Some(p),
            Err(ProbError::NotNormalized { sum, .. }) => {
                violations.push(format!(
                    "source not normalized: p_xy sums to {sum} (tolerance {NORMALIZATION_TOL})"
                ));
                None
            }
            Err(e) => {
                violations.push(format!("p_xy: {e}"));
                None
            }
        }
    } else {
        None
    };

    let d1 = DistortionMeasure::new(x.clone(), xhat.clone(), &doc.d1)
        .map_err(|e| match e {
            InstanceError::Invalid(v) => v,
            other => vec![other.to_string()],
        })
        .map_err(|v| violations.extend(v.into_iter().map(|m| format!("d1: {m}"))))
        .ok();
    let d2 = DistortionMeasure::new(y.clone(), yhat.clone(), &doc.d2)
        .map_err(|e| match e {
            InstanceError::Invalid(v) => v,
            other => vec![other.to_string()],
        })
        .map_err(|v| violations.extend(v.into_iter().map(|m| format!("d2: {m}"))))
        .ok();

    for (name, t) in [("D1", doc.target_d1), ("D2", doc.target_d2)] {
        if !t.is_finite() || t < 0.0 {
            violations.push(format!("{name} must be a finite nonnegative number, got {t}"));
        }
    }

    match (source, d1, d2, violations.is_empty()) {
        (Some(source), Some(d1), Some(d2), true) => Ok(ProblemInstance {
            x_alphabet: x,
            y_alphabet: y,
            xhat_alphabet: xhat,
            yhat_alphabet: yhat,
            source,
            d1,
            d2,
            targets: (doc.target_d1, doc.target_d2),
            solver: doc.solver.unwrap_or_default(),
        }),
        _ => Err(InstanceError::Invalid(violations)),
    }
}

/// Doubly symmetric binary source with the given crossover, Hamming
/// distortions, matched alphabets. Shared by tests and docs.
pub fn dsbs_instance(crossover: f64, d1: f64, d2: f64) -> ProblemInstance {
    let x = Alphabet::new(vec!["0".into(), "1".into()]).unwrap();
    let y = x.clone();
    let c = crossover;
    let source = JointPmf::new(
        vec![x.clone(), y.clone()],
        vec![(1.0 - c) / 2.0, c / 2.0, c / 2.0, (1.0 - c) / 2.0],
    )
    .unwrap();
    ProblemInstance {
        x_alphabet: x.clone(),
        y_alphabet: y.clone(),
        xhat_alphabet: x.clone(),
        yhat_alphabet: y.clone(),
        source,
        d1: DistortionMeasure::hamming(x),
        d2: DistortionMeasure::hamming(y),
        targets: (d1, d2),
        solver: SolverOptions::default(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DSBS_DOC: &str = r#"{
        "x_labels": ["0", "1"],
        "y_labels": ["0", "1"],
        "p_xy": [[0.375, 0.125], [0.125, 0.375]],
        "d1": [[0.0, 1.0], [1.0, 0.0]],
        "d2": [[0.0, 1.0], [1.0, 0.0]],
        "D1": 0.0,
        "D2": 0.0
    }"#;

    #[test]
    fn dsbs_document_loads_with_expected_joint_entropy() {
        let inst = load_instance(DSBS_DOC).unwrap();
        let h = inst.source.entropy(&[0, 1]).unwrap();
        assert!((h - 1.811278).abs() < 1e-6);
        // reconstruction alphabets defaulted to the source ones
        assert_eq!(inst.xhat_alphabet, inst.x_alphabet);
    }

    #[test]
    fn unnormalized_source_is_rejected() {
        let doc = DSBS_DOC.replace("0.375, 0.125", "0.374, 0.125");
        let err = load_instance(&doc).unwrap_err();
        match err {
            InstanceError::Invalid(v) => {
                assert!(v.iter().any(|m| m.contains("source not normalized")), "{v:?}");
            }
            other => panic!("expected validation error, got {other}"),
        }
    }

    #[test]
    fn fig4_style_instance_is_valid() {
        // uniform X through a binary symmetric channel to Y
        let pc = 0.3;
        let doc = format!(
            r#"{{
                "x_labels": ["0", "1"], "y_labels": ["0", "1"],
                "p_xy": [[{}, {}], [{}, {}]],
                "d1": [[0, 1], [1, 0]], "d2": [[0, 1], [1, 0]],
                "D1": 0.1, "D2": 0.1
            }}"#,
            (1.0 - pc) / 2.0,
            pc / 2.0,
            pc / 2.0,
            (1.0 - pc) / 2.0
        );
        let inst = load_instance(&doc).unwrap();
        let px = inst.source.marginalize(&[0]).unwrap();
        assert!((px.mass()[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn malformed_json_reports_parse_error() {
        assert!(matches!(
            load_instance("{ not json"),
            Err(InstanceError::Parse(_))
        ));
    }

    #[test]
    fn negative_distortion_is_rejected() {
        let doc = DSBS_DOC.replace("[[0.0, 1.0], [1.0, 0.0]],", "[[0.0, -1.0], [1.0, 0.0]],");
        assert!(matches!(load_instance(&doc), Err(InstanceError::Invalid(_))));
    }

    #[test]
    fn distortion_floor_examples() {
        let inst = dsbs_instance(0.25, 0.0, 0.0);
        assert_eq!(inst.distortion_floor(), (0.0, 0.0));

        // d1 = [[0,3],[1,0]]: both row minima are zero
        let x = Alphabet::new(vec!["a".into(), "b".into()]).unwrap();
        let d = DistortionMeasure::new(x.clone(), x.clone(), &[vec![0.0, 3.0], vec![1.0, 0.0]])
            .unwrap();
        let mut inst2 = dsbs_instance(0.25, 0.0, 0.0);
        inst2.d1 = d;
        assert_eq!(inst2.distortion_floor().0, 0.0);

        // constant matrix c has floor c
        let c = DistortionMeasure::new(x.clone(), x, &[vec![0.7, 0.7], vec![0.7, 0.7]]).unwrap();
        let mut inst3 = dsbs_instance(0.25, 0.0, 0.0);
        inst3.d1 = c;
        assert!((inst3.distortion_floor().0 - 0.7).abs() < 1e-15);
    }

    #[test]
    fn rate_zero_ceiling_examples() {
        let inst = dsbs_instance(0.25, 0.0, 0.0);
        assert_eq!(inst.rate_zero_ceiling(), (0.5, 0.5));

        // point mass source: ceiling 0 under Hamming
        let x = Alphabet::new(vec!["0".into(), "1".into()]).unwrap();
        let mut inst2 = dsbs_instance(0.25, 0.0, 0.0);
        inst2.source =
            JointPmf::new(vec![x.clone(), x.clone()], vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(inst2.rate_zero_ceiling(), (0.0, 0.0));

        // skewed marginal [0.25, 0.75]: best constant is symbol 1
        let mut inst3 = dsbs_instance(0.25, 0.0, 0.0);
        inst3.source = JointPmf::new(
            vec![x.clone(), x],
            vec![0.125, 0.125, 0.375, 0.375],
        )
        .unwrap();
        assert!((inst3.rate_zero_ceiling().0 - 0.25).abs() < 1e-15);
        assert_eq!(inst3.best_constants().0, 1);
    }

    #[test]
    fn floor_never_exceeds_ceiling() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..200 {
            let nx = rng.gen_range(2..4usize);
            let ny = rng.gen_range(2..4usize);
            let x = Alphabet::indexed("x", nx).unwrap();
            let y = Alphabet::indexed("y", ny).unwrap();
            let mut mass: Vec<f64> = (0..nx * ny).map(|_| rng.gen::<f64>() + 1e-3).collect();
            let s: f64 = mass.iter().sum();
            mass.iter_mut().for_each(|m| *m /= s);
            let partial: f64 = mass[..nx * ny - 1].iter().sum();
            mass[nx * ny - 1] = 1.0 - partial;
            let source = JointPmf::new(vec![x.clone(), y.clone()], mass).unwrap();
            let d1rows: Vec<Vec<f64>> = (0..nx)
                .map(|_| (0..nx).map(|_| rng.gen::<f64>()).collect())
                .collect();
            let d2rows: Vec<Vec<f64>> = (0..ny)
                .map(|_| (0..ny).map(|_| rng.gen::<f64>()).collect())
                .collect();
            let inst = ProblemInstance {
                x_alphabet: x.clone(),
                y_alphabet: y.clone(),
                xhat_alphabet: x.clone(),
                yhat_alphabet: y.clone(),
                source,
                d1: DistortionMeasure::new(x.clone(), x.clone(), &d1rows).unwrap(),
                d2: DistortionMeasure::new(y.clone(), y.clone(), &d2rows).unwrap(),
                targets: (0.5, 0.5),
                solver: SolverOptions::default(),
            };
            let floor = inst.distortion_floor();
            let ceil = inst.rate_zero_ceiling();
            assert!(floor.0 <= ceil.0 + 1e-15);
            assert!(floor.1 <= ceil.1 + 1e-15);
        }
    }

    #[test]
    fn document_round_trip_preserves_numbers() {
        let inst = load_instance(DSBS_DOC).unwrap();
        let json = inst.to_json();
        let again = load_instance(&json).unwrap();
        assert_eq!(inst.source.mass(), again.source.mass());
        assert_eq!(inst.targets, again.targets);
        assert_eq!(inst.d1.rows(), again.d1.rows());
    }
}
