use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{AgeWindow, BasisLabel, CascadeSystem, SystemKind};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// JSON fixture form of a [`CascadeSystem`].
///
/// Matrices are dense nested row arrays over the basis order given by
/// `basis_labels`. Loading rebuilds the system from `kind` and the window
/// and rejects documents whose stored matrices disagree with it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemDocument {
    pub kind: SystemKind,
    pub window: [i64; 2],
    pub basis_labels: Vec<BasisLabel>,
    pub ages: Vec<i64>,
    pub koopman: Vec<Vec<f64>>,
    pub time: Vec<Vec<f64>>,
    /// Age projector per age, keyed by the age as a decimal string.
    pub projectors: BTreeMap<String, Vec<Vec<f64>>>,
}

fn rows<S: Scalar>(op: &crate::hilbert::HOperator<S>) -> Vec<Vec<f64>> {
    op.to_rows().into_iter().map(|r| r.into_iter().map(S::as_f64).collect()).collect()
}

impl<S: Scalar> CascadeSystem<S> {
    pub fn to_document(&self) -> SystemDocument {
        SystemDocument {
            kind: self.kind,
            window: [self.window.lo(), self.window.hi()],
            basis_labels: self.labels.clone(),
            ages: self.ages.clone(),
            koopman: rows(&self.koopman),
            time: rows(&self.time),
            projectors: self
                .window
                .ages()
                .map(|n| (n.to_string(), rows(self.projector(n).expect("age in window"))))
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("document serializes")
    }

    pub fn from_document(doc: &SystemDocument) -> Result<Self> {
        let [lo, hi] = doc.window;
        let system = match doc.kind {
            SystemKind::Shift => Self::shift(AgeWindow::new(lo, hi)?),
            SystemKind::Baker => {
                if lo != -hi {
                    return Err(Error::Window { lo, hi, reason: "baker window must be symmetric".into() });
                }
                Self::baker(hi)?
            }
        };
        if &system.to_document() != doc {
            return Err(Error::Invalid("document matrices do not match the rebuilt system".into()));
        }
        Ok(system)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SystemDocument =
            serde_json::from_str(text).map_err(|e| Error::Invalid(format!("system document: {e}")))?;
        Self::from_document(&doc)
    }
}
