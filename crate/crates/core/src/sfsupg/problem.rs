use std::fmt;
use std::sync::Arc;

use crate::error::{Result, VemError};
use crate::Point;

pub type ScalarFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(Point) -> Point + Send + Sync>;
pub type DirichletFn = Arc<dyn Fn(&str, Point) -> f64 + Send + Sync>;
pub type RelabelFn = Arc<dyn Fn(Point, &str) -> String + Send + Sync>;

#[derive(Clone)]
pub struct ExactSolution {
    pub u: ScalarFn,
    pub grad: VectorFn,
}

/// Data of `-kappa lap u + beta . grad u = f` with Dirichlet conditions.
///
/// Boundary values are looked up by edge label. A vertex shared by edges
/// with different labels takes the value of the label that comes first in
/// `label_priority` (labels missing from the list rank last, in
/// lexicographic order).
#[derive(Clone)]
pub struct ProblemData {
    pub name: String,
    pub kappa: f64,
    pub beta: VectorFn,
    pub source: ScalarFn,
    pub dirichlet: DirichletFn,
    pub label_priority: Vec<String>,
    /// Optional reclassification of mesh boundary labels, applied to each
    /// boundary edge as `relabel(midpoint, current_label)`.
    pub relabel: Option<RelabelFn>,
    pub exact: Option<ExactSolution>,
}

impl fmt::Debug for ProblemData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemData")
            .field("name", &self.name)
            .field("kappa", &self.kappa)
            .field("label_priority", &self.label_priority)
            .field("has_exact", &self.exact.is_some())
            .finish()
    }
}

impl ProblemData {
    /// Problem with boundary data taken from a single function of position.
    pub fn new(name: impl Into<String>, kappa: f64, beta: VectorFn, source: ScalarFn, g: ScalarFn) -> Result<Self> {
        if !(kappa > 0.0) {
            return Err(VemError::InvalidArgument(format!("diffusivity must be positive, got {kappa}")));
        }
        Ok(Self {
            name: name.into(),
            kappa,
            beta,
            source,
            dirichlet: Arc::new(move |_, p| g(p)),
            label_priority: Vec::new(),
            relabel: None,
            exact: None,
        })
    }

    pub fn with_exact(mut self, u: ScalarFn, grad: VectorFn) -> Self {
        self.exact = Some(ExactSolution { u, grad });
        self
    }

    /// Rank of a label in the tie-break order (lower wins).
    pub fn label_rank(&self, label: &str) -> (usize, String) {
        match self.label_priority.iter().position(|l| l == label) {
            Some(i) => (i, String::new()),
            None => (self.label_priority.len(), label.to_string()),
        }
    }
}
