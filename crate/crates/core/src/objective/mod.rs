//! Differentiable objectives: quadratics, a 2-D multi-well surface and a
//! small MLP classifier.
//!
//! Every objective exposes a value, an exact gradient and a Hessian-vector
//! product. For quadratics the product is the exact matrix product; for the
//! other families it is a central difference of gradients, so only
//! first-order derivatives are ever implemented.

mod dataset;
mod landscape;
mod mlp;
mod quadratic;

pub use dataset::{generate_blobs, BlobsConfig, Dataset};
pub use landscape::{default_landscape, Landscape2D, LocalMinimum, Well, DEFAULT_SLOPE};
pub use mlp::{Activation, MlpClassifier};
pub use quadratic::Quadratic;

use crate::error::{check_dim, GsamError, Result};
use crate::vector::ParamVector;

/// Sample indices for one evaluation. An empty list means the full dataset;
/// analytic objectives ignore the batch.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Batch {
    indices: Vec<usize>,
}

impl Batch {
    pub fn full() -> Self {
        Batch { indices: Vec::new() }
    }

    pub fn new(indices: Vec<usize>) -> Self {
        Batch { indices }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn is_full(&self) -> bool {
        self.indices.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ObjectiveSpec {
    Quadratic(Quadratic),
    Landscape2D(Landscape2D),
    Mlp(MlpClassifier),
}

impl ObjectiveSpec {
    pub fn dim(&self) -> usize {
        match self {
            ObjectiveSpec::Quadratic(q) => q.dim(),
            ObjectiveSpec::Landscape2D(_) => 2,
            ObjectiveSpec::Mlp(m) => m.num_params(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ObjectiveSpec::Quadratic(_) => "quadratic",
            ObjectiveSpec::Landscape2D(_) => "landscape2d",
            ObjectiveSpec::Mlp(_) => "mlp",
        }
    }

    fn check(&self, w: &ParamVector) -> Result<()> {
        check_dim("objective parameters", self.dim(), w.dim())
    }

    pub fn value(&self, w: &ParamVector, batch: &Batch) -> Result<f64> {
        self.check(w)?;
        let f = match self {
            ObjectiveSpec::Quadratic(q) => q.value(w.as_slice()),
            ObjectiveSpec::Landscape2D(l) => l.value(w.as_slice()),
            ObjectiveSpec::Mlp(m) => m.loss_and_grad(w.as_slice(), batch, false)?.0,
        };
        finite_loss(f)
    }

    pub fn gradient(&self, w: &ParamVector, batch: &Batch) -> Result<ParamVector> {
        Ok(self.value_and_gradient(w, batch)?.1)
    }

    /// Value and gradient from a single pass.
    pub fn value_and_gradient(&self, w: &ParamVector, batch: &Batch) -> Result<(f64, ParamVector)> {
        self.check(w)?;
        let (f, g) = match self {
            ObjectiveSpec::Quadratic(q) => {
                let hw = q.apply(w.as_slice());
                let f = 0.5 * crate::vector::dot(w.as_slice(), &hw);
                (f, hw)
            }
            ObjectiveSpec::Landscape2D(l) => (l.value(w.as_slice()), l.gradient(w.as_slice()).to_vec()),
            ObjectiveSpec::Mlp(m) => {
                let (f, g) = m.loss_and_grad(w.as_slice(), batch, true)?;
                (f, g.expect("gradient requested"))
            }
        };
        let f = finite_loss(f)?;
        let g = ParamVector::from_raw(g);
        if !g.is_finite() {
            return Err(GsamError::numeric("gradient"));
        }
        Ok((f, g))
    }

    /// `H(w) v`. Exact for quadratics; otherwise the central difference
    /// `(g(w + h v/|v|) - g(w - h v/|v|)) / (2h) * |v|` with
    /// `h = fd_step.unwrap_or(1e-5 * max(1, |w|))`.
    pub fn hessian_vector_product(
        &self,
        w: &ParamVector,
        v: &ParamVector,
        batch: &Batch,
        fd_step: Option<f64>,
    ) -> Result<ParamVector> {
        self.check(w)?;
        check_dim("Hessian-vector direction", self.dim(), v.dim())?;
        let v_norm = v.norm();
        if v_norm == 0.0 {
            return Err(GsamError::Argument("Hessian-vector product needs a non-zero direction".into()));
        }
        if let ObjectiveSpec::Quadratic(q) = self {
            return Ok(ParamVector::from_raw(q.apply(v.as_slice())));
        }
        let h = fd_step.unwrap_or_else(|| 1e-5 * w.norm().max(1.0));
        if !(h > 0.0 && h.is_finite()) {
            return Err(GsamError::Argument(format!("finite-difference step must be positive, got {h}")));
        }
        let unit = v.scaled(1.0 / v_norm);
        let g_plus = self.gradient(&w.add_scaled(h, &unit), batch)?;
        let g_minus = self.gradient(&w.add_scaled(-h, &unit), batch)?;
        let hv = g_plus.sub(&g_minus).scaled(v_norm / (2.0 * h));
        if !hv.is_finite() {
            return Err(GsamError::numeric("Hessian-vector product"));
        }
        Ok(hv)
    }
}

fn finite_loss(f: f64) -> Result<f64> {
    if f.is_finite() {
        Ok(f)
    } else {
        Err(GsamError::numeric("loss"))
    }
}

pub fn value(spec: &ObjectiveSpec, w: &ParamVector, batch: &Batch) -> Result<f64> {
    spec.value(w, batch)
}

pub fn gradient(spec: &ObjectiveSpec, w: &ParamVector, batch: &Batch) -> Result<ParamVector> {
    spec.gradient(w, batch)
}

pub fn hessian_vector_product(
    spec: &ObjectiveSpec,
    w: &ParamVector,
    v: &ParamVector,
    batch: &Batch,
    fd_step: Option<f64>,
) -> Result<ParamVector> {
    spec.hessian_vector_product(w, v, batch, fd_step)
}
