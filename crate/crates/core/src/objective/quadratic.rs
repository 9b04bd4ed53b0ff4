use serde::{Deserialize, Serialize};

use crate::error::{GsamError, Result};
use crate::rng::{normal_vec, substream, Purpose};
use crate::vector::dot;

/// `f(w) = 1/2 w^T H w` with a symmetric `H`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QuadraticRepr", into = "QuadraticRepr")]
pub struct Quadratic {
    hessian: Hessian,
}

#[derive(Clone, Debug, PartialEq)]
enum Hessian {
    Diagonal(Vec<f64>),
    /// Row-major `dim x dim`.
    Dense { dim: usize, data: Vec<f64> },
}

#[derive(Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
enum QuadraticRepr {
    Diagonal { diagonal: Vec<f64> },
    Dense { hessian: Vec<Vec<f64>> },
}

impl TryFrom<QuadraticRepr> for Quadratic {
    type Error = GsamError;

    fn try_from(r: QuadraticRepr) -> Result<Self> {
        match r {
            QuadraticRepr::Diagonal { diagonal } => Quadratic::diagonal(diagonal),
            QuadraticRepr::Dense { hessian } => Quadratic::dense(hessian),
        }
    }
}

impl From<Quadratic> for QuadraticRepr {
    fn from(q: Quadratic) -> Self {
        match q.hessian {
            Hessian::Diagonal(diagonal) => QuadraticRepr::Diagonal { diagonal },
            Hessian::Dense { dim, data } => QuadraticRepr::Dense {
                hessian: data.chunks(dim).map(<[f64]>::to_vec).collect(),
            },
        }
    }
}

impl Quadratic {
    pub fn diagonal(diag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(GsamError::Config("quadratic needs at least one dimension".into()));
        }
        if diag.iter().any(|x| !x.is_finite()) {
            return Err(GsamError::Config("quadratic Hessian entries must be finite".into()));
        }
        Ok(Quadratic {
            hessian: Hessian::Diagonal(diag),
        })
    }

    /// Dense Hessian given by rows. Must be square and symmetric up to
    /// `1e-12 * max|H_ij|`.
    pub fn dense(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(GsamError::Config("quadratic needs at least one dimension".into()));
        }
        if rows.iter().any(|r| r.len() != dim) {
            return Err(GsamError::Config("quadratic Hessian must be square".into()));
        }
        let data: Vec<f64> = rows.into_iter().flatten().collect();
        if data.iter().any(|x| !x.is_finite()) {
            return Err(GsamError::Config("quadratic Hessian entries must be finite".into()));
        }
        let scale = data.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        for i in 0..dim {
            for j in 0..i {
                if (data[i * dim + j] - data[j * dim + i]).abs() > 1e-12 * scale {
                    return Err(GsamError::Config(format!("quadratic Hessian is not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Quadratic {
            hessian: Hessian::Dense { dim, data },
        })
    }

    /// `Q diag(eigenvalues) Q^T` with `Q` a random orthogonal matrix built from
    /// Householder reflections seeded by `seed`.
    pub fn from_spectrum(eigenvalues: &[f64], seed: u64) -> Result<Self> {
        let n = eigenvalues.len();
        if n == 0 {
            return Err(GsamError::Config("spectrum must be non-empty".into()));
        }
        let q = random_orthogonal(n, seed);
        let mut h = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for (k, lam) in eigenvalues.iter().enumerate() {
                    s += q[i * n + k] * lam * q[j * n + k];
                }
                h[i * n + j] = s;
            }
        }
        for i in 0..n {
            for j in 0..i {
                let m = 0.5 * (h[i * n + j] + h[j * n + i]);
                h[i * n + j] = m;
                h[j * n + i] = m;
            }
        }
        Quadratic::dense(h.chunks(n).map(<[f64]>::to_vec).collect())
    }

    pub fn dim(&self) -> usize {
        match &self.hessian {
            Hessian::Diagonal(d) => d.len(),
            Hessian::Dense { dim, .. } => *dim,
        }
    }

    /// Exact `H v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        match &self.hessian {
            Hessian::Diagonal(d) => d.iter().zip(v).map(|(h, x)| h * x).collect(),
            Hessian::Dense { dim, data } => data.chunks(*dim).map(|row| dot(row, v)).collect(),
        }
    }

    pub fn value(&self, w: &[f64]) -> f64 {
        0.5 * dot(w, &self.apply(w))
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        match &self.hessian {
            Hessian::Diagonal(d) => {
                if i == j {
                    d[i]
                } else {
                    0.0
                }
            }
            Hessian::Dense { dim, data } => data[i * dim + j],
        }
    }
}

/// Product of `n` Householder reflections; row-major.
fn random_orthogonal(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = substream(seed, Purpose::Probe, 0);
    let mut q = vec![0.0; n * n];
    for i in 0..n {
        q[i * n + i] = 1.0;
    }
    for _ in 0..n {
        let v = normal_vec(&mut rng, n);
        let vv = dot(&v, &v);
        if vv == 0.0 {
            continue;
        }
        // q <- q (I - 2 v v^T / v^T v)
        for row in q.chunks_mut(n) {
            let c = 2.0 * dot(row, &v) / vv;
            for (x, vi) in row.iter_mut().zip(&v) {
                *x -= c * vi;
            }
        }
    }
    q
}
