use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// An ordered collection of `n` points in `R^d` with an attached time.
///
/// Points are stored row-major so that `point(i)` is a contiguous slice.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSet {
    data: Vec<f64>,
    len: usize,
    dim: usize,
    time: f64,
}

impl ParticleSet {
    pub fn from_flat(data: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("particle dimension must be positive"));
        }
        if data.len() % dim != 0 {
            return Err(Error::invalid(format!(
                "flat buffer of length {} is not a multiple of dimension {dim}",
                data.len()
            )));
        }
        Ok(Self {
            len: data.len() / dim,
            data,
            dim,
            time: 0.0,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows
            .first()
            .map(|r| r.as_ref().len())
            .ok_or_else(|| Error::invalid("cannot infer dimension from zero rows"))?;
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::from_flat(data, dim)
    }

    /// Build from an `n x d` matrix whose rows are points.
    pub fn from_matrix(m: &DMatrix<f64>) -> Result<Self> {
        let (n, d) = m.shape();
        let mut data = Vec::with_capacity(n * d);
        for i in 0..n {
            data.extend(m.row(i).iter());
        }
        Self::from_flat(data, d)
    }

    /// An empty set of the given dimension.
    pub fn empty(dim: usize) -> Self {
        Self {
            data: Vec::new(),
            len: 0,
            dim,
            time: 0.0,
        }
    }

    /// `n` iid standard normal draws in `R^dim`.
    pub fn standard_normal<R: Rng + ?Sized>(n: usize, dim: usize, rng: &mut R) -> Self {
        let data = (0..n * dim).map(|_| rng.sample(StandardNormal)).collect();
        Self {
            data,
            len: n,
            dim,
            time: 0.0,
        }
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn set_time(&mut self, time: f64) {
        self.time = time;
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn point_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.len, self.dim, &self.data)
    }

    pub fn mean(&self) -> DVector<f64> {
        let mut m = DVector::zeros(self.dim);
        for p in self.iter() {
            for (acc, v) in m.iter_mut().zip(p) {
                *acc += v;
            }
        }
        if self.len > 0 {
            m /= self.len as f64;
        }
        m
    }

    /// Concatenation of two sets of equal dimension. The time of `self` is kept.
    pub fn union(&self, other: &ParticleSet) -> Result<ParticleSet> {
        crate::error::check_dim(self.dim, other.dim)?;
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Self {
            len: self.len + other.len,
            data,
            dim: self.dim,
            time: self.time,
        })
    }

    /// `x_i + step * v_i` for every row, with `v` an `n x d` matrix.
    pub fn advanced(&self, velocities: &DMatrix<f64>, step: f64) -> Result<ParticleSet> {
        if velocities.nrows() != self.len {
            return Err(Error::DimensionMismatch {
                expected: self.len,
                got: velocities.nrows(),
            });
        }
        crate::error::check_dim(self.dim, velocities.ncols())?;
        let mut out = self.clone();
        for i in 0..self.len {
            for (k, x) in out.point_mut(i).iter_mut().enumerate() {
                *x += step * velocities[(i, k)];
            }
        }
        out.time = self.time + step;
        Ok(out)
    }

    /// Subset of rows in the given order.
    pub fn select(&self, indices: &[usize]) -> ParticleSet {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            data.extend_from_slice(self.point(i));
        }
        Self {
            len: indices.len(),
            data,
            dim: self.dim,
            time: self.time,
        }
    }

    /// Apply `f` to every point in place.
    pub fn map_points(&self, mut f: impl FnMut(&[f64], &mut [f64])) -> ParticleSet {
        let mut out = self.clone();
        for i in 0..self.len {
            let src = self.point(i);
            f(src, out.point_mut(i));
        }
        out
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}
