//! Discretized design: `X`, the Kronecker interaction block `U`, `Ψ = (X, U)`
//! and the full regressor matrix `Φ = (Ψ | Z [| 1])`.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::{cross_gram, inner_product_operator, BasisSpec};
use crate::error::{check_dim, Error, Result};
use crate::Real;

/// How the functional covariate of each observation is stored.
#[derive(Debug, Clone, PartialEq)]
pub enum Curves<T> {
    /// Samples on a common grid; `values` is `n x p`.
    Sampled { grid: Vec<T>, values: DMatrix<T> },
    /// Exact B-spline expansions; `coefs` is `n x K` on `basis`.
    Coefficients {
        basis: BasisSpec<T>,
        coefs: DMatrix<T>,
    },
}

impl<T: Real> Curves<T> {
    pub fn n(&self) -> usize {
        match self {
            Curves::Sampled { values, .. } => values.nrows(),
            Curves::Coefficients { coefs, .. } => coefs.nrows(),
        }
    }

    fn select_rows(&self, rows: &[usize]) -> Self {
        match self {
            Curves::Sampled { grid, values } => Curves::Sampled {
                grid: grid.clone(),
                values: values.select_rows(rows),
            },
            Curves::Coefficients { basis, coefs } => Curves::Coefficients {
                basis: basis.clone(),
                coefs: coefs.select_rows(rows),
            },
        }
    }

    fn storage(&self) -> &DMatrix<T> {
        match self {
            Curves::Sampled { values, .. } => values,
            Curves::Coefficients { coefs, .. } => coefs,
        }
    }

    fn with_storage(&self, m: DMatrix<T>) -> Self {
        match self {
            Curves::Sampled { grid, .. } => Curves::Sampled {
                grid: grid.clone(),
                values: m,
            },
            Curves::Coefficients { basis, .. } => Curves::Coefficients {
                basis: basis.clone(),
                coefs: m,
            },
        }
    }
}

/// `{X_i(t), z_i, y_i}` for `i = 1..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub curves: Curves<T>,
    /// `n x q` scalar covariates.
    pub scalars: DMatrix<T>,
    pub response: DVector<T>,
}

impl<T: Real> Dataset<T> {
    pub fn new(curves: Curves<T>, scalars: DMatrix<T>, response: DVector<T>) -> Result<Self> {
        let n = response.len();
        check_dim("curve rows", n, curves.n())?;
        check_dim("scalar covariate rows", n, scalars.nrows())?;
        if let Curves::Sampled { grid, values } = &curves {
            check_dim("curve sample columns", grid.len(), values.ncols())?;
        }
        if let Curves::Coefficients { basis, coefs } = &curves {
            check_dim("curve coefficient columns", basis.n_basis(), coefs.ncols())?;
        }
        Ok(Self {
            curves,
            scalars,
            response,
        })
    }

    pub fn n(&self) -> usize {
        self.response.len()
    }

    pub fn q(&self) -> usize {
        self.scalars.ncols()
    }

    /// Observations `rows`, in the given order.
    pub fn subset(&self, rows: &[usize]) -> Self {
        Self {
            curves: self.curves.select_rows(rows),
            scalars: self.scalars.select_rows(rows),
            response: DVector::from_iterator(rows.len(), rows.iter().map(|&i| self.response[i])),
        }
    }
}

/// Column means removed by [`center_columns`], kept for prediction time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenteringOffsets<T> {
    pub response: T,
    pub scalars: Vec<T>,
    /// Pointwise curve mean (per grid point, or per basis coefficient).
    pub curve: Vec<T>,
}

impl<T: Real> CenteringOffsets<T> {
    /// Subtracts these offsets from another dataset with the same layout.
    pub fn apply(&self, data: &Dataset<T>) -> Result<Dataset<T>> {
        check_dim("centered scalar columns", self.scalars.len(), data.q())?;
        let storage = data.curves.storage();
        check_dim("centered curve columns", self.curve.len(), storage.ncols())?;
        let mut curves = storage.clone();
        for (j, &m) in self.curve.iter().enumerate() {
            curves.column_mut(j).add_scalar_mut(-m);
        }
        let mut scalars = data.scalars.clone();
        for (j, &m) in self.scalars.iter().enumerate() {
            scalars.column_mut(j).add_scalar_mut(-m);
        }
        Ok(Dataset {
            curves: data.curves.with_storage(curves),
            scalars,
            response: data.response.add_scalar(-self.response),
        })
    }
}

fn column_means<T: Real>(m: &DMatrix<T>) -> Vec<T> {
    let n = T::of_usize(m.nrows());
    m.column_iter().map(|c| c.sum() / n).collect()
}

/// Centers the response, every scalar covariate and the curves (pointwise) to mean zero.
pub fn center_columns<T: Real>(data: &Dataset<T>) -> Result<(Dataset<T>, CenteringOffsets<T>)> {
    if data.n() < 2 {
        return Err(Error::InvalidArgument(format!(
            "centering needs at least 2 observations, got {}",
            data.n()
        )));
    }
    let offsets = CenteringOffsets {
        response: data.response.sum() / T::of_usize(data.n()),
        scalars: column_means(&data.scalars),
        curve: column_means(data.curves.storage()),
    };
    let centered = offsets.apply(data)?;
    Ok((centered, offsets))
}

/// Column layout of `Φ`: `(b_0 | b_1 .. b_q | γ | μ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignLayout {
    pub n_basis: usize,
    pub q: usize,
    pub intercept: bool,
}

impl DesignLayout {
    /// `q_n = (q + 1)(M + d)`.
    pub fn q_n(&self) -> usize {
        (self.q + 1) * self.n_basis
    }

    /// Number of columns of `Φ`: `q_n + q`, plus one with an intercept.
    pub fn d_n(&self) -> usize {
        self.q_n() + self.q + usize::from(self.intercept)
    }

    /// Columns of `b_k`, `k = 0..=q`.
    pub fn block(&self, k: usize) -> Range<usize> {
        k * self.n_basis..(k + 1) * self.n_basis
    }

    pub fn gamma(&self) -> Range<usize> {
        self.q_n()..self.q_n() + self.q
    }

    pub fn intercept_index(&self) -> Option<usize> {
        self.intercept.then(|| self.q_n() + self.q)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrices<T> {
    /// `n x (M+d)`, entries `∫ X_i B_j`.
    pub x_mat: DMatrix<T>,
    /// `n x q(M+d)`, row `i` is `z_i ⊗ x_i`.
    pub u_mat: DMatrix<T>,
    pub psi: DMatrix<T>,
    pub z_mat: DMatrix<T>,
    pub phi: DMatrix<T>,
    pub layout: DesignLayout,
}

impl<T: Real> DesignMatrices<T> {
    pub fn n(&self) -> usize {
        self.phi.nrows()
    }

    pub fn intercept(&self) -> bool {
        self.layout.intercept
    }

    /// Builds the design from precomputed inner products `x_mat` (`n x (M+d)`)
    /// and scalar covariates `z_mat` (`n x q`).
    pub fn from_parts(x_mat: DMatrix<T>, z_mat: DMatrix<T>, intercept: bool) -> Result<Self> {
        check_dim("scalar covariate rows", x_mat.nrows(), z_mat.nrows())?;
        Ok(assemble(x_mat, z_mat, intercept))
    }
}

/// Inner products of every curve with the estimation basis.
pub fn curve_inner_products<T: Real>(curves: &Curves<T>, spec: &BasisSpec<T>) -> Result<DMatrix<T>> {
    match curves {
        Curves::Sampled { grid, values } => {
            let op = inner_product_operator(spec, grid)?;
            Ok(values * op)
        }
        Curves::Coefficients { basis, coefs } => {
            let g = cross_gram(basis, spec)?;
            Ok(coefs * g)
        }
    }
}

/// Assembles `X`, `U = (z_i ⊗ x_i)`, `Ψ` and `Φ` with column order `(x | u | z [| 1])`.
pub fn build_design<T: Real>(
    data: &Dataset<T>,
    spec: &BasisSpec<T>,
    intercept: bool,
) -> Result<DesignMatrices<T>> {
    let x_mat = curve_inner_products(&data.curves, spec)?;
    check_dim("design rows", data.n(), x_mat.nrows())?;
    Ok(assemble(x_mat, data.scalars.clone(), intercept))
}

fn assemble<T: Real>(x_mat: DMatrix<T>, z_mat: DMatrix<T>, intercept: bool) -> DesignMatrices<T> {
    let n = x_mat.nrows();
    let nb = x_mat.ncols();
    let q = z_mat.ncols();
    let layout = DesignLayout {
        n_basis: nb,
        q,
        intercept,
    };
    let mut u_mat = DMatrix::zeros(n, q * nb);
    for k in 0..q {
        for j in 0..nb {
            for i in 0..n {
                u_mat[(i, k * nb + j)] = z_mat[(i, k)] * x_mat[(i, j)];
            }
        }
    }
    let mut psi = DMatrix::zeros(n, layout.q_n());
    psi.columns_mut(0, nb).copy_from(&x_mat);
    psi.columns_mut(nb, q * nb).copy_from(&u_mat);
    let mut phi = DMatrix::zeros(n, layout.d_n());
    phi.columns_mut(0, layout.q_n()).copy_from(&psi);
    phi.columns_mut(layout.q_n(), q).copy_from(&z_mat);
    if let Some(c) = layout.intercept_index() {
        phi.column_mut(c).fill(T::one());
    }
    DesignMatrices {
        x_mat,
        u_mat,
        psi,
        z_mat,
        phi,
        layout,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(n: usize, q: usize) -> Dataset<f64> {
        let basis = BasisSpec::new(3, 4, 1.0).unwrap();
        let coefs = DMatrix::from_fn(n, basis.n_basis(), |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
        let z = DMatrix::from_fn(n, q, |i, k| (i as f64 + 1.0) * (k as f64 - 0.5));
        let y = DVector::from_fn(n, |i, _| i as f64);
        Dataset::new(Curves::Coefficients { basis, coefs }, z, y).unwrap()
    }

    #[test]
    fn dimension_formulas() {
        let layout = DesignLayout {
            n_basis: 73,
            q: 2,
            intercept: false,
        };
        assert_eq!(layout.q_n(), 219);
        assert_eq!(layout.d_n(), 221);
        let with = DesignLayout {
            intercept: true,
            ..layout
        };
        assert_eq!(with.d_n(), 222);
        assert_eq!(with.intercept_index(), Some(221));
    }

    #[test]
    fn unit_scalar_row_copies_x_into_first_block() {
        let mut data = toy(4, 2);
        data.scalars.row_mut(1).copy_from_slice(&[1.0, 0.0]);
        let spec = BasisSpec::new(3, 4, 1.0).unwrap();
        let d = build_design(&data, &spec, false).unwrap();
        let nb = spec.n_basis();
        for j in 0..nb {
            assert_eq!(d.u_mat[(1, j)], d.x_mat[(1, j)]);
            assert_eq!(d.u_mat[(1, nb + j)], 0.0);
        }
    }

    #[test]
    fn phi_is_concatenation_with_intercept_last() {
        let data = toy(5, 2);
        let spec = BasisSpec::new(3, 4, 1.0).unwrap();
        let d = build_design(&data, &spec, true).unwrap();
        let qn = d.layout.q_n();
        assert_eq!(d.phi.columns(0, qn), d.psi.columns(0, qn));
        assert_eq!(d.phi.columns(qn, 2), d.z_mat.columns(0, 2));
        assert!(d.phi.column(qn + 2).iter().all(|v| *v == 1.0));
    }

    #[test]
    fn rejects_mismatched_rows() {
        let data = toy(5, 2);
        let bad = Dataset::new(data.curves.clone(), data.scalars.clone(), DVector::zeros(4));
        assert!(matches!(bad, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn centering_small_response() {
        let mut data = toy(3, 1);
        data.response = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let (c, off) = center_columns(&data).unwrap();
        assert_eq!(c.response.as_slice(), &[-1.0, 0.0, 1.0]);
        assert_eq!(off.response, 2.0);
        let (again, _) = center_columns(&c).unwrap();
        assert!((again.response - &c.response).amax() < 1e-12);
        assert!((again.scalars - &c.scalars).amax() < 1e-12);
    }

    #[test]
    fn centering_needs_two_rows() {
        let data = toy(1, 1);
        assert!(center_columns(&data).is_err());
    }
}
