//! Square quadratic pencils obtained from a [`DiscreteOperator`] by eliminating the
//! boundary unknowns through the boundary rows, optionally restricted to an equatorial
//! parity sector.

use serde::{Deserialize, Serialize};

use crate::numerics::dense::{norm2, CMat, CVec, LinalgError, Lu};
use crate::numerics::C64;
use crate::operator::{BoundaryCondition, DiscreteOperator};

use super::SpectraError;

/// Behaviour under θ ↦ π − θ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sector {
    Even,
    Odd,
    /// No symmetry reduction.
    Full,
}

/// A(λ) = A0 + λA1 + λ²A2 acting on reduced coordinates.
#[derive(Debug, Clone)]
pub struct ReducedPencil {
    pub a0: CMat,
    pub a1: CMat,
    pub a2: CMat,
    pub sector: Sector,
    /// Full-vector expansion of each reduced unknown as (full index, coefficient).
    columns: Vec<Vec<(usize, C64)>>,
    /// Full index that each reduced unknown reads its value from.
    anchors: Vec<usize>,
    /// Full row index of each reduced row.
    pub rows: Vec<usize>,
    full_dim: usize,
    /// √ of the L² weight of each reduced unknown.
    pub col_scale: Vec<f64>,
    /// √ of the physical residual weight of each reduced row.
    pub row_scale: Vec<f64>,
}

/// Sectors an operator splits into.
pub fn sectors(op: &DiscreteOperator) -> Vec<Sector> {
    match &op.layout {
        Some(l) if l.grid.n_angular % 2 == 0 && bc_is_even(&l.bc) => vec![Sector::Even, Sector::Odd],
        _ => vec![Sector::Full],
    }
}

fn bc_is_even(bc: &BoundaryCondition) -> bool {
    match bc {
        BoundaryCondition::Dirichlet => true,
        BoundaryCondition::Robin { beta } => beta.is_even(),
    }
}

impl ReducedPencil {
    pub fn dim(&self) -> usize {
        self.a0.nrows()
    }

    pub fn eval(&self, lambda: C64) -> CMat {
        let l2 = lambda * lambda;
        let mut m = self.a0.clone();
        m.scaled_add(lambda, &self.a1);
        m.scaled_add(l2, &self.a2);
        m
    }

    /// dA/dλ = A1 + 2λA2.
    pub fn derivative(&self, lambda: C64) -> CMat {
        let mut m = self.a1.clone();
        m.scaled_add(lambda * 2.0, &self.a2);
        m
    }

    /// Full grid vector from reduced coordinates.
    pub fn expand(&self, v: &CVec) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.full_dim];
        for (vc, col) in v.iter().zip(&self.columns) {
            for &(f, coef) in col {
                out[f] += vc * coef;
            }
        }
        out
    }

    /// Reduced coordinates of a full grid vector (values at the anchor nodes).
    pub fn restrict(&self, full: &[C64]) -> CVec {
        self.anchors.iter().map(|&f| full[f]).collect()
    }

    /// Weighted residual ratio ‖A(λ)v‖/‖v‖ in the reduced weights.
    pub fn weighted_residual(&self, lambda: C64, v: &CVec) -> f64 {
        let r = self.eval(lambda).dot(v);
        let num: f64 = r.iter().zip(&self.row_scale).map(|(x, w)| (x * w).norm_sqr()).sum();
        let den: f64 = v.iter().zip(&self.col_scale).map(|(x, w)| (x * w).norm_sqr()).sum();
        (num / den).sqrt()
    }
}

/// Eliminate boundary unknowns and restrict to `sector`.
pub fn reduce(op: &DiscreteOperator, sector: Sector) -> Result<ReducedPencil, SpectraError> {
    let n = op.dim();
    let Some(layout) = &op.layout else {
        return Ok(ReducedPencil {
            a0: op.p0.clone(),
            a1: op.p1.clone(),
            a2: op.p2.clone(),
            sector: Sector::Full,
            columns: (0..n).map(|i| vec![(i, C64::new(1.0, 0.0))]).collect(),
            anchors: (0..n).collect(),
            rows: (0..n).collect(),
            full_dim: n,
            col_scale: vec![1.0; n],
            row_scale: vec![1.0; n],
        });
    };
    let grid = &layout.grid;
    let na = grid.n_angular;
    if sector != Sector::Full && (na % 2 != 0 || !bc_is_even(&layout.bc)) {
        return Err(SpectraError::LinearizationFailure(
            "parity sectors need an even angular node count and an even boundary profile".into(),
        ));
    }
    let bset = &layout.boundary_rows;
    let is_boundary = {
        let mut v = vec![false; n];
        for &b in bset {
            v[b] = true;
        }
        v
    };
    // Boundary rows only involve P0: B_bb w_b + B_br w_r = 0.
    let nb = bset.len();
    let bbb = CMat::from_shape_fn((nb, nb), |(p, q)| op.p0[[bset[p], bset[q]]]);
    let lu = Lu::new(&bbb).map_err(|_| SpectraError::LinearizationFailure("boundary rows are singular".into()))?;
    // elimination[q] = list of (boundary unknown index, coefficient) for non-boundary unknown q.
    let mut elim: Vec<Vec<(usize, C64)>> = vec![Vec::new(); n];
    for q in 0..n {
        if is_boundary[q] {
            continue;
        }
        let col: CVec = bset.iter().map(|&b| op.p0[[b, q]]).collect();
        if col.iter().all(|v| *v == C64::new(0.0, 0.0)) {
            continue;
        }
        let x = lu.solve(&col).map_err(|e| SpectraError::Linalg(e.to_string()))?;
        for (p, xv) in x.iter().enumerate() {
            if *xv != C64::new(0.0, 0.0) {
                elim[q].push((bset[p], -xv));
            }
        }
    }
    let weights = &layout.weights;
    let row_weights = &layout.row_weights;
    let unit = C64::new(1.0, 0.0);
    let mut columns = Vec::new();
    let mut anchors = Vec::new();
    let mut col_scale = Vec::new();
    let mut rows = Vec::new();
    let mut row_scale = Vec::new();
    let jmax = if sector == Sector::Full { na } else { na / 2 };
    let sign = if sector == Sector::Odd { -1.0 } else { 1.0 };
    for i in 0..grid.n_radial {
        for j in 0..jmax {
            let q = grid.index(i, j);
            if is_boundary[q] {
                continue;
            }
            let mut col = vec![(q, unit)];
            col.extend(elim[q].iter().copied());
            let mut w = weights[q];
            let mut rw = row_weights[q];
            if sector != Sector::Full {
                let qm = grid.index(i, grid.mirror(j));
                col.push((qm, C64::new(sign, 0.0)));
                col.extend(elim[qm].iter().map(|&(f, c)| (f, c * sign)));
                w *= 2.0;
                rw *= 2.0;
            }
            columns.push(merge(col));
            anchors.push(q);
            col_scale.push(w.sqrt());
            rows.push(q);
            row_scale.push(rw.sqrt());
        }
    }
    let build = |p: &CMat| {
        let mut a = CMat::zeros((rows.len(), columns.len()));
        for (c, col) in columns.iter().enumerate() {
            for &(f, coef) in col {
                for (r, &row) in rows.iter().enumerate() {
                    let v = p[[row, f]];
                    if v != C64::new(0.0, 0.0) {
                        a[[r, c]] += v * coef;
                    }
                }
            }
        }
        a
    };
    Ok(ReducedPencil {
        a0: build(&op.p0),
        a1: build(&op.p1),
        a2: build(&op.p2),
        sector,
        columns,
        anchors,
        rows,
        full_dim: n,
        col_scale,
        row_scale,
    })
}

fn merge(mut col: Vec<(usize, C64)>) -> Vec<(usize, C64)> {
    col.sort_by_key(|e| e.0);
    let mut out: Vec<(usize, C64)> = Vec::with_capacity(col.len());
    for (f, c) in col {
        match out.last_mut() {
            Some(last) if last.0 == f => last.1 += c,
            _ => out.push((f, c)),
        }
    }
    out.retain(|e| e.1 != C64::new(0.0, 0.0));
    out
}

/// Result of nonlinear inverse iteration.
#[derive(Debug, Clone)]
pub struct Polished {
    pub lambda: C64,
    pub vector: CVec,
    pub iterations: usize,
    pub converged: bool,
}

/// Nonlinear inverse iteration for A(λ)v = 0 from (λ0, v0):
/// x = A(λ)⁻¹A'(λ)v, λ ← λ − (cᴴv)/(cᴴx), v ← x/(cᴴx).
pub fn polish(pencil: &ReducedPencil, lambda0: C64, v0: Option<&CVec>, max_iter: usize) -> Polished {
    let n = pencil.dim();
    let mut lambda = lambda0;
    let mut v: CVec = match v0 {
        Some(v) => v.clone(),
        None => {
            let seed: CVec = (0..n)
                .map(|i| C64::new(1.0 + 0.3 * (i as f64 * 0.618).sin(), 0.2 * (i as f64 * 1.7).cos()))
                .collect();
            match Lu::new(&pencil.eval(lambda)).and_then(|lu| lu.solve(&seed)) {
                Ok(x) => x,
                Err(_) => seed,
            }
        }
    };
    let nv = norm2(&v);
    if nv == 0.0 || !nv.is_finite() {
        return Polished { lambda, vector: v, iterations: 0, converged: false };
    }
    v.mapv_inplace(|x| x / nv);
    let c = v.clone();
    let dot = |a: &CVec, b: &CVec| a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C64>();
    let mut last = f64::INFINITY;
    for it in 1..=max_iter {
        let lu = match Lu::new(&pencil.eval(lambda)) {
            Ok(lu) => lu,
            Err(_) => return Polished { lambda, vector: v, iterations: it, converged: true },
        };
        let rhs = pencil.derivative(lambda).dot(&v);
        let x = match lu.solve(&rhs) {
            Ok(x) => x,
            Err(LinalgError::Singular) => return Polished { lambda, vector: v, iterations: it, converged: true },
            Err(_) => return Polished { lambda, vector: v, iterations: it, converged: false },
        };
        let cx = dot(&c, &x);
        if cx == C64::new(0.0, 0.0) || !cx.is_finite() {
            return Polished { lambda, vector: v, iterations: it, converged: false };
        }
        let step = dot(&c, &v) / cx;
        lambda -= step;
        v = x.mapv(|e| e / cx);
        let size = step.norm() / (1.0 + lambda.norm());
        // Stop at roundoff level, or once the steps stop shrinking near it.
        let stalled = size <= 1e-10 && size >= 0.5 * last;
        last = size;
        if size <= 1e-13 || stalled {
            let nv = norm2(&v);
            v.mapv_inplace(|e| e / nv);
            return Polished { lambda, vector: v, iterations: it, converged: true };
        }
    }
    let nv = norm2(&v);
    v.mapv_inplace(|e| e / nv);
    Polished { lambda, vector: v, iterations: max_iter, converged: false }
}
