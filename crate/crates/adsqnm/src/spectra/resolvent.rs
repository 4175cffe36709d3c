use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::numerics::dense::{scaled_sigma_min, Lu};
use crate::numerics::C64;
use crate::operator::DiscreteOperator;

use super::{reduce, sectors, ReducedPencil, SpectraError};

/// Reduced pencils of every sector, ready for repeated norm evaluations.
#[derive(Debug, Clone)]
pub struct Resolvent {
    pub pencils: Vec<ReducedPencil>,
}

impl Resolvent {
    pub fn new(op: &DiscreteOperator) -> Result<Self, SpectraError> {
        let pencils = sectors(op).into_iter().map(|s| reduce(op, s)).collect::<Result<Vec<_>, _>>()?;
        Ok(Self { pencils })
    }

    /// 1/σ_min of P(z) in the weighted norms; +∞ when P(z) is numerically singular.
    pub fn norm(&self, z: C64) -> f64 {
        self.pencils.iter().map(|p| sector_norm(p, z)).fold(0.0, f64::max)
    }
}

fn sector_norm(p: &ReducedPencil, z: C64) -> f64 {
    let Ok(lu) = Lu::new(&p.eval(z)) else {
        return f64::INFINITY;
    };
    match scaled_sigma_min(&lu, &p.row_scale, &p.col_scale, 300, 1e-8) {
        Ok(s) if s > 0.0 => 1.0 / s,
        _ => f64::INFINITY,
    }
}

/// Weighted resolvent norm ‖P(z)⁻¹‖ as 1/σ_min.
pub fn resolvent_norm(op: &DiscreteOperator, z: C64) -> Result<f64, SpectraError> {
    Ok(Resolvent::new(op)?.norm(z))
}

/// Semiclassical rectangle Ω(h) = [re_min, re_max] + i h [c_minus, c_plus] in the z-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanSpec {
    pub re_min: f64,
    pub re_max: f64,
    pub h: f64,
    pub c_minus: f64,
    pub c_plus: f64,
    pub n_re: usize,
    pub n_im: usize,
    /// A local maximum is a pole candidate when it exceeds this multiple of the scan median.
    #[serde(default = "default_candidate_factor")]
    pub candidate_factor: f64,
}

fn default_candidate_factor() -> f64 {
    10.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSample {
    pub z: C64,
    pub inv_sigma_min: f64,
}

#[derive(Debug, Clone)]
pub struct ResolventScan {
    pub spec: ScanSpec,
    /// Row-major samples, imaginary part outer.
    pub samples: Vec<ScanSample>,
    /// Candidate poles in the z-plane.
    pub candidates: Vec<C64>,
}

impl ResolventScan {
    pub fn sample(&self, i_re: usize, i_im: usize) -> &ScanSample {
        &self.samples[i_im * self.spec.n_re + i_re]
    }

    /// Candidates mapped back to λ = z/h.
    pub fn candidate_lambdas(&self) -> Vec<C64> {
        self.candidates.iter().map(|z| z / self.spec.h).collect()
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (a + b)];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// Sample 1/σ_min(h²P(z/h)) on an n_re × n_im lattice over Ω(h).
pub fn scan_rectangle(op: &DiscreteOperator, spec: &ScanSpec) -> Result<ResolventScan, SpectraError> {
    if !(spec.h > 0.0 && spec.n_re >= 1 && spec.n_im >= 1 && spec.re_max >= spec.re_min && spec.c_plus >= spec.c_minus)
    {
        return Err(SpectraError::InvalidInput("malformed scan rectangle".into()));
    }
    if let Some(l) = &op.layout {
        let bound = -0.5 * l.geometry.horizon.surface_gravity;
        if spec.c_minus <= bound {
            return Err(SpectraError::InvalidRectangle { c_minus: spec.c_minus, bound });
        }
    }
    let res = Resolvent::new(op)?;
    let re = linspace(spec.re_min, spec.re_max, spec.n_re);
    let im = linspace(spec.h * spec.c_minus, spec.h * spec.c_plus, spec.n_im);
    let zs: Vec<C64> = im.iter().flat_map(|&y| re.iter().map(move |&x| C64::new(x, y))).collect();
    let h2 = spec.h * spec.h;
    let samples: Vec<ScanSample> = zs
        .par_iter()
        .map(|&z| ScanSample { z, inv_sigma_min: res.norm(z / spec.h) / h2 })
        .collect();
    let candidates = local_maxima(&samples, spec);
    Ok(ResolventScan { spec: *spec, samples, candidates })
}

fn local_maxima(samples: &[ScanSample], spec: &ScanSpec) -> Vec<C64> {
    let mut vals: Vec<f64> = samples.iter().map(|s| s.inv_sigma_min).filter(|v| v.is_finite()).collect();
    if vals.is_empty() {
        return samples.iter().map(|s| s.z).collect();
    }
    vals.sort_by(|a, b| a.total_cmp(b));
    let median = vals[vals.len() / 2];
    let threshold = spec.candidate_factor * median;
    let (nx, ny) = (spec.n_re as isize, spec.n_im as isize);
    let at = |i: isize, j: isize| samples[(j * nx + i) as usize].inv_sigma_min;
    let mut out = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let v = at(i, j);
            if !(v >= threshold) {
                continue;
            }
            let mut is_max = true;
            for dj in -1..=1 {
                for di in -1..=1 {
                    let (a, b) = (i + di, j + dj);
                    if (di, dj) != (0, 0) && a >= 0 && a < nx && b >= 0 && b < ny && at(a, b) > v {
                        is_max = false;
                    }
                }
            }
            if is_max {
                out.push(samples[(j * nx + i) as usize].z);
            }
        }
    }
    out
}
