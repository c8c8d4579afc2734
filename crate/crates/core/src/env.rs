//! Periodic branching-rate environments.
//!
//! Every environment is a real trigonometric polynomial on the unit torus,
//! `g(x) = offset + sum_k a_k cos(2 pi k.x + phase_k)`, so its mean, its
//! periodicity and its Fourier coefficients are exact.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Grid resolution per axis used to validate nonnegativity.
pub const VALIDATION_GRID: usize = 256;

/// One cosine mode `amp * cos(2 pi k.x + phase)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mode {
    pub k: Vec<i32>,
    pub amp: f64,
    #[serde(default)]
    pub phase: f64,
}

impl Mode {
    pub fn new(k: &[i32], amp: f64, phase: f64) -> Self {
        Mode { k: k.to_vec(), amp, phase }
    }
}

/// A real trigonometric polynomial with no sign constraint. Used directly
/// for potentials such as `-g`; branching environments wrap it in
/// [`PeriodicField`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPolynomial {
    dim: usize,
    offset: f64,
    modes: Vec<Mode>,
}

impl TrigPolynomial {
    pub fn new(dim: usize, modes: Vec<Mode>, offset: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidArgument(format!("dimension {dim} not in 1..=3")));
        }
        if !offset.is_finite() {
            return Err(Error::InvalidArgument("offset must be finite".into()));
        }
        for m in &modes {
            if m.k.len() != dim {
                return Err(Error::InvalidArgument(format!(
                    "wavevector {:?} has length {}, expected {dim}",
                    m.k,
                    m.k.len()
                )));
            }
            if !m.amp.is_finite() || !m.phase.is_finite() {
                return Err(Error::InvalidArgument("mode amplitude and phase must be finite".into()));
            }
        }
        Ok(TrigPolynomial { dim, offset, modes })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        let mut v = self.offset;
        for m in &self.modes {
            // reduce each coordinate to the unit cell first so that integer
            // translates evaluate identically up to rounding of x itself
            let mut arg = 0.0;
            for (ki, xi) in m.k.iter().zip(x) {
                arg += *ki as f64 * xi.rem_euclid(1.0);
            }
            v += m.amp * (TAU * arg + m.phase).cos();
        }
        v
    }

    pub fn negated(&self) -> TrigPolynomial {
        TrigPolynomial {
            dim: self.dim,
            offset: -self.offset,
            modes: self
                .modes
                .iter()
                .map(|m| Mode { k: m.k.clone(), amp: -m.amp, phase: m.phase })
                .collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> TrigPolynomial {
        TrigPolynomial {
            dim: self.dim,
            offset: s * self.offset,
            modes: self
                .modes
                .iter()
                .map(|m| Mode { k: m.k.clone(), amp: s * m.amp, phase: m.phase })
                .collect(),
        }
    }

    /// Largest `|k|_inf` over the modes with nonzero amplitude.
    pub fn max_wavenumber(&self) -> i32 {
        self.modes
            .iter()
            .filter(|m| m.amp != 0.0)
            .flat_map(|m| m.k.iter().map(|k| k.abs()))
            .max()
            .unwrap_or(0)
    }

    /// Complex Fourier coefficients `ghat(k)` such that
    /// `g(x) = sum_k ghat(k) exp(2 pi i k.x)`.
    pub fn fourier_coefficients(&self) -> BTreeMap<Vec<i32>, Complex64> {
        let mut out = BTreeMap::new();
        *out.entry(vec![0; self.dim]).or_insert(Complex64::new(0.0, 0.0)) += self.offset;
        for m in &self.modes {
            if m.amp == 0.0 {
                continue;
            }
            let half = 0.5 * m.amp;
            let plus = Complex64::from_polar(half, m.phase);
            let minus: Vec<i32> = m.k.iter().map(|k| -k).collect();
            *out.entry(m.k.clone()).or_insert(Complex64::new(0.0, 0.0)) += plus;
            *out.entry(minus).or_insert(Complex64::new(0.0, 0.0)) += plus.conj();
        }
        out.retain(|_, c| c.norm() > 0.0);
        out
    }

    /// Grid minimum and maximum over `n^d` uniform samples of the unit cell.
    pub fn grid_extrema(&self, n: usize) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for_each_grid_point(self.dim, n, |x| {
            let v = self.eval(x);
            lo = lo.min(v);
            hi = hi.max(v);
        });
        (lo, hi)
    }
}

/// Visits every point of the uniform `n^d` grid `{i/n}` on the unit cell.
pub(crate) fn for_each_grid_point(dim: usize, n: usize, mut f: impl FnMut(&[f64])) {
    let h = 1.0 / n as f64;
    let mut x = vec![0.0; dim];
    let total = n.pow(dim as u32);
    for flat in 0..total {
        let mut r = flat;
        for xi in x.iter_mut() {
            *xi = (r % n) as f64 * h;
            r /= n;
        }
        f(&x);
    }
}

/// A validated branching-rate environment: `g >= 0` and `g` not identically
/// zero. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicField {
    poly: TrigPolynomial,
    min: f64,
    max: f64,
}

impl PeriodicField {
    /// Builds a field, rejecting it if its minimum over the
    /// `256^d` validation grid is negative.
    pub fn new(dim: usize, modes: Vec<Mode>, offset: f64) -> Result<Self> {
        let poly = TrigPolynomial::new(dim, modes, offset)?;
        Self::from_polynomial(poly)
    }

    pub fn from_polynomial(poly: TrigPolynomial) -> Result<Self> {
        let n = if poly.modes.iter().all(|m| m.amp == 0.0) { 1 } else { VALIDATION_GRID };
        let (min, max) = poly.grid_extrema(n);
        if min < 0.0 {
            return Err(Error::NegativeField { min });
        }
        if max <= 0.0 {
            return Err(Error::ZeroField);
        }
        Ok(PeriodicField { poly, min, max })
    }

    pub fn constant(dim: usize, value: f64) -> Result<Self> {
        Self::new(dim, Vec::new(), value)
    }

    /// `g(x) = offset + amp cos(2 pi x_axis)` in dimension `dim`.
    pub fn cosine(dim: usize, axis: usize, offset: f64, amp: f64) -> Result<Self> {
        let mut k = vec![0; dim];
        k[axis] = 1;
        Self::new(dim, vec![Mode { k, amp, phase: 0.0 }], offset)
    }

    pub fn dim(&self) -> usize {
        self.poly.dim
    }

    pub fn polynomial(&self) -> &TrigPolynomial {
        &self.poly
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.poly.eval(x)
    }

    /// Mean over the torus. Every nonconstant mode integrates to zero.
    pub fn mean(&self) -> f64 {
        self.poly.offset
    }

    /// Grid extrema over `grid_n^d` samples. These approximate the true
    /// extrema to within the field's modulus of continuity at spacing
    /// `1/grid_n`.
    pub fn extrema(&self, grid_n: usize) -> (f64, f64) {
        self.poly.grid_extrema(grid_n.max(1))
    }

    /// Extrema on the validation grid, cached at construction.
    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn is_constant(&self) -> bool {
        self.poly.modes.iter().all(|m| m.amp == 0.0)
    }

    /// Tabulated copy for the simulators.
    pub fn table(&self) -> FieldTable {
        FieldTable::new(&self.poly)
    }
}

/// `make_trig_field`: validated constructor.
pub fn make_trig_field(dim: usize, modes: Vec<Mode>, offset: f64) -> Result<PeriodicField> {
    PeriodicField::new(dim, modes, offset)
}

pub fn field_mean(field: &PeriodicField) -> f64 {
    field.mean()
}

pub fn field_extrema(field: &PeriodicField, grid_n: usize) -> Result<(f64, f64)> {
    if grid_n < 64 {
        return Err(Error::InvalidArgument(format!("grid_n = {grid_n} < 64")));
    }
    Ok(field.extrema(grid_n))
}

/// Periodic lookup table with (multi)linear interpolation. Constant fields
/// are answered exactly.
#[derive(Debug, Clone)]
pub struct FieldTable {
    dim: usize,
    n: usize,
    constant: Option<f64>,
    values: Vec<f64>,
}

impl FieldTable {
    pub fn new(poly: &TrigPolynomial) -> Self {
        let dim = poly.dim;
        if poly.modes.iter().all(|m| m.amp == 0.0) {
            return FieldTable { dim, n: 1, constant: Some(poly.offset), values: vec![poly.offset] };
        }
        let n: usize = match dim {
            1 => 8192,
            2 => 512,
            _ => 96,
        };
        let mut values = Vec::with_capacity(n.pow(dim as u32));
        for_each_grid_point(dim, n, |x| values.push(poly.eval(x)));
        FieldTable { dim, n, constant: None, values }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        if let Some(c) = self.constant {
            return c;
        }
        interp_periodic(&self.values, self.n, self.dim, x)
    }
}

/// Linear / bilinear / trilinear interpolation of a periodic table laid out
/// with the first axis fastest.
#[inline]
pub(crate) fn interp_periodic(values: &[f64], n: usize, dim: usize, x: &[f64]) -> f64 {
    let nf = n as f64;
    let mut idx = [0usize; 3];
    let mut frac = [0.0f64; 3];
    for a in 0..dim {
        let s = x[a].rem_euclid(1.0) * nf;
        let i = (s.floor() as usize).min(n - 1);
        idx[a] = i;
        frac[a] = s - i as f64;
    }
    match dim {
        1 => {
            let i0 = idx[0];
            let i1 = if i0 + 1 == n { 0 } else { i0 + 1 };
            values[i0] + frac[0] * (values[i1] - values[i0])
        }
        2 => {
            let (i0, j0) = (idx[0], idx[1]);
            let i1 = if i0 + 1 == n { 0 } else { i0 + 1 };
            let j1 = if j0 + 1 == n { 0 } else { j0 + 1 };
            let v00 = values[i0 + n * j0];
            let v10 = values[i1 + n * j0];
            let v01 = values[i0 + n * j1];
            let v11 = values[i1 + n * j1];
            let a = v00 + frac[0] * (v10 - v00);
            let b = v01 + frac[0] * (v11 - v01);
            a + frac[1] * (b - a)
        }
        _ => {
            let mut acc = 0.0;
            for corner in 0..8usize {
                let mut w = 1.0;
                let mut flat = 0;
                let mut stride = 1;
                for a in 0..3 {
                    let bit = (corner >> a) & 1;
                    let i = if bit == 1 { (idx[a] + 1) % n } else { idx[a] };
                    w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
                    flat += i * stride;
                    stride *= n;
                }
                acc += w * values[flat];
            }
            acc
        }
    }
}
