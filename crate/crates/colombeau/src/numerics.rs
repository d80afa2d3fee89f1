//! Grid representation, quadrature, sup-norms and finite differences that
//! every other module builds on.
//!
//! Functions live on uniform tensor grids over an axis-aligned box in R^s
//! (s = 1, 2, 3). Quadrature is composite Simpson; test functions are smooth
//! and compactly supported, so Simpson converges at order four with no
//! adaptivity.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::fmt;
use std::sync::Arc;

/// Samples per axis used when no explicit resolution is requested.
pub fn default_resolution(dim: usize) -> usize {
    match dim {
        1 => 1024,
        2 => 128,
        _ => 48,
    }
}

/// Minimal admissible samples per axis.
pub const MIN_RESOLUTION: usize = 16;

/// Axis-aligned box in R^s, s in {1,2,3}.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundingBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl BoundingBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::usage("bounding box lo/hi dimension mismatch"));
        }
        if lo.is_empty() || lo.len() > 3 {
            return Err(Error::usage("bounding box dimension must be 1, 2 or 3"));
        }
        for i in 0..lo.len() {
            if !(lo[i] <= hi[i]) {
                return Err(Error::usage(format!(
                    "bounding box requires lo <= hi per axis, got [{}, {}] on axis {}",
                    lo[i], hi[i], i
                )));
            }
        }
        Ok(Self { lo, hi })
    }

    /// Degenerate region consisting of one point (a probe set, not a
    /// support box).
    pub fn point(p: &[f64]) -> Result<Self> {
        Self::new(p.to_vec(), p.to_vec())
    }

    /// Whether every axis has positive extent (required of support boxes
    /// and working domains; probe regions may be degenerate).
    pub fn has_volume(&self) -> bool {
        (0..self.dim()).all(|a| self.lo[a] < self.hi[a])
    }

    /// Centered cube [-r, r]^dim.
    pub fn centered(r: f64, dim: usize) -> Result<Self> {
        if r <= 0.0 {
            return Err(Error::usage("centered box requires r > 0"));
        }
        Self::new(vec![-r; dim], vec![r; dim])
    }

    /// 1D interval.
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo], vec![hi])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn side(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn max_side(&self) -> f64 {
        (0..self.dim()).map(|a| self.side(a)).fold(0.0, f64::max)
    }

    pub fn center(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|a| 0.5 * (self.lo[a] + self.hi[a]))
            .collect()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && (0..self.dim()).all(|a| p[a] >= self.lo[a] && p[a] <= self.hi[a])
    }

    /// Whether `self` scaled by `factor` and shifted by `offset` lies inside
    /// `outer` with clearance at least `margin` (interval arithmetic).
    pub fn scaled_shifted_inside(
        &self,
        factor: f64,
        offset: &[f64],
        outer: &BoundingBox,
        margin: f64,
    ) -> bool {
        if offset.len() != self.dim() || outer.dim() != self.dim() {
            return false;
        }
        (0..self.dim()).all(|a| {
            let lo = factor * self.lo[a] + offset[a];
            let hi = factor * self.hi[a] + offset[a];
            lo >= outer.lo[a] + margin && hi <= outer.hi[a] - margin
        })
    }

    pub fn translated(&self, offset: &[f64]) -> BoundingBox {
        BoundingBox {
            lo: (0..self.dim()).map(|a| self.lo[a] + offset[a]).collect(),
            hi: (0..self.dim()).map(|a| self.hi[a] + offset[a]).collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> BoundingBox {
        BoundingBox {
            lo: self.lo.iter().map(|v| v * factor).collect(),
            hi: self.hi.iter().map(|v| v * factor).collect(),
        }
    }

    /// Smallest box containing both operands.
    pub fn hull(&self, other: &BoundingBox) -> Result<BoundingBox> {
        if self.dim() != other.dim() {
            return Err(Error::usage("bounding box hull: dimension mismatch"));
        }
        BoundingBox::new(
            (0..self.dim()).map(|a| self.lo[a].min(other.lo[a])).collect(),
            (0..self.dim()).map(|a| self.hi[a].max(other.hi[a])).collect(),
        )
    }

    pub fn intersects(&self, other: &BoundingBox) -> bool {
        self.dim() == other.dim()
            && (0..self.dim()).all(|a| self.lo[a] <= other.hi[a] && self.hi[a] >= other.lo[a])
    }

    /// Uniform grid along one axis, `n` nodes including both endpoints.
    pub fn axis_nodes(&self, axis: usize, n: usize) -> Vec<f64> {
        let h = self.side(axis) / (n - 1) as f64;
        (0..n).map(|i| self.lo[axis] + i as f64 * h).collect()
    }
}

impl fmt::Display for BoundingBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in 0..self.dim() {
            if a > 0 {
                write!(f, "x")?;
            }
            write!(f, "[{}, {}]", self.lo[a], self.hi[a])?;
        }
        Ok(())
    }
}

/// Derivative multi-index in N_0^s.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(dim: usize) -> Self {
        MultiIndex(vec![0; dim])
    }

    pub fn unit(dim: usize, axis: usize) -> Self {
        let mut v = vec![0; dim];
        v[axis] = 1;
        MultiIndex(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// |alpha| = sum of entries.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    /// xi^alpha.
    pub fn monomial(&self, p: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(p)
            .map(|(&a, &x)| x.powi(a as i32))
            .product()
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

/// All multi-indices with min_order <= |alpha| <= max_order in graded
/// lexicographic order. The enumeration order is fixed so that dual bases
/// and projections are deterministic.
pub fn multi_indices(dim: usize, min_order: u32, max_order: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    for total in min_order..=max_order {
        let mut stack = vec![(Vec::new(), total)];
        while let Some((prefix, rest)) = stack.pop() {
            if prefix.len() == dim - 1 {
                let mut v = prefix.clone();
                v.push(rest);
                out.push(MultiIndex(v));
                continue;
            }
            // lexicographic within a grade: larger leading entry first
            for lead in (0..=rest).rev() {
                let mut v = prefix.clone();
                v.push(lead);
                stack.push((v, rest - lead));
            }
        }
    }
    // stack traversal reverses lexicographic order within each grade
    let mut sorted = out;
    sorted.sort_by(|a, b| a.order().cmp(&b.order()).then_with(|| b.0.cmp(&a.0)));
    sorted
}

/// Neumaier compensated accumulator; keeps quadrature sums reproducible and
/// accurate to a few ulps regardless of term count.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Composite Simpson weights for n nodes (n-1 intervals) with spacing h.
/// An odd interval count is closed with a 3/8 tail.
pub fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    assert!(n >= 4, "simpson_weights needs at least 4 nodes");
    let m = n - 1;
    let mut w = vec![0.0; n];
    let simpson_end = if m % 2 == 0 { m } else { m - 3 };
    if simpson_end > 0 {
        w[0] += h / 3.0;
        w[simpson_end] += h / 3.0;
        for i in 1..simpson_end {
            w[i] += if i % 2 == 1 { 4.0 * h / 3.0 } else { 2.0 * h / 3.0 };
        }
    }
    if simpson_end < m {
        let c = 3.0 * h / 8.0;
        w[simpson_end] += c;
        w[simpson_end + 1] += 3.0 * c;
        w[simpson_end + 2] += 3.0 * c;
        w[simpson_end + 3] += c;
    }
    w
}

/// Closed-form evaluator attached to a sampled function.
pub type Evaluator = Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>;

/// Compactly supported function on a uniform grid over a box in R^s.
///
/// Translations are tracked as an offset against an immutable base grid, so
/// that composing a translation with its inverse restores the original
/// object bit for bit. When a closed-form evaluator is available it is
/// authoritative; grid values are samples of it.
#[derive(Clone)]
pub struct SampledFunction {
    base_box: BoundingBox,
    shift: Vec<f64>,
    n: usize,
    values: Arc<Vec<Complex64>>,
    analytic: Option<Evaluator>,
}

impl fmt::Debug for SampledFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SampledFunction")
            .field("box", &self.support())
            .field("n", &self.n)
            .field("analytic", &self.analytic.is_some())
            .finish()
    }
}

impl SampledFunction {
    /// Sample a closed-form function on `bbox` and keep the evaluator.
    pub fn from_fn(
        bbox: BoundingBox,
        n: usize,
        f: impl Fn(&[f64]) -> Complex64 + Send + Sync + 'static,
    ) -> Result<Self> {
        Self::check_resolution(n)?;
        Self::check_volume(&bbox)?;
        let analytic: Evaluator = Arc::new(f);
        let values = sample_grid(&bbox, n, |p| analytic(p));
        Ok(Self {
            base_box: bbox,
            shift: vec![0.0; 0],
            n,
            values: Arc::new(values),
            analytic: Some(analytic),
        }
        .with_zero_shift())
    }

    /// Real-valued convenience wrapper around [`SampledFunction::from_fn`].
    pub fn from_real_fn(
        bbox: BoundingBox,
        n: usize,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        Self::from_fn(bbox, n, move |p| Complex64::new(f(p), 0.0))
    }

    /// Wrap raw grid values (no closed form available). Lower accuracy:
    /// off-grid evaluation falls back to multilinear interpolation.
    pub fn from_values(bbox: BoundingBox, n: usize, values: Vec<Complex64>) -> Result<Self> {
        Self::check_resolution(n)?;
        Self::check_volume(&bbox)?;
        let expect = n.pow(bbox.dim() as u32);
        if values.len() != expect {
            return Err(Error::usage(format!(
                "expected {expect} grid values, got {}",
                values.len()
            )));
        }
        Ok(Self {
            base_box: bbox,
            shift: vec![0.0; 0],
            n,
            values: Arc::new(values),
            analytic: None,
        }
        .with_zero_shift())
    }

    fn with_zero_shift(mut self) -> Self {
        self.shift = vec![0.0; self.base_box.dim()];
        self
    }

    fn check_resolution(n: usize) -> Result<()> {
        if n < MIN_RESOLUTION {
            return Err(Error::resolution(format!(
                "grid resolution {n} below minimum {MIN_RESOLUTION}"
            )));
        }
        Ok(())
    }

    fn check_volume(bbox: &BoundingBox) -> Result<()> {
        if !bbox.has_volume() {
            return Err(Error::usage(format!(
                "support box must have positive extent on every axis, got {bbox}"
            )));
        }
        Ok(())
    }

    /// Verify the compact-support invariant: samples on the boundary layer
    /// of the box must vanish (relative to the sup of the samples).
    pub fn check_compact_support(&self, rel_tol: f64) -> Result<()> {
        let sup = self
            .values
            .iter()
            .map(|v| v.norm())
            .fold(0.0_f64, f64::max);
        if sup == 0.0 {
            return Ok(());
        }
        let dim = self.dim();
        let n = self.n;
        for (flat, v) in self.values.iter().enumerate() {
            let idx = unflatten(flat, n, dim);
            if idx.iter().any(|&i| i == 0 || i == n - 1) && v.norm() > rel_tol * sup {
                return Err(Error::usage(format!(
                    "function does not vanish on the support box boundary \
                     (|f| = {:.3e} at a boundary node, sup = {:.3e})",
                    v.norm(),
                    sup
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.base_box.dim()
    }

    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn has_analytic(&self) -> bool {
        self.analytic.is_some()
    }

    /// Current support bounding box (base box plus accumulated shift).
    pub fn support(&self) -> BoundingBox {
        self.base_box.translated(&self.shift)
    }

    /// Evaluate at a point (analytic when available, multilinear otherwise;
    /// zero outside the box).
    pub fn eval(&self, p: &[f64]) -> Complex64 {
        let q: Vec<f64> = p.iter().zip(&self.shift).map(|(x, s)| x - s).collect();
        match &self.analytic {
            Some(f) => f(&q),
            None => self.interpolate(&q),
        }
    }

    fn interpolate(&self, q: &[f64]) -> Complex64 {
        if !self.base_box.contains(q) {
            return Complex64::ZERO;
        }
        let dim = self.dim();
        let n = self.n;
        // per-axis cell index and barycentric weight
        let mut i0 = [0usize; 3];
        let mut t = [0.0f64; 3];
        for a in 0..dim {
            let h = self.base_box.side(a) / (n - 1) as f64;
            let u = (q[a] - self.base_box.lo()[a]) / h;
            let i = (u.floor() as usize).min(n - 2);
            i0[a] = i;
            t[a] = u - i as f64;
        }
        let mut acc = Complex64::ZERO;
        for corner in 0..(1usize << dim) {
            let mut w = 1.0;
            let mut idx = [0usize; 3];
            for a in 0..dim {
                if corner >> a & 1 == 1 {
                    w *= t[a];
                    idx[a] = i0[a] + 1;
                } else {
                    w *= 1.0 - t[a];
                    idx[a] = i0[a];
                }
            }
            acc += w * self.values[flatten(&idx[..dim], n)];
        }
        acc
    }

    /// Quadrature nodes paired with values, in flat row-major order.
    /// Coordinates include the accumulated shift.
    pub fn nodes(&self) -> impl Iterator<Item = (Vec<f64>, Complex64)> + '_ {
        let dim = self.dim();
        let n = self.n;
        (0..self.values.len()).map(move |flat| {
            let idx = unflatten(flat, n, dim);
            let p: Vec<f64> = (0..dim)
                .map(|a| {
                    self.base_box.lo()[a]
                        + idx[a] as f64 * self.base_box.side(a) / (n - 1) as f64
                        + self.shift[a]
                })
                .collect();
            (p, self.values[flat])
        })
    }

    fn weights_1d(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|a| simpson_weights(self.n, self.base_box.side(a) / (self.n - 1) as f64))
            .collect()
    }

    /// Composite-Simpson integral over the support box (tensorized for s > 1).
    pub fn integrate(&self) -> Complex64 {
        let w = self.weights_1d();
        let dim = self.dim();
        let n = self.n;
        let (mut re, mut im) = (CompensatedSum::default(), CompensatedSum::default());
        for (flat, v) in self.values.iter().enumerate() {
            let idx = unflatten(flat, n, dim);
            let weight: f64 = (0..dim).map(|a| w[a][idx[a]]).product();
            re.add(weight * v.re);
            im.add(weight * v.im);
        }
        Complex64::new(re.value(), im.value())
    }

    /// Integral of g(xi) * f(xi) using f's grid; g is evaluated at shifted
    /// node coordinates.
    pub fn integrate_weighted(&self, g: impl Fn(&[f64]) -> f64) -> Complex64 {
        let w = self.weights_1d();
        let dim = self.dim();
        let n = self.n;
        let (mut re, mut im) = (CompensatedSum::default(), CompensatedSum::default());
        for (flat, v) in self.values.iter().enumerate() {
            let idx = unflatten(flat, n, dim);
            let mut weight: f64 = (0..dim).map(|a| w[a][idx[a]]).product();
            let p: Vec<f64> = (0..dim)
                .map(|a| {
                    self.base_box.lo()[a]
                        + idx[a] as f64 * self.base_box.side(a) / (n - 1) as f64
                        + self.shift[a]
                })
                .collect();
            weight *= g(&p);
            re.add(weight * v.re);
            im.add(weight * v.im);
        }
        Complex64::new(re.value(), im.value())
    }

    /// Integral of g(xi) * f(xi) where g is complex-valued.
    pub fn integrate_weighted_complex(&self, g: impl Fn(&[f64]) -> Complex64) -> Complex64 {
        let w = self.weights_1d();
        let dim = self.dim();
        let n = self.n;
        let (mut re, mut im) = (CompensatedSum::default(), CompensatedSum::default());
        for (flat, v) in self.values.iter().enumerate() {
            let idx = unflatten(flat, n, dim);
            let weight: f64 = (0..dim).map(|a| w[a][idx[a]]).product();
            let p: Vec<f64> = (0..dim)
                .map(|a| {
                    self.base_box.lo()[a]
                        + idx[a] as f64 * self.base_box.side(a) / (n - 1) as f64
                        + self.shift[a]
                })
                .collect();
            let term = weight * g(&p) * v;
            re.add(term.re);
            im.add(term.im);
        }
        Complex64::new(re.value(), im.value())
    }

    /// Max of |values| over grid nodes lying in `region`. The flag reports
    /// whether the region intersected the support box at all.
    pub fn sup_norm_over(&self, region: &BoundingBox) -> SupNorm {
        if !self.support().intersects(region) {
            return SupNorm {
                value: 0.0,
                intersected: false,
            };
        }
        let dim = self.dim();
        let n = self.n;
        let mut best = 0.0f64;
        for (flat, v) in self.values.iter().enumerate() {
            let idx = unflatten(flat, n, dim);
            let p: Vec<f64> = (0..dim)
                .map(|a| {
                    self.base_box.lo()[a]
                        + idx[a] as f64 * self.base_box.side(a) / (n - 1) as f64
                        + self.shift[a]
                })
                .collect();
            if region.contains(&p) {
                best = best.max(v.norm());
            }
        }
        SupNorm {
            value: best,
            intersected: true,
        }
    }

    /// Max of |values| over the whole support box.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// S_eps: phi -> eps^{-s} phi(. / eps). Values are rescaled in place
    /// (grid nodes map exactly onto the scaled grid), the evaluator is
    /// composed, nothing is resampled.
    pub fn scale(&self, eps: f64) -> Result<SampledFunction> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::usage(format!("scale requires eps > 0, got {eps}")));
        }
        let dim = self.dim();
        let factor = eps.powi(-(dim as i32));
        let values: Vec<Complex64> = self.values.iter().map(|v| v * factor).collect();
        let analytic = self.analytic.clone().map(|f| -> Evaluator {
            Arc::new(move |p: &[f64]| {
                let q: Vec<f64> = p.iter().map(|x| x / eps).collect();
                factor * f(&q)
            })
        });
        Ok(SampledFunction {
            base_box: self.base_box.scaled(eps),
            shift: self.shift.iter().map(|s| s * eps).collect(),
            n: self.n,
            values: Arc::new(values),
            analytic,
        })
    }

    /// T_x: phi -> phi(. - x). Offsets accumulate, so translating by x and
    /// then by -x restores the original object exactly.
    pub fn translate(&self, x: &[f64]) -> Result<SampledFunction> {
        if x.len() != self.dim() {
            return Err(Error::usage("translate: dimension mismatch"));
        }
        let mut out = self.clone();
        for (s, dx) in out.shift.iter_mut().zip(x) {
            *s += dx;
        }
        Ok(out)
    }

    /// Pointwise linear combination a*self + b*other. Operands on the same
    /// grid combine exactly; otherwise both are resampled on the hull box.
    pub fn linear_combination(
        &self,
        a: Complex64,
        other: &SampledFunction,
        b: Complex64,
    ) -> Result<SampledFunction> {
        if self.dim() != other.dim() {
            return Err(Error::usage("linear_combination: dimension mismatch"));
        }
        let same_grid = self.base_box == other.base_box
            && self.shift == other.shift
            && self.n == other.n;
        if same_grid {
            let values: Vec<Complex64> = self
                .values
                .iter()
                .zip(other.values.iter())
                .map(|(u, v)| a * u + b * v)
                .collect();
            let analytic = match (&self.analytic, &other.analytic) {
                (Some(f), Some(g)) => {
                    let (f, g) = (f.clone(), g.clone());
                    Some(Arc::new(move |p: &[f64]| a * f(p) + b * g(p)) as Evaluator)
                }
                _ => None,
            };
            return Ok(SampledFunction {
                base_box: self.base_box.clone(),
                shift: self.shift.clone(),
                n: self.n,
                values: Arc::new(values),
                analytic,
            });
        }
        let hull = self.support().hull(&other.support())?;
        let n = self.n.max(other.n);
        let (lhs, rhs) = (self.clone(), other.clone());
        match (&self.analytic, &other.analytic) {
            (Some(_), Some(_)) => SampledFunction::from_fn(hull, n, move |p| {
                a * lhs.eval(p) + b * rhs.eval(p)
            }),
            _ => {
                let values = sample_grid(&hull, n, |p| a * lhs.eval(p) + b * rhs.eval(p));
                SampledFunction::from_values(hull, n, values)
            }
        }
    }

    pub fn add(&self, other: &SampledFunction) -> Result<SampledFunction> {
        self.linear_combination(Complex64::ONE, other, Complex64::ONE)
    }

    pub fn scalar_mul(&self, c: Complex64) -> SampledFunction {
        let values: Vec<Complex64> = self.values.iter().map(|v| c * v).collect();
        let analytic = self.analytic.clone().map(|f| -> Evaluator {
            Arc::new(move |p: &[f64]| c * f(p))
        });
        SampledFunction {
            base_box: self.base_box.clone(),
            shift: self.shift.clone(),
            n: self.n,
            values: Arc::new(values),
            analytic,
        }
    }

    /// Partial derivative in the xi variable as a new sampled function
    /// (Richardson-extrapolated central differences on the evaluator; the
    /// step follows the support scale).
    pub fn derivative(&self, alpha: &MultiIndex) -> Result<SampledFunction> {
        if alpha.dim() != self.dim() {
            return Err(Error::usage("derivative: multi-index dimension mismatch"));
        }
        let h = self.support().max_side() / 256.0;
        let me = self.clone();
        let alpha = alpha.clone();
        let bbox = self.support();
        let n = self.n;
        SampledFunction::from_fn(bbox, n, move |p| {
            fd_derivative(|q| Ok(me.eval(q)), p, &alpha, h).unwrap_or(Complex64::ZERO)
        })
    }

    /// CSV export: one row per node, columns are node coordinates then the
    /// real and imaginary parts of the value.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let dim = self.dim();
        for a in 0..dim {
            out.push_str(&format!("x{a},"));
        }
        out.push_str("re,im\n");
        for (p, v) in self.nodes() {
            for c in &p {
                out.push_str(&format!("{c},"));
            }
            out.push_str(&format!("{},{}\n", v.re, v.im));
        }
        out
    }
}

/// Moment integral of f against the monomial xi^alpha.
pub fn moment(f: &SampledFunction, alpha: &MultiIndex) -> Complex64 {
    f.integrate_weighted(|p| alpha.monomial(p))
}

/// Result of a sup-norm query over a region.
#[derive(Debug, Clone, Copy)]
pub struct SupNorm {
    pub value: f64,
    /// False when the region did not meet the support box (value is 0).
    pub intersected: bool,
}

fn sample_grid(bbox: &BoundingBox, n: usize, f: impl Fn(&[f64]) -> Complex64) -> Vec<Complex64> {
    let dim = bbox.dim();
    let total = n.pow(dim as u32);
    let mut values = Vec::with_capacity(total);
    for flat in 0..total {
        let idx = unflatten(flat, n, dim);
        let p: Vec<f64> = (0..dim)
            .map(|a| bbox.lo()[a] + idx[a] as f64 * bbox.side(a) / (n - 1) as f64)
            .collect();
        values.push(f(&p));
    }
    values
}

fn flatten(idx: &[usize], n: usize) -> usize {
    idx.iter().fold(0, |acc, &i| acc * n + i)
}

fn unflatten(mut flat: usize, n: usize, dim: usize) -> Vec<usize> {
    let mut idx = vec![0usize; dim];
    for a in (0..dim).rev() {
        idx[a] = flat % n;
        flat /= n;
    }
    idx
}

/// Central finite difference for the partial derivative of multi-index
/// `alpha` at `point`, Richardson-extrapolated from steps h and h/2 (order
/// four overall).
pub fn fd_derivative(
    f: impl Fn(&[f64]) -> Result<Complex64>,
    point: &[f64],
    alpha: &MultiIndex,
    h: f64,
) -> Result<Complex64> {
    if !(h > 0.0) {
        return Err(Error::usage("fd_derivative requires h > 0"));
    }
    if alpha.dim() != point.len() {
        return Err(Error::usage("fd_derivative: multi-index dimension mismatch"));
    }
    if alpha.order() == 0 {
        return f(point);
    }
    let coarse = fd_stencil(&f, point, &alpha.0, h)?;
    let fine = fd_stencil(&f, point, &alpha.0, h / 2.0)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

fn fd_stencil(
    f: &impl Fn(&[f64]) -> Result<Complex64>,
    point: &[f64],
    alpha: &[u32],
    h: f64,
) -> Result<Complex64> {
    if let Some(axis) = alpha.iter().position(|&a| a > 0) {
        let mut reduced = alpha.to_vec();
        reduced[axis] -= 1;
        let mut plus = point.to_vec();
        plus[axis] += h;
        let mut minus = point.to_vec();
        minus[axis] -= h;
        let fp = fd_stencil(f, &plus, &reduced, h)?;
        let fm = fd_stencil(f, &minus, &reduced, h)?;
        Ok((fp - fm) / (2.0 * h))
    } else {
        f(point)
    }
}
