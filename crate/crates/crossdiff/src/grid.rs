//! Uniform periodic grids on the unit torus T^N (N = 1 or 2) and the discrete
//! calculus the scheme is built on.
//!
//! Cell-centered fields, forward-difference gradients living on edges, and
//! backward-difference divergences form an exact summation-by-parts pair:
//!
//!   <gradient(f), F>_edges = -<f, divergence(F)>_cells
//!
//! so discrete integration by parts — and with it mass conservation and the
//! entropy balance — holds up to floating-point roundoff, not up to O(h).
//!
//! Mollification is periodic stencil convolution with a sampled, renormalized
//! kernel. Convolution commutes with the difference operators (both are
//! translation-invariant) and is self-adjoint for the symmetric profiles here;
//! the scheme relies on both identities.

use thiserror::Error;

/// Machine-checked failures of grid-level preconditions.
#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("grid dimension must be 1 or 2, got {0}")]
    BadDimension(usize),
    #[error("grid needs at least 4 points per dimension, got {0}")]
    TooCoarse(usize),
    #[error("field length {got} does not match grid cell count {want}")]
    LengthMismatch { got: usize, want: usize },
    #[error("operands live on different grids")]
    GridMismatch,
    #[error("non-finite value at cell {0}")]
    NonFinite(usize),
    #[error("mollifier width eta must be positive, got {0}")]
    NonPositiveEta(f64),
    #[error("mollifier width eta = {0} must be < 1/2 so the stencil fits in a half-period")]
    EtaTooWide(f64),
}

/// Mollifier profiles. Both are even, nonnegative, supported on [-eta, eta].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MollifierProfile {
    /// rho(x) proportional to 1 + cos(pi x / eta). Smooth at the support edge.
    CosineBump,
    /// rho(x) proportional to 1 - |x| / eta.
    Triangle,
}

/// A uniform n^dim grid of cell centers on the unit torus; h = 1/n.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    dim: usize,
    n: usize,
}

impl GridSpec {
    pub fn new(dim: usize, n: usize) -> Result<Self, GridError> {
        if dim != 1 && dim != 2 {
            return Err(GridError::BadDimension(dim));
        }
        if n < 4 {
            return Err(GridError::TooCoarse(n));
        }
        Ok(GridSpec { dim, n })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Points per dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Mesh width h = 1/n.
    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Total cell count n^dim.
    pub fn cells(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    /// Volume element h^dim.
    pub fn cell_volume(&self) -> f64 {
        self.h().powi(self.dim as i32)
    }

    /// Coordinates of the center of a cell (row-major flat index).
    pub fn cell_center(&self, idx: usize) -> Vec<f64> {
        let h = self.h();
        match self.dim {
            1 => vec![(idx as f64 + 0.5) * h],
            _ => vec![
                ((idx / self.n) as f64 + 0.5) * h,
                ((idx % self.n) as f64 + 0.5) * h,
            ],
        }
    }
}

/// A scalar field of cell values in row-major periodic index order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    /// Wraps values after checking length and finiteness (no NaN/Inf enters the calculus).
    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.cells() {
            return Err(GridError::LengthMismatch {
                got: values.len(),
                want: grid.cells(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite(i));
        }
        Ok(ScalarField { grid, values })
    }

    /// Hot-path constructor for solver internals: skips the finiteness scan
    /// (the callers validate at the boundaries instead). Panics on a length
    /// mismatch, which would be a programming error, not bad input.
    pub(crate) fn from_values_unchecked(grid: GridSpec, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.cells());
        ScalarField { grid, values }
    }

    pub fn constant(grid: GridSpec, c: f64) -> Result<Self, GridError> {
        Self::from_values(grid, vec![c; grid.cells()])
    }

    /// Samples `f` at cell centers.
    pub fn from_fn(grid: GridSpec, f: impl Fn(&[f64]) -> f64) -> Result<Self, GridError> {
        let values = (0..grid.cells()).map(|i| f(&grid.cell_center(i))).collect();
        Self::from_values(grid, values)
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// A vector field with one component per dimension, component k stored on the
/// edges (x, x + h e_k); same row-major layout as the cells they emanate from.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeField {
    grid: GridSpec,
    components: Vec<Vec<f64>>,
}

impl EdgeField {
    pub fn zeros(grid: GridSpec) -> Self {
        EdgeField {
            grid,
            components: vec![vec![0.0; grid.cells()]; grid.dim()],
        }
    }

    pub fn from_components(grid: GridSpec, components: Vec<Vec<f64>>) -> Result<Self, GridError> {
        if components.len() != grid.dim() {
            return Err(GridError::BadDimension(components.len()));
        }
        for c in &components {
            if c.len() != grid.cells() {
                return Err(GridError::LengthMismatch {
                    got: c.len(),
                    want: grid.cells(),
                });
            }
            if let Some(i) = c.iter().position(|v| !v.is_finite()) {
                return Err(GridError::NonFinite(i));
            }
        }
        Ok(EdgeField { grid, components })
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn component(&self, k: usize) -> &[f64] {
        &self.components[k]
    }

    pub fn component_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.components[k]
    }
}

/// Flat index of the cell one step along axis `k` from cell `idx` (periodic).
#[inline]
pub(crate) fn shift_up(grid: GridSpec, idx: usize, k: usize) -> usize {
    let n = grid.n();
    if grid.dim() == 1 {
        let i = idx + 1;
        if i == n { 0 } else { i }
    } else if k == 0 {
        let row = idx / n;
        let col = idx % n;
        let row = if row + 1 == n { 0 } else { row + 1 };
        row * n + col
    } else {
        let row = idx / n;
        let col = idx % n;
        let col = if col + 1 == n { 0 } else { col + 1 };
        row * n + col
    }
}

/// Flat index of the cell one step back along axis `k` (periodic).
#[inline]
pub(crate) fn shift_down(grid: GridSpec, idx: usize, k: usize) -> usize {
    let n = grid.n();
    if grid.dim() == 1 {
        if idx == 0 { n - 1 } else { idx - 1 }
    } else if k == 0 {
        let row = idx / n;
        let col = idx % n;
        let row = if row == 0 { n - 1 } else { row - 1 };
        row * n + col
    } else {
        let row = idx / n;
        let col = idx % n;
        let col = if col == 0 { n - 1 } else { col - 1 };
        row * n + col
    }
}

/// Forward-difference gradient: component k on edge (x, x+e_k) is
/// (f(x+e_k) - f(x))/h.
pub fn gradient(f: &ScalarField) -> EdgeField {
    let grid = f.grid();
    let h_inv = grid.n() as f64;
    let v = f.values();
    let mut out = EdgeField::zeros(grid);
    for k in 0..grid.dim() {
        let comp = out.component_mut(k);
        for idx in 0..grid.cells() {
            comp[idx] = (v[shift_up(grid, idx, k)] - v[idx]) * h_inv;
        }
    }
    out
}

/// Backward-difference divergence, the exact negative adjoint of [`gradient`]
/// under the h^N-weighted inner products.
pub fn divergence(field: &EdgeField) -> ScalarField {
    let grid = field.grid();
    let h_inv = grid.n() as f64;
    let mut values = vec![0.0; grid.cells()];
    for k in 0..grid.dim() {
        let comp = field.component(k);
        for idx in 0..grid.cells() {
            values[idx] += (comp[idx] - comp[shift_down(grid, idx, k)]) * h_inv;
        }
    }
    ScalarField {
        grid,
        values,
    }
}

/// h^N-weighted integral over the torus, summed in fixed index order.
pub fn integrate(f: &ScalarField) -> f64 {
    let mut s = 0.0;
    for v in f.values() {
        s += v;
    }
    s * f.grid().cell_volume()
}

/// L2(T^N) inner product h^N sum f*g. Errors on grid mismatch.
pub fn inner_product(f: &ScalarField, g: &ScalarField) -> Result<f64, GridError> {
    if f.grid() != g.grid() {
        return Err(GridError::GridMismatch);
    }
    let mut s = 0.0;
    for (a, b) in f.values().iter().zip(g.values()) {
        s += a * b;
    }
    Ok(s * f.grid().cell_volume())
}

/// Edge-field inner product: h^N sum over all edges of all components.
pub fn edge_inner_product(f: &EdgeField, g: &EdgeField) -> Result<f64, GridError> {
    if f.grid() != g.grid() {
        return Err(GridError::GridMismatch);
    }
    let mut s = 0.0;
    for k in 0..f.grid().dim() {
        for (a, b) in f.component(k).iter().zip(g.component(k)) {
            s += a * b;
        }
    }
    Ok(s * f.grid().cell_volume())
}

/// Squared L2 norm of a scalar field.
pub fn l2_norm_sq(f: &ScalarField) -> f64 {
    let mut s = 0.0;
    for v in f.values() {
        s += v * v;
    }
    s * f.grid().cell_volume()
}

/// Squared L2 norm of an edge field (all components).
pub fn edge_l2_norm_sq(f: &EdgeField) -> f64 {
    let mut s = 0.0;
    for k in 0..f.grid().dim() {
        for v in f.component(k) {
            s += v * v;
        }
    }
    s * f.grid().cell_volume()
}

/// A sampled, renormalized mollifier rho_eta on a periodic stencil.
///
/// The N-dimensional kernel is the tensor product of one 1D stencil per axis,
/// so convolution is applied as `dim` separable passes. `weights` holds the 1D
/// stencil for offsets -radius..=radius, normalized so h * sum(weights) = 1
/// (hence the full kernel has unit discrete mass in every dimension).
#[derive(Debug, Clone, PartialEq)]
pub struct MollifierKernel {
    grid: GridSpec,
    eta: f64,
    profile: MollifierProfile,
    radius: usize,
    weights: Vec<f64>,
    grad_l1: f64,
    c0_discrete: f64,
    degenerate_delta: bool,
}

impl MollifierKernel {
    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// 1D stencil weights for offsets -radius..=radius.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Discrete L1 norm of the kernel's gradient, summed over all edge
    /// components: the exact constant in the discrete Young inequality
    /// |grad(w * f)|_2 <= grad_l1 * |f|_2. Scales like C0/eta.
    pub fn grad_l1(&self) -> f64 {
        self.grad_l1
    }

    /// eta * grad_l1: the eta-independent discrete analog of the continuum
    /// constant C0 = |grad rho|_L1 of the unscaled profile (2 per axis for
    /// both built-in profiles as h -> 0).
    pub fn c0_discrete(&self) -> f64 {
        self.c0_discrete
    }

    /// True when eta <= h collapsed the stencil to the identity (delta) kernel.
    pub fn is_degenerate_delta(&self) -> bool {
        self.degenerate_delta
    }
}

/// Samples the profile at cell offsets, renormalizes to unit discrete mass,
/// and records the gradient-L1 constants used by the time-step bound.
///
/// Fails for eta <= 0 and for eta >= 1/2 (stencil would wrap past the
/// half-period). For eta <= h the stencil degenerates to the delta kernel;
/// the kernel is flagged rather than rejected.
pub fn build_mollifier(
    grid: GridSpec,
    eta: f64,
    profile: MollifierProfile,
) -> Result<MollifierKernel, GridError> {
    if !(eta > 0.0) {
        return Err(GridError::NonPositiveEta(eta));
    }
    if eta >= 0.5 {
        return Err(GridError::EtaTooWide(eta));
    }
    let h = grid.h();
    // Largest offset strictly inside the support |x| < eta.
    let radius = ((eta / h).ceil() as usize).saturating_sub(1).min(grid.n() / 2 - 1);
    let mut raw = Vec::with_capacity(2 * radius + 1);
    for j in -(radius as i64)..=(radius as i64) {
        let t = (j as f64) * h / eta; // in (-1, 1)
        let w = match profile {
            MollifierProfile::CosineBump => 1.0 + (std::f64::consts::PI * t).cos(),
            MollifierProfile::Triangle => 1.0 - t.abs(),
        };
        raw.push(w);
    }
    let mass: f64 = raw.iter().sum::<f64>() * h;
    let weights: Vec<f64> = raw.iter().map(|w| w / mass).collect();

    // 1D gradient L1 norm of the stencil embedded in the grid: forward divided
    // differences against the zero padding on both ends, volume element h.
    let mut g1 = 0.0;
    let mut prev = 0.0;
    for &w in &weights {
        g1 += (w - prev).abs();
        prev = w;
    }
    g1 += prev.abs();
    // Each tensor-product axis contributes g1 (the other axes integrate to 1).
    let grad_l1 = g1 * grid.dim() as f64;

    Ok(MollifierKernel {
        grid,
        eta,
        profile,
        radius,
        weights,
        grad_l1,
        c0_discrete: eta * grad_l1,
        degenerate_delta: radius == 0,
    })
}

fn convolve_axis(grid: GridSpec, kernel: &MollifierKernel, axis: usize, v: &[f64]) -> Vec<f64> {
    let n = grid.n();
    let h = grid.h();
    let r = kernel.radius as i64;
    let mut out = vec![0.0; v.len()];
    let stride_rows = grid.dim() == 2 && axis == 0;
    for idx in 0..v.len() {
        let (fixed, moving) = if grid.dim() == 1 {
            (0usize, idx)
        } else if stride_rows {
            (idx % n, idx / n)
        } else {
            (idx / n, idx % n)
        };
        let mut s = 0.0;
        for (wi, j) in (-r..=r).enumerate() {
            let m = (moving as i64 - j).rem_euclid(n as i64) as usize;
            let src = if grid.dim() == 1 {
                m
            } else if stride_rows {
                m * n + fixed
            } else {
                fixed * n + m
            };
            s += kernel.weights[wi] * v[src];
        }
        out[idx] = s * h;
    }
    out
}

/// Periodic convolution rho_eta * f as `dim` separable stencil passes.
/// Preserves total mass exactly and never fails once the kernel was built for
/// this grid; applying a kernel to a foreign grid is an error.
pub fn convolve(kernel: &MollifierKernel, f: &ScalarField) -> Result<ScalarField, GridError> {
    if kernel.grid != f.grid() {
        return Err(GridError::GridMismatch);
    }
    let grid = f.grid();
    let mut v = f.values().to_vec();
    for axis in 0..grid.dim() {
        v = convolve_axis(grid, kernel, axis, &v);
    }
    Ok(ScalarField { grid, values: v })
}

/// Restriction onto a grid coarsened by an integer `factor` per axis: each
/// coarse cell takes the average of the factor^dim fine cells it covers.
/// Averaging preserves the integral exactly, which keeps mass comparisons
/// between refinement levels honest.
pub fn restrict(f: &ScalarField, factor: usize) -> Result<ScalarField, GridError> {
    let fine = f.grid();
    if factor == 0 || !fine.n().is_multiple_of(factor) {
        return Err(GridError::LengthMismatch { got: factor, want: fine.n() });
    }
    let coarse = GridSpec::new(fine.dim(), fine.n() / factor)?;
    let nf = fine.n();
    let nc = coarse.n();
    let mut values = vec![0.0; coarse.cells()];
    let block = (factor * factor) as f64;
    match fine.dim() {
        1 => {
            for (c, v) in values.iter_mut().enumerate() {
                let mut s = 0.0;
                for a in 0..factor {
                    s += f.values()[c * factor + a];
                }
                *v = s / factor as f64;
            }
        }
        _ => {
            for cr in 0..nc {
                for cc in 0..nc {
                    let mut s = 0.0;
                    for a in 0..factor {
                        for b in 0..factor {
                            s += f.values()[(cr * factor + a) * nf + (cc * factor + b)];
                        }
                    }
                    values[cr * nc + cc] = s / block;
                }
            }
        }
    }
    Ok(ScalarField { grid: coarse, values })
}

/// Convolves each component of an edge field with the same kernel.
/// Because both operations are translation-invariant,
/// gradient(convolve(f)) == convolve_edge(gradient(f)) up to roundoff.
pub fn convolve_edge(kernel: &MollifierKernel, f: &EdgeField) -> Result<EdgeField, GridError> {
    if kernel.grid != f.grid() {
        return Err(GridError::GridMismatch);
    }
    let grid = f.grid();
    let mut components = Vec::with_capacity(grid.dim());
    for k in 0..grid.dim() {
        let mut v = f.component(k).to_vec();
        for axis in 0..grid.dim() {
            v = convolve_axis(grid, kernel, axis, &v);
        }
        components.push(v);
    }
    Ok(EdgeField { grid, components })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid1(n: usize) -> GridSpec {
        GridSpec::new(1, n).unwrap()
    }

    fn grid2(n: usize) -> GridSpec {
        GridSpec::new(2, n).unwrap()
    }

    #[test]
    fn grid_rejects_bad_shapes() {
        assert_eq!(GridSpec::new(3, 8), Err(GridError::BadDimension(3)));
        assert_eq!(GridSpec::new(1, 3), Err(GridError::TooCoarse(3)));
        assert_eq!(GridSpec::new(0, 8), Err(GridError::BadDimension(0)));
    }

    #[test]
    fn field_rejects_nan_and_wrong_length() {
        let g = grid1(4);
        assert!(matches!(
            ScalarField::from_values(g, vec![0.0; 5]),
            Err(GridError::LengthMismatch { got: 5, want: 4 })
        ));
        assert_eq!(
            ScalarField::from_values(g, vec![0.0, f64::NAN, 0.0, 0.0]),
            Err(GridError::NonFinite(1))
        );
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        for g in [grid1(8), grid2(6)] {
            let f = ScalarField::constant(g, 3.25).unwrap();
            let df = gradient(&f);
            for k in 0..g.dim() {
                assert!(df.component(k).iter().all(|&v| v == 0.0));
            }
        }
    }

    #[test]
    fn gradient_forward_stencil_1d() {
        // n=4, h=1/4, f=[0,1,0,0]: edge k from cell i holds (f[i+1]-f[i])*4.
        let g = grid1(4);
        let f = ScalarField::from_values(g, vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(gradient(&f).component(0), &[4.0, -4.0, 0.0, 0.0]);
    }

    #[test]
    fn divergence_of_constant_field_vanishes() {
        let g = grid2(5);
        let mut f = EdgeField::zeros(g);
        f.component_mut(0).fill(2.0);
        f.component_mut(1).fill(-1.0);
        let div = divergence(&f);
        assert!(div.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn integrate_matches_hand_sum() {
        // n=4, h=1/4: integral of [1,2,3,4] is (1+2+3+4)/4 = 2.5.
        let g = grid1(4);
        let f = ScalarField::from_values(g, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(integrate(&f), 2.5);
        let ones = ScalarField::constant(grid2(7), 1.0).unwrap();
        assert!((integrate(&ones) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn inner_product_requires_matching_grids() {
        let f = ScalarField::constant(grid1(4), 1.0).unwrap();
        let g = ScalarField::constant(grid1(8), 1.0).unwrap();
        assert_eq!(inner_product(&f, &g), Err(GridError::GridMismatch));
    }

    /// Deterministic pseudo-random field from a tiny splitmix step; the grid
    /// module must not depend on the rng module, so inline the mixer.
    fn noise(grid: GridSpec, seed: u64) -> ScalarField {
        let mut state = seed;
        let mut next = move || {
            state = state.wrapping_add(0x9E3779B97F4A7C15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
            z = z ^ (z >> 31);
            (z >> 11) as f64 / (1u64 << 53) as f64
        };
        let values = (0..grid.cells()).map(|_| next() * 2.0 - 1.0).collect();
        ScalarField::from_values(grid, values).unwrap()
    }

    fn noise_edges(grid: GridSpec, seed: u64) -> EdgeField {
        let mut components = Vec::new();
        for k in 0..grid.dim() {
            components.push(noise(grid, seed ^ ((k as u64) << 32)).values().to_vec());
        }
        EdgeField::from_components(grid, components).unwrap()
    }

    #[test]
    fn summation_by_parts_is_exact() {
        for (g, seed) in [(grid1(16), 1u64), (grid2(8), 2), (grid2(12), 3)] {
            let f = noise(g, seed);
            let ff = noise_edges(g, seed.wrapping_mul(77));
            let lhs = edge_inner_product(&gradient(&f), &ff).unwrap();
            let rhs = -inner_product(&f, &divergence(&ff)).unwrap();
            let scale = lhs.abs().max(rhs.abs()).max(1e-30);
            assert!(
                (lhs - rhs).abs() <= 1e-13 * scale,
                "SBP violated: {lhs} vs {rhs}"
            );
        }
    }

    proptest! {
        #[test]
        fn prop_summation_by_parts(dim in 1usize..=2, n in 4usize..=12, seed in any::<u64>()) {
            let g = GridSpec::new(dim, n).unwrap();
            let f = noise(g, seed);
            let ff = noise_edges(g, seed ^ 0xABCD);
            let lhs = edge_inner_product(&gradient(&f), &ff).unwrap();
            let rhs = -inner_product(&f, &divergence(&ff)).unwrap();
            // Roundoff scales with the summand magnitudes (Cauchy-Schwarz),
            // not with the possibly-cancelling inner product value.
            let scale = (edge_l2_norm_sq(&gradient(&f)) * edge_l2_norm_sq(&ff))
                .sqrt()
                .max(1e-30);
            prop_assert!((lhs - rhs).abs() <= 1e-13 * scale);
        }

        #[test]
        fn prop_convolution_preserves_mass(dim in 1usize..=2, n in 6usize..=12, seed in any::<u64>()) {
            let g = GridSpec::new(dim, n).unwrap();
            let k = build_mollifier(g, 0.2, MollifierProfile::CosineBump).unwrap();
            let f = noise(g, seed);
            let before = integrate(&f);
            let after = integrate(&convolve(&k, &f).unwrap());
            prop_assert!((before - after).abs() <= 1e-13 * before.abs().max(1.0));
        }

        #[test]
        fn prop_convolution_self_adjoint(dim in 1usize..=2, n in 6usize..=12, seed in any::<u64>()) {
            let g = GridSpec::new(dim, n).unwrap();
            let k = build_mollifier(g, 0.17, MollifierProfile::Triangle).unwrap();
            let f = noise(g, seed);
            let w = noise(g, seed ^ 0x5555);
            let lhs = inner_product(&convolve(&k, &f).unwrap(), &w).unwrap();
            let rhs = inner_product(&f, &convolve(&k, &w).unwrap()).unwrap();
            // The products can cancel to near zero, so the roundoff scale is
            // the Cauchy-Schwarz bound, not the result magnitude.
            let scale = (l2_norm_sq(&f) * l2_norm_sq(&w)).sqrt().max(1e-30);
            prop_assert!((lhs - rhs).abs() <= 1e-13 * scale);
        }
    }

    #[test]
    fn convolution_commutes_with_gradient() {
        for g in [grid1(32), grid2(10)] {
            let k = build_mollifier(g, 0.15, MollifierProfile::CosineBump).unwrap();
            let f = noise(g, 99);
            let a = gradient(&convolve(&k, &f).unwrap());
            let b = convolve_edge(&k, &gradient(&f)).unwrap();
            for comp in 0..g.dim() {
                for (x, y) in a.component(comp).iter().zip(b.component(comp)) {
                    assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn smoothing_contracts_gradients() {
        for g in [grid1(24), grid2(12)] {
            let k = build_mollifier(g, 0.18, MollifierProfile::CosineBump).unwrap();
            let f = noise(g, 7);
            let before = edge_l2_norm_sq(&gradient(&f));
            let after = edge_l2_norm_sq(&gradient(&convolve(&k, &f).unwrap()));
            assert!(after <= before * (1.0 + 1e-12), "{after} > {before}");
        }
    }

    #[test]
    fn mollifier_has_unit_mass() {
        for g in [grid1(64), grid2(16)] {
            for profile in [MollifierProfile::CosineBump, MollifierProfile::Triangle] {
                let k = build_mollifier(g, 0.1, profile).unwrap();
                let mass: f64 = k.weights().iter().sum::<f64>() * g.h();
                assert!((mass - 1.0).abs() < 1e-14);
                // Constants are fixed points of the convolution.
                let c = ScalarField::constant(g, 2.5).unwrap();
                let cc = convolve(&k, &c).unwrap();
                for v in cc.values() {
                    assert!((v - 2.5).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn mollifier_rejects_bad_eta() {
        let g = grid1(16);
        assert_eq!(
            build_mollifier(g, 0.0, MollifierProfile::CosineBump),
            Err(GridError::NonPositiveEta(0.0))
        );
        assert_eq!(
            build_mollifier(g, 0.5, MollifierProfile::CosineBump),
            Err(GridError::EtaTooWide(0.5))
        );
    }

    #[test]
    fn tiny_eta_degenerates_to_delta_kernel() {
        let g = grid1(16); // h = 1/16
        let k = build_mollifier(g, 0.03, MollifierProfile::CosineBump).unwrap();
        assert!(k.is_degenerate_delta());
        assert_eq!(k.radius(), 0);
        // Single-cell stencil: weight 1/h, so convolution is the identity.
        assert!((k.weights()[0] - 16.0).abs() < 1e-12);
        let f = noise(g, 5);
        let cf = convolve(&k, &f).unwrap();
        for (a, b) in f.values().iter().zip(cf.values()) {
            assert!((a - b).abs() < 1e-14);
        }
        // c0 = eta * grad_l1 with grad_l1 = 2/h for the delta stencil.
        assert!((k.grad_l1() - 32.0).abs() < 1e-12);
        assert!((k.c0_discrete() - 0.03 * 32.0).abs() < 1e-12);
    }

    #[test]
    fn c0_discrete_matches_independent_sum_and_golden() {
        // Oracle: recompute grad_l1 for the 1D n=64, eta=0.1 cosine kernel by
        // sampling the profile directly, independent of build_mollifier's loop.
        let g = grid1(64);
        let h = g.h();
        let eta = 0.1;
        let r = 6usize; // ceil(0.1/0.015625) - 1 = 7 - 1
        let raw: Vec<f64> = (-(r as i64)..=(r as i64))
            .map(|j| 1.0 + (std::f64::consts::PI * j as f64 * h / eta).cos())
            .collect();
        let mass: f64 = raw.iter().sum::<f64>() * h;
        let w: Vec<f64> = raw.iter().map(|x| x / mass).collect();
        let mut padded = vec![0.0];
        padded.extend_from_slice(&w);
        padded.push(0.0);
        let grad_l1_oracle: f64 = padded.windows(2).map(|p| (p[1] - p[0]).abs()).sum();

        let k = build_mollifier(g, eta, MollifierProfile::CosineBump).unwrap();
        assert_eq!(k.radius(), r);
        assert!((k.grad_l1() - grad_l1_oracle).abs() < 1e-12 * grad_l1_oracle);
        // Frozen from the oracle run; the discrete analog of C0 = 2 per axis.
        assert!(
            (k.c0_discrete() - 2.0003033361349094).abs() < 1e-12,
            "c0 = {}",
            k.c0_discrete()
        );
    }

    #[test]
    fn convolve_rejects_foreign_grid() {
        let k = build_mollifier(grid1(16), 0.1, MollifierProfile::CosineBump).unwrap();
        let f = ScalarField::constant(grid1(32), 1.0).unwrap();
        assert_eq!(convolve(&k, &f), Err(GridError::GridMismatch));
    }

    #[test]
    fn cell_centers_are_offset_midpoints() {
        let g = grid2(4);
        assert_eq!(g.cell_center(0), vec![0.125, 0.125]);
        assert_eq!(g.cell_center(5), vec![0.375, 0.375]);
        assert_eq!(g.cell_center(7), vec![0.375, 0.875]);
    }

    #[test]
    fn restriction_averages_blocks_and_preserves_mass() {
        // 1D: pairwise means.
        let f = ScalarField::from_values(grid1(8), vec![1.0, 3.0, 5.0, 7.0, 2.0, 4.0, 0.0, 8.0])
            .unwrap();
        let c = restrict(&f, 2).unwrap();
        assert_eq!(c.grid().n(), 4);
        assert_eq!(c.values(), &[2.0, 6.0, 3.0, 4.0]);
        assert!((integrate(&f) - integrate(&c)).abs() < 1e-15);

        // 2D: 2x2 block means, integral preserved for noisy data.
        let g = grid2(8);
        let f = noise(g, 31);
        let c = restrict(&f, 2).unwrap();
        assert_eq!(c.grid().n(), 4);
        assert!((integrate(&f) - integrate(&c)).abs() < 1e-14);
        // Spot-check one block by hand: coarse (0,0) covers fine rows 0-1,
        // cols 0-1.
        let v = f.values();
        let manual = (v[0] + v[1] + v[8] + v[9]) / 4.0;
        assert!((c.values()[0] - manual).abs() < 1e-15);

        // Restriction of a constant is the same constant.
        let g16 = grid2(16);
        let k = ScalarField::constant(g16, 2.5).unwrap();
        let ck = restrict(&k, 4).unwrap();
        assert_eq!(ck.grid().n(), 4);
        for v in ck.values() {
            assert!((v - 2.5).abs() < 1e-15);
        }

        // Factor must divide n, and the coarse grid must stay usable.
        assert!(restrict(&f, 3).is_err());
        assert!(restrict(&f, 0).is_err());
        assert!(matches!(restrict(&f, 4), Err(GridError::TooCoarse(2))));
    }
}
