//! Coupling matrices A for the system u^i_t = div(u^i sum_j A_ij grad u^j),
//! their norms, and machine-checkable positivity certificates.
//!
//! Entropy stability needs a quadratic-form lower bound: either directly
//!
//!   xi' A xi >= delta0 |xi|^2            (symmetric part definite)
//!
//! or after a two-sided positive diagonal rescaling
//!
//!   xi' L A R xi >= delta0 |xi|^2        with L, R > 0 diagonal.
//!
//! Certificates carry the witnesses and re-verify themselves, so a claimed
//! delta0 is never trusted across module boundaries. Eigenvalues come from a
//! cyclic Jacobi iteration (matrices here are at most 4x4; no linear-algebra
//! dependency, bitwise deterministic).

use crate::rng::SplitMix64;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CoefficientsError {
    #[error("coupling matrix must be square with m >= 1, got {0} entries")]
    NotSquare(usize),
    #[error("non-finite matrix entry at ({0}, {1})")]
    NonFinite(usize, usize),
    #[error("certificate search supports m <= 4, got {0}")]
    SearchUnsupported(usize),
    #[error("scaling vector has length {got}, matrix has m = {want}")]
    ScalingLength { got: usize, want: usize },
    #[error("scaling entries must be positive, got {0}")]
    NonPositiveScaling(f64),
    #[error("seawater porosity margin eps0 must lie in (0, 1), got {0}")]
    BadSeawaterMargin(f64),
}

#[derive(Debug, Error, PartialEq)]
pub enum CertificateError {
    #[error("certificate claims delta0 = {claimed} but recomputed lambda_min = {actual}")]
    ClaimTooStrong { claimed: f64, actual: f64 },
    #[error("certificate delta0 must be positive, got {0}")]
    NotPositive(f64),
    #[error("certificate dimension does not match matrix")]
    DimensionMismatch,
}

/// Dense m x m coupling matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    m: usize,
    entries: Vec<f64>,
}

impl CouplingMatrix {
    pub fn new(m: usize, entries: Vec<f64>) -> Result<Self, CoefficientsError> {
        if m == 0 || entries.len() != m * m {
            return Err(CoefficientsError::NotSquare(entries.len()));
        }
        for i in 0..m {
            for j in 0..m {
                if !entries[i * m + j].is_finite() {
                    return Err(CoefficientsError::NonFinite(i, j));
                }
            }
        }
        Ok(CouplingMatrix { m, entries })
    }

    pub fn identity(m: usize) -> Self {
        let mut entries = vec![0.0; m * m];
        for i in 0..m {
            entries[i * m + i] = 1.0;
        }
        CouplingMatrix { m, entries }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.m + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// A R for a positive diagonal scaling R = diag(r): entry (i, j) becomes
    /// A_ij * r_j. Used to move between a scaled system and its equivalent
    /// per-species-rescaled form.
    pub fn scale_columns(&self, r: &[f64]) -> Result<Self, CoefficientsError> {
        if r.len() != self.m {
            return Err(CoefficientsError::ScalingLength { got: r.len(), want: self.m });
        }
        for &v in r {
            if !(v > 0.0) || !v.is_finite() {
                return Err(CoefficientsError::NonPositiveScaling(v));
            }
        }
        let entries = self
            .entries
            .iter()
            .enumerate()
            .map(|(k, v)| v * r[k % self.m])
            .collect();
        CouplingMatrix::new(self.m, entries)
    }

    /// Symmetric within |A_ij - A_ji| <= 1e-12 * max|A|.
    pub fn is_symmetric(&self) -> bool {
        let scale = self.entries.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(1.0);
        for i in 0..self.m {
            for j in (i + 1)..self.m {
                if (self.entry(i, j) - self.entry(j, i)).abs() > 1e-12 * scale {
                    return false;
                }
            }
        }
        true
    }

    /// (A + A')/2 as a row-major buffer.
    fn symmetric_part(&self) -> Vec<f64> {
        let m = self.m;
        let mut s = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                s[i * m + j] = 0.5 * (self.entry(i, j) + self.entry(j, i));
            }
        }
        s
    }

    /// Spectral norm |A|_2 = sqrt(lambda_max(A'A)): safeguarded power
    /// iteration with a fixed internal seed, cross-checked against the Jacobi
    /// spectrum of A'A when it stalls.
    pub fn spectral_norm(&self) -> f64 {
        let m = self.m;
        let ata = {
            let mut b = vec![0.0; m * m];
            for i in 0..m {
                for j in 0..m {
                    let mut s = 0.0;
                    for k in 0..m {
                        s += self.entry(k, i) * self.entry(k, j);
                    }
                    b[i * m + j] = s;
                }
            }
            b
        };
        let matvec = |v: &[f64]| -> Vec<f64> {
            (0..m)
                .map(|i| (0..m).map(|j| ata[i * m + j] * v[j]).sum())
                .collect()
        };
        let mut rng = SplitMix64::stream(0x6d61742d6e6f726d, "power-start", 0);
        let mut v: Vec<f64> = (0..m).map(|_| rng.next_in(0.5, 1.5)).collect();
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nv = norm(&v);
        for x in v.iter_mut() {
            *x /= nv;
        }
        let mut lambda = 0.0;
        let mut converged = false;
        for _ in 0..10_000 {
            let w = matvec(&v);
            let nw = norm(&w);
            if nw == 0.0 {
                return 0.0; // A'A v = 0 with random positive v => A = 0
            }
            let rayleigh: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
            if (rayleigh - lambda).abs() <= 1e-12 * rayleigh.abs().max(1.0) {
                lambda = rayleigh;
                converged = true;
                break;
            }
            lambda = rayleigh;
            v = w.into_iter().map(|x| x / nw).collect();
        }
        let from_power = lambda.max(0.0).sqrt();
        if converged {
            from_power
        } else {
            // Stalled (e.g. tied eigenvalues with an unlucky start): fall back
            // to the full deterministic spectrum.
            let eigs = jacobi_eigenvalues(m, &ata);
            eigs.last().copied().unwrap_or(0.0).max(0.0).sqrt()
        }
    }

    /// Row-sum norm |A|_inf = max_i sum_j |A_ij|.
    pub fn inf_norm(&self) -> f64 {
        (0..self.m)
            .map(|i| (0..self.m).map(|j| self.entry(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Smallest eigenvalue of the symmetric part: the direct coercivity test.
    pub fn delta0_direct(&self) -> DirectPositivity {
        let eigs = jacobi_eigenvalues(self.m, &self.symmetric_part());
        let lambda_min = eigs[0];
        if lambda_min > 0.0 {
            DirectPositivity::Holds { delta0: lambda_min }
        } else {
            DirectPositivity::Fails { lambda_min }
        }
    }
}

/// Outcome of the unscaled quadratic-form test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DirectPositivity {
    Holds { delta0: f64 },
    Fails { lambda_min: f64 },
}

/// A self-verifying witness that xi' L A R xi >= delta0 |xi|^2.
#[derive(Debug, Clone, PartialEq)]
pub enum PositivityCertificate {
    /// Symmetric part of A itself is definite; no scaling needed.
    Direct { delta0: f64 },
    /// Definite after the stored positive diagonal scalings (first entries
    /// normalized to 1 to pin the free global factor).
    Scaled {
        delta0: f64,
        left: Vec<f64>,
        right: Vec<f64>,
    },
    /// Search exhausted without a positive bound; `best_lambda` records the
    /// best value seen. No stability claim.
    None { best_lambda: f64 },
}

impl PositivityCertificate {
    pub fn delta0(&self) -> Option<f64> {
        match self {
            PositivityCertificate::Direct { delta0 }
            | PositivityCertificate::Scaled { delta0, .. } => Some(*delta0),
            PositivityCertificate::None { .. } => None,
        }
    }

    /// Left weights for the weighted entropy estimate (identity for direct).
    pub fn left_weights(&self, m: usize) -> Option<Vec<f64>> {
        match self {
            PositivityCertificate::Direct { .. } => Some(vec![1.0; m]),
            PositivityCertificate::Scaled { left, .. } => Some(left.clone()),
            PositivityCertificate::None { .. } => None,
        }
    }

    /// Right scaling entering the dissipation lower bound (identity for
    /// direct): the certified form controls the scaled gradients
    /// grad(rho * u_i) / right_i.
    pub fn right_weights(&self, m: usize) -> Option<Vec<f64>> {
        match self {
            PositivityCertificate::Direct { .. } => Some(vec![1.0; m]),
            PositivityCertificate::Scaled { right, .. } => Some(right.clone()),
            PositivityCertificate::None { .. } => None,
        }
    }

    /// Builds a scaled certificate from explicit witnesses, computing the
    /// resulting delta0. Returns `None` kind when the scaled form is not
    /// definite.
    pub fn from_scaling(
        a: &CouplingMatrix,
        left: &[f64],
        right: &[f64],
    ) -> Result<Self, CoefficientsError> {
        let m = a.m();
        if left.len() != m {
            return Err(CoefficientsError::ScalingLength { got: left.len(), want: m });
        }
        if right.len() != m {
            return Err(CoefficientsError::ScalingLength { got: right.len(), want: m });
        }
        for &v in left.iter().chain(right) {
            if !(v > 0.0) || !v.is_finite() {
                return Err(CoefficientsError::NonPositiveScaling(v));
            }
        }
        let lambda = scaled_lambda_min(a, left, right);
        if lambda > 0.0 {
            Ok(PositivityCertificate::Scaled {
                delta0: lambda,
                left: left.to_vec(),
                right: right.to_vec(),
            })
        } else {
            Ok(PositivityCertificate::None { best_lambda: lambda })
        }
    }

    /// Recomputes the claimed bound from scratch; tolerance 1e-10.
    pub fn verify(&self, a: &CouplingMatrix) -> Result<(), CertificateError> {
        match self {
            PositivityCertificate::Direct { delta0 } => {
                if !(*delta0 > 0.0) {
                    return Err(CertificateError::NotPositive(*delta0));
                }
                let eigs = jacobi_eigenvalues(a.m(), &a.symmetric_part());
                if eigs[0] < delta0 - 1e-10 {
                    return Err(CertificateError::ClaimTooStrong {
                        claimed: *delta0,
                        actual: eigs[0],
                    });
                }
                Ok(())
            }
            PositivityCertificate::Scaled { delta0, left, right } => {
                if !(*delta0 > 0.0) {
                    return Err(CertificateError::NotPositive(*delta0));
                }
                if left.len() != a.m() || right.len() != a.m() {
                    return Err(CertificateError::DimensionMismatch);
                }
                let actual = scaled_lambda_min(a, left, right);
                if actual < delta0 - 1e-10 {
                    return Err(CertificateError::ClaimTooStrong {
                        claimed: *delta0,
                        actual,
                    });
                }
                Ok(())
            }
            PositivityCertificate::None { .. } => Ok(()),
        }
    }
}

/// lambda_min of sym(L A R) for positive diagonal scalings.
fn scaled_lambda_min(a: &CouplingMatrix, left: &[f64], right: &[f64]) -> f64 {
    let m = a.m();
    let mut b = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            b[i * m + j] = left[i] * a.entry(i, j) * right[j];
        }
    }
    let mut sym = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            sym[i * m + j] = 0.5 * (b[i * m + j] + b[j * m + i]);
        }
    }
    jacobi_eigenvalues(m, &sym)[0]
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
/// Deterministic sweep order (row-major over p < q); off-diagonal tolerance
/// 1e-12 relative to the Frobenius norm.
pub(crate) fn jacobi_eigenvalues(m: usize, sym: &[f64]) -> Vec<f64> {
    let mut a = sym.to_vec();
    let frob: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    if frob == 0.0 {
        return vec![0.0; m];
    }
    let tol = 1e-12 * frob;
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..m {
            for q in (p + 1)..m {
                off += 2.0 * a[p * m + q] * a[p * m + q];
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..m {
            for q in (p + 1)..m {
                let apq = a[p * m + q];
                if apq.abs() <= tol / (m * m) as f64 {
                    continue;
                }
                let theta = (a[q * m + q] - a[p * m + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..m {
                    let akp = a[k * m + p];
                    let akq = a[k * m + q];
                    a[k * m + p] = c * akp - s * akq;
                    a[k * m + q] = s * akp + c * akq;
                }
                for k in 0..m {
                    let apk = a[p * m + k];
                    let aqk = a[q * m + k];
                    a[p * m + k] = c * apk - s * aqk;
                    a[q * m + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eigs: Vec<f64> = (0..m).map(|i| a[i * m + i]).collect();
    eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eigs
}

/// Searches for positive diagonal L, R (first entries pinned to 1) maximizing
/// lambda_min(sym(L A R)) by coordinate descent in log-space: a deterministic
/// 33-point scan per coordinate followed by golden-section refinement, from 8
/// multi-starts (the identity scaling is always start 0, so the result never
/// falls below the direct bound).
pub fn delta0_scaled_search(
    a: &CouplingMatrix,
) -> Result<PositivityCertificate, CoefficientsError> {
    let m = a.m();
    if m > 4 {
        return Err(CoefficientsError::SearchUnsupported(m));
    }
    let ncoord = 2 * (m - 1);
    let eval = |x: &[f64]| -> f64 {
        let mut left = vec![1.0; m];
        let mut right = vec![1.0; m];
        for i in 1..m {
            left[i] = x[i - 1].exp();
            right[i] = x[m - 1 + i - 1].exp();
        }
        scaled_lambda_min(a, &left, &right)
    };

    let mut starts = vec![vec![0.0; ncoord]];
    let mut rng = SplitMix64::stream(0x7363616c65642d73, "multistart", 0);
    for _ in 1..8 {
        starts.push((0..ncoord).map(|_| rng.next_in(-1.5, 1.5)).collect());
    }

    let mut best_x = starts[0].clone();
    let mut best = eval(&best_x);
    for start in starts {
        let mut x = start;
        let mut val = eval(&x);
        for _sweep in 0..200 {
            let before = val;
            for c in 0..ncoord {
                // Coarse scan over [x_c - 2, x_c + 2].
                let center = x[c];
                let mut loc_best = (val, center);
                for k in 0..33 {
                    let cand = center - 2.0 + 4.0 * k as f64 / 32.0;
                    x[c] = cand;
                    let v = eval(&x);
                    if v > loc_best.0 {
                        loc_best = (v, cand);
                    }
                }
                // Golden-section refinement around the scan winner.
                let phi = 0.5 * (5.0f64.sqrt() - 1.0);
                let (mut lo, mut hi) = (loc_best.1 - 0.125, loc_best.1 + 0.125);
                let mut x1 = hi - phi * (hi - lo);
                let mut x2 = lo + phi * (hi - lo);
                x[c] = x1;
                let mut f1 = eval(&x);
                x[c] = x2;
                let mut f2 = eval(&x);
                for _ in 0..48 {
                    if f1 < f2 {
                        lo = x1;
                        x1 = x2;
                        f1 = f2;
                        x2 = lo + phi * (hi - lo);
                        x[c] = x2;
                        f2 = eval(&x);
                    } else {
                        hi = x2;
                        x2 = x1;
                        f2 = f1;
                        x1 = hi - phi * (hi - lo);
                        x[c] = x1;
                        f1 = eval(&x);
                    }
                }
                let refined = if f1 > f2 { x1 } else { x2 };
                let refined_val = f1.max(f2);
                if refined_val > loc_best.0 {
                    loc_best = (refined_val, refined);
                }
                x[c] = loc_best.1;
                val = loc_best.0;
            }
            if val - before <= 1e-13 * val.abs().max(1.0) {
                break;
            }
        }
        if val > best {
            best = val;
            best_x = x;
        }
    }

    if best > 0.0 {
        let mut left = vec![1.0; m];
        let mut right = vec![1.0; m];
        for i in 1..m {
            left[i] = best_x[i - 1].exp();
            right[i] = best_x[m - 1 + i - 1].exp();
        }
        Ok(PositivityCertificate::Scaled {
            delta0: best,
            left,
            right,
        })
    } else {
        Ok(PositivityCertificate::None { best_lambda: best })
    }
}

/// Seawater-intrusion parameters: porosity margin eps0 in (0,1), nu = 1 - eps0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeawaterParams {
    pub eps0: f64,
}

/// The two-species seawater matrix [[nu, nu], [nu, 1]] together with its
/// direct certificate (symmetric, definite for every eps0 in (0,1)).
pub fn seawater_matrix(
    p: SeawaterParams,
) -> Result<(CouplingMatrix, PositivityCertificate), CoefficientsError> {
    if !(p.eps0 > 0.0 && p.eps0 < 1.0) {
        return Err(CoefficientsError::BadSeawaterMargin(p.eps0));
    }
    let nu = 1.0 - p.eps0;
    let a = CouplingMatrix::new(2, vec![nu, nu, nu, 1.0])?;
    let cert = match a.delta0_direct() {
        DirectPositivity::Holds { delta0 } => PositivityCertificate::Direct { delta0 },
        DirectPositivity::Fails { lambda_min } => {
            PositivityCertificate::None { best_lambda: lambda_min }
        }
    };
    Ok((a, cert))
}

/// The worked 2x2 example [[1, -a], [2a, 1]]: for |a| > 2 its symmetric part
/// is indefinite, yet diag(2,1)-left-scaling restores definiteness.
pub fn skew_example_matrix(a: f64) -> Result<CouplingMatrix, CoefficientsError> {
    CouplingMatrix::new(2, vec![1.0, -a, 2.0 * a, 1.0])
}

/// Scalar mobility profiles for the single-species diagnostics path.
#[derive(Debug, Clone, PartialEq)]
pub enum MobilityKind {
    /// f(a) = max(a, 0).
    Identity,
    /// f(a) = max(0, min(a, sqrt|a - 1|)): linear from zero, pinched to zero
    /// again at a = 1, square-root growth after.
    PinchedSqrt,
    /// Piecewise-linear table (x strictly increasing), constant extension.
    Tabulated(Vec<(f64, f64)>),
}

#[derive(Debug, Error, PartialEq)]
pub enum MobilityError {
    #[error("mobility table needs >= 2 strictly increasing abscissae")]
    BadTable,
    #[error("mobility is negative at a = {0}")]
    Negative(f64),
    #[error("mobility lacks a linear lower bound near zero (min f(a)/a = {0} on (0, {1}])")]
    NoLinearLowerBound(f64, f64),
    #[error("1/f is not integrable on ({0}, {1}): refinement keeps growing (last increment {2})")]
    ReciprocalNotIntegrable(f64, f64, f64),
}

/// A validated scalar mobility: continuous, nonnegative, linearly bounded
/// below near zero, with integrable reciprocal on (a0, 10).
#[derive(Debug, Clone, PartialEq)]
pub struct MobilityFunction {
    kind: MobilityKind,
    /// Fitted growth constant: max over samples of f(a)/(1+a).
    growth_c: f64,
    /// Fitted linear lower-bound constant on (0, a0].
    low_c: f64,
    low_a0: f64,
}

impl MobilityFunction {
    /// Validates the contract by dense sampling and a dyadic-refinement
    /// integrability probe of 1/f on (a0, 10); a0 = 0.1.
    pub fn new(kind: MobilityKind) -> Result<Self, MobilityError> {
        if let MobilityKind::Tabulated(t) = &kind {
            if t.len() < 2 || t.windows(2).any(|w| w[1].0 <= w[0].0) {
                return Err(MobilityError::BadTable);
            }
        }
        let raw = |a: f64| eval_kind(&kind, a);
        let a0 = 0.1;
        let mut growth_c = 0.0f64;
        for k in 0..=4000 {
            let a = k as f64 * 0.01; // [0, 40]
            let f = raw(a);
            if f < 0.0 {
                return Err(MobilityError::Negative(a));
            }
            growth_c = growth_c.max(f / (1.0 + a));
        }
        let mut low_c = f64::INFINITY;
        for k in 1..=1000 {
            let a = a0 * k as f64 / 1000.0;
            low_c = low_c.min(raw(a) / a);
        }
        if !(low_c > 0.0) {
            return Err(MobilityError::NoLinearLowerBound(low_c, a0));
        }
        // Midpoint sums of 1/f on (a0, 10) over dyadic refinements: for an
        // integrable reciprocal the increments shrink; a non-integrable zero
        // keeps contributing un-shrinking mass.
        let (lo, hi) = (a0, 10.0);
        let midsum = |panels: usize| -> f64 {
            let dx = (hi - lo) / panels as f64;
            let mut s = 0.0;
            for i in 0..panels {
                let f = raw(lo + (i as f64 + 0.5) * dx);
                s += dx / f.max(1e-300);
            }
            s
        };
        let mut prev = midsum(1 << 12);
        let mut last_increment = f64::INFINITY;
        for k in 13..=16 {
            let cur = midsum(1 << k);
            last_increment = cur - prev;
            prev = cur;
        }
        // |a-1|^(-1/2)-type singularities shrink by ~1/sqrt(2) per doubling; a
        // 1/|a-1| zero adds ~ln(2)*density each time, and a flat zero well
        // pushes the sum itself to ~width/f_floor. Gate on both signals.
        if last_increment.abs() > 0.05 * prev.abs().max(1.0) || prev > 1e8 {
            return Err(MobilityError::ReciprocalNotIntegrable(lo, hi, last_increment));
        }
        Ok(MobilityFunction { kind, growth_c, low_c, low_a0: a0 })
    }

    pub fn eval(&self, a: f64) -> f64 {
        eval_kind(&self.kind, a)
    }

    pub fn kind(&self) -> &MobilityKind {
        &self.kind
    }

    pub fn growth_constant(&self) -> f64 {
        self.growth_c
    }

    pub fn linear_lower_bound(&self) -> (f64, f64) {
        (self.low_c, self.low_a0)
    }
}

fn eval_kind(kind: &MobilityKind, a: f64) -> f64 {
    match kind {
        MobilityKind::Identity => a.max(0.0),
        MobilityKind::PinchedSqrt => a.min((a - 1.0).abs().sqrt()).max(0.0),
        MobilityKind::Tabulated(t) => {
            if a <= t[0].0 {
                return t[0].1;
            }
            if a >= t[t.len() - 1].0 {
                return t[t.len() - 1].1;
            }
            let i = t.partition_point(|p| p.0 <= a) - 1;
            let (x0, y0) = t[i];
            let (x1, y1) = t[i + 1];
            y0 + (y1 - y0) * (a - x0) / (x1 - x0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn spectral_norm_basics() {
        assert!((CouplingMatrix::identity(3).spectral_norm() - 1.0).abs() < 1e-12);
        let d = CouplingMatrix::new(2, vec![3.0, 0.0, 0.0, -5.0]).unwrap();
        assert!((d.spectral_norm() - 5.0).abs() < 1e-11);
        let z = CouplingMatrix::new(2, vec![0.0; 4]).unwrap();
        assert_eq!(z.spectral_norm(), 0.0);
    }

    #[test]
    fn spectral_norm_matches_2x2_closed_form() {
        // For A = [[1,-3],[6,1]]: A'A = [[37,3],[3,10]],
        // lambda_max = (47 + sqrt(27^2 + 36))/2.
        let a = skew_example_matrix(3.0).unwrap();
        let expect = ((47.0 + (27.0f64 * 27.0 + 36.0).sqrt()) / 2.0).sqrt();
        assert!((a.spectral_norm() - expect).abs() < 1e-11);

        let (sw, _) = seawater_matrix(SeawaterParams { eps0: 0.025 }).unwrap();
        let nu = 0.975f64;
        let (p, q, r) = (2.0 * nu * nu, nu * nu + nu, nu * nu + 1.0);
        let tr = p + r;
        let det = p * r - q * q;
        let lmax: f64 = 0.5 * (tr + (tr * tr - 4.0 * det).sqrt());
        assert!((sw.spectral_norm() - lmax.sqrt()).abs() < 1e-11);
    }

    #[test]
    fn scale_columns_multiplies_each_column() {
        let a = skew_example_matrix(3.0).unwrap();
        let b = a.scale_columns(&[2.0, 0.5]).unwrap();
        assert_eq!(b.entry(0, 0), 2.0);
        assert_eq!(b.entry(0, 1), -1.5);
        assert_eq!(b.entry(1, 0), 12.0);
        assert_eq!(b.entry(1, 1), 0.5);
        assert!(a.scale_columns(&[1.0]).is_err());
        assert!(a.scale_columns(&[1.0, -1.0]).is_err());
    }

    #[test]
    fn inf_norm_examples() {
        assert_eq!(CouplingMatrix::identity(4).inf_norm(), 1.0);
        let (sw, _) = seawater_matrix(SeawaterParams { eps0: 0.025 }).unwrap();
        assert!((sw.inf_norm() - 1.975).abs() < 1e-15);
        let a = skew_example_matrix(3.0).unwrap();
        assert_eq!(a.inf_norm(), 7.0);
    }

    #[test]
    fn norm_never_below_any_rayleigh_quotient() {
        let a = skew_example_matrix(3.0).unwrap();
        let norm = a.spectral_norm();
        let mut rng = SplitMix64::new(11);
        for _ in 0..200 {
            let x = [rng.next_in(-1.0, 1.0), rng.next_in(-1.0, 1.0)];
            let ax = [
                a.entry(0, 0) * x[0] + a.entry(0, 1) * x[1],
                a.entry(1, 0) * x[0] + a.entry(1, 1) * x[1],
            ];
            let nx = (x[0] * x[0] + x[1] * x[1]).sqrt();
            let nax = (ax[0] * ax[0] + ax[1] * ax[1]).sqrt();
            assert!(nax <= norm * nx * (1.0 + 1e-10));
        }
    }

    #[test]
    fn direct_delta0_identity_and_seawater() {
        match CouplingMatrix::identity(2).delta0_direct() {
            DirectPositivity::Holds { delta0 } => assert!((delta0 - 1.0).abs() < 1e-12),
            _ => panic!("identity must pass"),
        }
        // Closed form for [[nu,nu],[nu,1]]: ((1+nu) - sqrt((1-nu)^2 + 4 nu^2))/2.
        let nu = 0.975f64;
        let expect = ((1.0 + nu) - ((1.0 - nu).powi(2) + 4.0 * nu * nu).sqrt()) / 2.0;
        let (sw, cert) = seawater_matrix(SeawaterParams { eps0: 0.025 }).unwrap();
        match sw.delta0_direct() {
            DirectPositivity::Holds { delta0 } => {
                assert!((delta0 - expect).abs() < 1e-12);
                assert!((delta0 - 0.012420).abs() < 1e-5);
            }
            _ => panic!("seawater must pass"),
        }
        cert.verify(&sw).unwrap();
        assert!(cert.delta0().is_some());
    }

    #[test]
    fn direct_delta0_fails_for_skew_example() {
        // sym([[1,-3],[6,1]]) = [[1, 3/2],[3/2, 1]], eigenvalues {-1/2, 5/2}.
        match skew_example_matrix(3.0).unwrap().delta0_direct() {
            DirectPositivity::Fails { lambda_min } => {
                assert!((lambda_min + 0.5).abs() < 1e-12);
            }
            _ => panic!("indefinite symmetric part must fail"),
        }
    }

    #[test]
    fn delta0_is_transpose_invariant() {
        let a = skew_example_matrix(2.5).unwrap();
        let at = CouplingMatrix::new(
            2,
            vec![a.entry(0, 0), a.entry(1, 0), a.entry(0, 1), a.entry(1, 1)],
        )
        .unwrap();
        let la = match a.delta0_direct() {
            DirectPositivity::Fails { lambda_min } => lambda_min,
            DirectPositivity::Holds { delta0 } => delta0,
        };
        let lat = match at.delta0_direct() {
            DirectPositivity::Fails { lambda_min } => lambda_min,
            DirectPositivity::Holds { delta0 } => delta0,
        };
        assert!((la - lat).abs() < 1e-12);
    }

    #[test]
    fn quadratic_form_respects_certified_bound() {
        let (sw, cert) = seawater_matrix(SeawaterParams { eps0: 0.1 }).unwrap();
        let delta0 = cert.delta0().unwrap();
        let mut rng = SplitMix64::new(3);
        for _ in 0..10_000 {
            let xi = [rng.next_in(-1.0, 1.0), rng.next_in(-1.0, 1.0)];
            let q = sw.entry(0, 0) * xi[0] * xi[0]
                + (sw.entry(0, 1) + sw.entry(1, 0)) * xi[0] * xi[1]
                + sw.entry(1, 1) * xi[1] * xi[1];
            let n2 = xi[0] * xi[0] + xi[1] * xi[1];
            assert!(q >= delta0 * n2 - 1e-10);
        }
    }

    #[test]
    fn scaled_search_recovers_the_worked_witness() {
        // diag(2,1)-scaling of [[1,-3],[6,1]] gives sym = diag(2,1); under the
        // first-entry normalization the optimum value is 1 (lambda_min can
        // never exceed the pinned (1,1) entry).
        let a = skew_example_matrix(3.0).unwrap();
        let cert = delta0_scaled_search(&a).unwrap();
        match &cert {
            PositivityCertificate::Scaled { delta0, .. } => {
                assert!(*delta0 >= 1.0 - 1e-6, "found {delta0}");
                assert!(*delta0 <= 1.0 + 1e-9);
            }
            other => panic!("expected scaled certificate, got {other:?}"),
        }
        cert.verify(&a).unwrap();
    }

    #[test]
    fn explicit_worked_witness_checks_out() {
        let a = skew_example_matrix(3.0).unwrap();
        let cert = PositivityCertificate::from_scaling(&a, &[2.0, 1.0], &[1.0, 1.0]).unwrap();
        match &cert {
            PositivityCertificate::Scaled { delta0, .. } => {
                assert!((delta0 - 1.0).abs() < 1e-12);
            }
            other => panic!("expected scaled certificate, got {other:?}"),
        }
        cert.verify(&a).unwrap();
    }

    #[test]
    fn scaled_search_never_loses_to_direct() {
        let (sw, cert) = seawater_matrix(SeawaterParams { eps0: 0.025 }).unwrap();
        let direct = cert.delta0().unwrap();
        let searched = delta0_scaled_search(&sw).unwrap();
        assert!(searched.delta0().unwrap() >= direct - 1e-10);
        searched.verify(&sw).unwrap();
    }

    #[test]
    fn pure_rotation_admits_no_certificate() {
        // sym(L [[0,1],[-1,0]] R) always has zero trace, so lambda_min <= 0;
        // confirm with a brute-force grid before trusting the search.
        let a = CouplingMatrix::new(2, vec![0.0, 1.0, -1.0, 0.0]).unwrap();
        for i in 0..20 {
            for j in 0..20 {
                let l = vec![1.0, (0.2 * i as f64 - 2.0).exp()];
                let r = vec![1.0, (0.2 * j as f64 - 2.0).exp()];
                assert!(scaled_lambda_min(&a, &l, &r) <= 0.0);
            }
        }
        match delta0_scaled_search(&a).unwrap() {
            PositivityCertificate::None { best_lambda } => assert!(best_lambda <= 1e-12),
            other => panic!("rotation cannot be certified, got {other:?}"),
        }
    }

    #[test]
    fn seawater_delta0_shrinks_toward_degeneracy() {
        let mut prev = f64::INFINITY;
        for eps0 in [0.5, 0.2, 0.1, 0.05, 0.025, 0.01] {
            let (_, cert) = seawater_matrix(SeawaterParams { eps0 }).unwrap();
            let d = cert.delta0().unwrap();
            assert!(d > 0.0 && d < prev);
            prev = d;
        }
        assert!(seawater_matrix(SeawaterParams { eps0: 0.0 }).is_err());
        assert!(seawater_matrix(SeawaterParams { eps0: 1.0 }).is_err());
    }

    #[test]
    fn certificate_verification_rejects_inflated_claims() {
        let (sw, cert) = seawater_matrix(SeawaterParams { eps0: 0.025 }).unwrap();
        let delta0 = cert.delta0().unwrap();
        let forged = PositivityCertificate::Direct { delta0: delta0 + 1e-3 };
        assert!(matches!(
            forged.verify(&sw),
            Err(CertificateError::ClaimTooStrong { .. })
        ));
    }

    proptest! {
        #[test]
        fn prop_from_scaling_certificates_self_verify(
            a00 in -3.0f64..3.0, a01 in -3.0f64..3.0,
            a10 in -3.0f64..3.0, a11 in -3.0f64..3.0,
            l2 in 0.1f64..10.0, r2 in 0.1f64..10.0,
        ) {
            let a = CouplingMatrix::new(2, vec![a00, a01, a10, a11]).unwrap();
            let cert = PositivityCertificate::from_scaling(&a, &[1.0, l2], &[1.0, r2]).unwrap();
            prop_assert!(cert.verify(&a).is_ok());
        }

        #[test]
        fn prop_jacobi_matches_2x2_closed_form(
            p in -5.0f64..5.0, q in -5.0f64..5.0, r in -5.0f64..5.0,
        ) {
            let eigs = jacobi_eigenvalues(2, &[p, q, q, r]);
            let mean = 0.5 * (p + r);
            let rad = (0.25 * (p - r) * (p - r) + q * q).sqrt();
            prop_assert!((eigs[0] - (mean - rad)).abs() < 1e-10);
            prop_assert!((eigs[1] - (mean + rad)).abs() < 1e-10);
        }
    }

    #[test]
    fn mobility_pinched_sqrt_values() {
        let f = MobilityFunction::new(MobilityKind::PinchedSqrt).unwrap();
        assert_eq!(f.eval(0.5), 0.5);
        assert_eq!(f.eval(1.0), 0.0);
        assert_eq!(f.eval(-2.0), 0.0);
        assert!((f.eval(4.0) - 3.0f64.sqrt()).abs() < 1e-15);
        assert!(f.growth_constant() <= 1.0 + 1e-12);
        let (c, a0) = f.linear_lower_bound();
        assert!(c > 0.9 && a0 == 0.1);
    }

    #[test]
    fn mobility_identity_registers() {
        let f = MobilityFunction::new(MobilityKind::Identity).unwrap();
        assert_eq!(f.eval(2.5), 2.5);
        assert_eq!(f.eval(-1.0), 0.0);
    }

    #[test]
    fn mobility_rejects_flat_zero_well() {
        // f that is exactly zero on [0.9, 1.1]: 1/f carries non-integrable mass.
        let t = MobilityKind::Tabulated(vec![
            (0.0, 0.0),
            (0.9, 0.9),
            (0.90001, 0.0),
            (1.09999, 0.0),
            (1.1, 1.1),
            (10.0, 10.0),
        ]);
        assert!(matches!(
            MobilityFunction::new(t),
            Err(MobilityError::ReciprocalNotIntegrable(..))
        ));
    }

    #[test]
    fn mobility_rejects_negative_values() {
        let t = MobilityKind::Tabulated(vec![(0.0, 0.0), (1.0, -0.5), (2.0, 1.0)]);
        assert!(matches!(
            MobilityFunction::new(t),
            Err(MobilityError::Negative(_))
        ));
    }
}
