//! Hyperbolic geometry kernels: Lorentz (hyperboloid) model primitives,
//! Poincare ball conversions, and the geodesic-to-origin distance used by the
//! continuous objective and the tree decoder.
//!
//! Conventions:
//! - A Lorentz point is a slice `[x0, x1, ..., xd]` with `<x,x>_L = 1/kappa`
//!   and `x0 > 0`, where `<x,y>_L = -x0 y0 + sum_i x_i y_i`.
//! - A Poincare point is a slice `[u1, ..., ud]` with `||u|| < 1`.
//! - Curvature is threaded through [`ManifoldConfig`]; the pipeline only
//!   exercises `kappa = -1`.

use thiserror::Error;

/// Errors from geometry kernels with validated preconditions.
#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("point off manifold: <x,x>_L = {found}, expected {expected}")]
    OffManifold { found: f64, expected: f64 },
    #[error("poincare point has squared norm {0}, must be < 1")]
    OutsideBall(f64),
    #[error("curvature must be negative, got {0}")]
    InvalidCurvature(f64),
    #[error("zero Lorentz norm in centroid normalization")]
    ZeroLorentzNorm,
}

/// Manifold parameters. Only the curvature is configurable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManifoldConfig {
    /// Sectional curvature, strictly negative.
    pub kappa: f64,
}

impl Default for ManifoldConfig {
    fn default() -> Self {
        Self { kappa: -1.0 }
    }
}

impl ManifoldConfig {
    pub fn new(kappa: f64) -> Result<Self, GeometryError> {
        if !(kappa < 0.0) {
            return Err(GeometryError::InvalidCurvature(kappa));
        }
        Ok(Self { kappa })
    }
}

/// Tolerance for the on-manifold check in [`lorentz_distance`].
const MANIFOLD_TOL: f64 = 1e-6;
/// artanh arguments are clamped below this to keep values finite.
const ARTANH_CLAMP: f64 = 1.0 - 1e-12;
/// Pairs closer than this are treated as a single point.
const PAIR_EPS: f64 = 1e-12;
/// Cross-product magnitude below this marks x, y, origin as collinear.
const COLLINEAR_EPS: f64 = 1e-10;

#[inline]
pub(crate) fn sqnorm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

#[inline]
pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Minkowski inner product with signature (-, +, ..., +).
pub fn lorentz_inner(x: &[f64], y: &[f64]) -> Result<f64, GeometryError> {
    if x.len() != y.len() {
        return Err(GeometryError::DimensionMismatch(x.len(), y.len()));
    }
    Ok(lorentz_inner_unchecked(x, y))
}

#[inline]
pub(crate) fn lorentz_inner_unchecked(x: &[f64], y: &[f64]) -> f64 {
    let mut s = -x[0] * y[0];
    for i in 1..x.len() {
        s += x[i] * y[i];
    }
    s
}

/// Geodesic distance on the hyperboloid `<x,x>_L = 1/kappa`:
/// `arcosh(kappa <x,y>_L) / sqrt(-kappa)`, with the arcosh argument clamped
/// below at 1 so coincident points return exactly 0.
pub fn lorentz_distance(x: &[f64], y: &[f64], cfg: &ManifoldConfig) -> Result<f64, GeometryError> {
    if x.len() != y.len() {
        return Err(GeometryError::DimensionMismatch(x.len(), y.len()));
    }
    let target = 1.0 / cfg.kappa;
    for p in [x, y] {
        let n = lorentz_inner_unchecked(p, p);
        if (n - target).abs() > MANIFOLD_TOL {
            return Err(GeometryError::OffManifold {
                found: n,
                expected: target,
            });
        }
    }
    let arg = (cfg.kappa * lorentz_inner_unchecked(x, y)).max(1.0);
    Ok(arg.acosh() / (-cfg.kappa).sqrt())
}

/// Projects a hyperboloid point (kappa = -1) to the Poincare ball:
/// `u = (x1..xd) / (1 + x0)`.
pub fn lorentz_to_poincare(x: &[f64]) -> Vec<f64> {
    debug_assert!(x[0] > 0.0);
    let d = 1.0 + x[0];
    x[1..].iter().map(|v| v / d).collect()
}

/// Lifts a Poincare point to the hyperboloid (kappa = -1):
/// `x = ((1 + ||u||^2), 2u) / (1 - ||u||^2)`.
pub fn poincare_to_lorentz(u: &[f64]) -> Result<Vec<f64>, GeometryError> {
    let n2 = sqnorm(u);
    if n2 >= 1.0 {
        return Err(GeometryError::OutsideBall(n2));
    }
    let denom = 1.0 - n2;
    let mut out = Vec::with_capacity(u.len() + 1);
    out.push((1.0 + n2) / denom);
    out.extend(u.iter().map(|v| 2.0 * v / denom));
    Ok(out)
}

/// Projects an ambient vector onto the tangent space at `x`:
/// `v - kappa <x,v>_L x`, which is Minkowski-orthogonal to `x`.
pub fn tangent_project(x: &[f64], v: &[f64], cfg: &ManifoldConfig) -> Vec<f64> {
    let c = cfg.kappa * lorentz_inner_unchecked(x, v);
    x.iter().zip(v).map(|(&xi, &vi)| vi - c * xi).collect()
}

/// Exponential map at `x` applied to tangent vector `v`. Tangent norms below
/// 1e-12 return `x` unchanged.
pub fn expmap(x: &[f64], v: &[f64], cfg: &ManifoldConfig) -> Vec<f64> {
    let sk = (-cfg.kappa).sqrt();
    let n2 = lorentz_inner_unchecked(v, v);
    if n2 <= 1e-24 {
        return x.to_vec();
    }
    let n = n2.sqrt();
    let (ch, sh) = ((sk * n).cosh(), (sk * n).sinh() / (sk * n));
    x.iter().zip(v).map(|(&xi, &vi)| ch * xi + sh * vi).collect()
}

/// Rescales the time component so `<x,x>_L = 1/kappa` holds exactly; used
/// after retractions to clear accumulated round-off.
pub fn renormalize(x: &mut [f64], cfg: &ManifoldConfig) {
    let s2 = sqnorm(&x[1..]);
    x[0] = (s2 - 1.0 / cfg.kappa).sqrt();
}

/// Value of the geodesic-origin distance when the geodesic degenerates to a
/// single point with squared norm `n2`.
#[inline]
fn point_value(n2: f64) -> f64 {
    n2.min(ARTANH_CLAMP).atanh() / 2.0
}

/// Poincare -> Klein coordinates; geodesics map to straight chords.
#[inline]
fn to_klein(u: &[f64]) -> Vec<f64> {
    let c = 2.0 / (1.0 + sqnorm(u));
    u.iter().map(|v| c * v).collect()
}

/// Distance-to-origin score of the geodesic segment between two Poincare
/// points, `artanh(||p*||^2) / 2` at the segment point `p*` of minimum norm.
///
/// The interior minimizer is found by an isometry chain: invert `x` to the
/// origin (circle inversion about `r = x / ||x||^2`), reflect the origin's
/// image across the straight geodesic through `0` and the image of `y`,
/// invert back, and halve the reflected origin to the foot of the
/// perpendicular. A Klein-chord parameter check clamps the minimizer to the
/// segment, so nearly-radial pairs fall back to the nearer endpoint.
///
/// Degeneracies (all return finite values):
/// - `x = 0` or `y = 0`: the geodesic passes through the origin, returns 0;
/// - `||x - y|| < 1e-12`: returns the single-point value at `x`;
/// - collinear with the origin (cross magnitude < 1e-10): 0 if the origin
///   lies between the endpoints, otherwise the nearer endpoint's value.
pub fn geodesic_origin_distance(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let nx2 = sqnorm(x);
    let ny2 = sqnorm(y);
    if nx2 < 1e-24 || ny2 < 1e-24 {
        return 0.0;
    }
    let diff2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    if diff2 < PAIR_EPS * PAIR_EPS {
        return point_value(nx2);
    }
    let d = dot(x, y);
    let cross2 = (nx2 * ny2 - d * d).max(0.0);
    if cross2.sqrt() < COLLINEAR_EPS {
        if d < 0.0 {
            return 0.0;
        }
        return point_value(nx2.min(ny2));
    }

    // Inversion about the circle centered at r = x/||x||^2 with radius^2
    // rho2 = ||r||^2 - 1; it is orthogonal to the unit sphere and swaps x
    // with the origin.
    let rho2 = 1.0 / nx2 - 1.0;
    let r: Vec<f64> = x.iter().map(|v| v / nx2).collect();
    let ymr: Vec<f64> = y.iter().zip(&r).map(|(a, b)| a - b).collect();
    let c1 = rho2 / sqnorm(&ymr);
    let y_inv: Vec<f64> = ymr.iter().zip(&r).map(|(a, b)| c1 * a + b).collect();

    // Reflect the origin's image (which is x) across the line through 0 and
    // y_inv, then invert back: o_ref is the hyperbolic reflection of the
    // origin across the geodesic, and its hyperbolic midpoint with the
    // origin is the foot of the perpendicular.
    let yi2 = sqnorm(&y_inv);
    if yi2 < 1e-30 {
        return point_value(nx2.min(ny2));
    }
    let s = 2.0 * dot(x, &y_inv) / yi2;
    let o_invref: Vec<f64> = y_inv.iter().zip(x).map(|(a, b)| s * a - b).collect();
    let oimr: Vec<f64> = o_invref.iter().zip(&r).map(|(a, b)| a - b).collect();
    let c2 = rho2 / sqnorm(&oimr);
    let o_ref: Vec<f64> = oimr.iter().zip(&r).map(|(a, b)| c2 * a + b).collect();

    let no2 = sqnorm(&o_ref).min(1.0);
    let h = 1.0 + (1.0 - no2).sqrt();
    let p: Vec<f64> = o_ref.iter().map(|v| v / h).collect();

    // Clamp the minimizer to the segment between x and y (Klein chord).
    let a = to_klein(x);
    let b = to_klein(y);
    let pk = to_klein(&p);
    let ab2: f64 = a.iter().zip(&b).map(|(u, v)| (v - u) * (v - u)).sum();
    let t: f64 = pk
        .iter()
        .zip(&a)
        .zip(&b)
        .map(|((pki, ai), bi)| (pki - ai) * (bi - ai))
        .sum::<f64>()
        / ab2;
    if t <= 0.0 {
        point_value(nx2)
    } else if t >= 1.0 {
        point_value(ny2)
    } else {
        point_value(sqnorm(&p))
    }
}

/// Reference value for [`geodesic_origin_distance`], computed by dense
/// sampling: the segment is walked as a straight chord in Klein coordinates
/// and the pointwise score `artanh(||u||^2)/2` is minimized over a grid,
/// then sharpened by ternary search (the squared chord norm is quadratic in
/// the parameter, so the score is unimodal). Shares no algebra with the
/// inversion/reflection chain; used by tests and the CLI property checks.
pub fn sampled_origin_distance(x: &[f64], y: &[f64], samples: usize) -> f64 {
    let a = to_klein(x);
    let b = to_klein(y);
    let score = |t: f64| {
        let kn2: f64 = a
            .iter()
            .zip(&b)
            .map(|(ai, bi)| {
                let k = ai + t * (bi - ai);
                k * k
            })
            .sum::<f64>()
            .min(ARTANH_CLAMP);
        let h = 1.0 + (1.0 - kn2).sqrt();
        point_value(kn2 / (h * h))
    };
    let m = samples.max(8);
    let mut best = f64::INFINITY;
    let mut best_i = 0;
    for i in 0..=m {
        let v = score(i as f64 / m as f64);
        if v < best {
            best = v;
            best_i = i;
        }
    }
    let mut lo = best_i.saturating_sub(1) as f64 / m as f64;
    let mut hi = (best_i + 1).min(m) as f64 / m as f64;
    for _ in 0..100 {
        let t1 = lo + (hi - lo) / 3.0;
        let t2 = hi - (hi - lo) / 3.0;
        if score(t1) <= score(t2) {
            hi = t2;
        } else {
            lo = t1;
        }
    }
    best.min(score(0.5 * (lo + hi)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inner_fixture() {
        let x = [1.0, 0.0, 0.0];
        let y = [2f64.sqrt(), 1.0, 0.0];
        let v = lorentz_inner(&x, &y).unwrap();
        assert!((v + 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn distance_fixture() {
        let cfg = ManifoldConfig::default();
        let x = [1.0, 0.0];
        let y = [2f64.sqrt(), 1.0];
        let d = lorentz_distance(&x, &y, &cfg).unwrap();
        assert!((d - 2f64.sqrt().acosh()).abs() < 1e-12);
        assert!((d - 0.881_373_587_019_543).abs() < 1e-9);
    }

    #[test]
    fn projection_fixture() {
        let u = lorentz_to_poincare(&[2f64.sqrt(), 1.0, 0.0]);
        assert!((u[0] - 0.414_213_562_373_095).abs() < 1e-9);
        assert!(u[1].abs() < 1e-15);
    }

    #[test]
    fn off_manifold_rejected() {
        let cfg = ManifoldConfig::default();
        let err = lorentz_distance(&[1.5, 0.0], &[1.0, 0.0], &cfg);
        assert!(matches!(err, Err(GeometryError::OffManifold { .. })));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        assert!(matches!(
            lorentz_inner(&[1.0, 0.0], &[1.0, 0.0, 0.0]),
            Err(GeometryError::DimensionMismatch(2, 3))
        ));
    }

    #[test]
    fn diameter_geodesic_scores_zero() {
        for r in [0.1, 0.45, 0.9] {
            assert_eq!(geodesic_origin_distance(&[r, 0.0], &[-r, 0.0]), 0.0);
            assert!(sampled_origin_distance(&[r, 0.0], &[-r, 0.0], 4096) < 1e-9);
        }
    }

    #[test]
    fn radial_pair_scores_nearer_endpoint() {
        let v = geodesic_origin_distance(&[0.3, 0.0], &[0.6, 0.0]);
        assert!((v - 0.09f64.atanh() / 2.0).abs() < 1e-12);
        let oracle = sampled_origin_distance(&[0.3, 0.0], &[0.6, 0.0], 4096);
        assert!((v - oracle).abs() < 1e-6);
    }

    #[test]
    fn perpendicular_pair_matches_oracle() {
        let x = [0.5, 0.0];
        let y = [0.0, 0.5];
        let v = geodesic_origin_distance(&x, &y);
        let oracle = sampled_origin_distance(&x, &y, 8192);
        assert!((v - oracle).abs() < 1e-6, "formula {v} vs oracle {oracle}");
        // Foot of the perpendicular from the origin, solved by hand: the
        // geodesic circle has center (1.25, 1.25) and radius sqrt(2.125).
        let foot = 1.25 * 2f64.sqrt() - 2.125f64.sqrt();
        assert!((v - (foot * foot).atanh() / 2.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_pair_falls_back_to_point_value() {
        let v = geodesic_origin_distance(&[0.4, 0.2], &[0.4, 0.2]);
        assert!((v - 0.2f64.atanh() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn geodesic_score_is_symmetric_and_endpoint_bounded() {
        let pairs = [
            ([0.5, 0.1], [0.2, -0.6]),
            ([0.9, 0.0], [0.0, 0.9]),
            ([-0.3, 0.4], [0.1, 0.2]),
        ];
        for (x, y) in pairs {
            let xy = geodesic_origin_distance(&x, &y);
            let yx = geodesic_origin_distance(&y, &x);
            assert!((xy - yx).abs() < 1e-9);
            assert!(xy <= geodesic_origin_distance(&x, &x) + 1e-12);
            assert!(xy <= geodesic_origin_distance(&y, &y) + 1e-12);
        }
    }
}
