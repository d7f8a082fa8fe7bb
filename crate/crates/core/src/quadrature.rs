//! Quadrature building blocks: Gauss-Legendre rules, unit-sphere rules,
//! compensated summation, order-preserving (optionally parallel) node maps,
//! and the radially substituted inner integral shared by every seminorm
//! variant.
//!
//! The inner integral of the seminorm has the polar form
//! `int_{S^{N-1}} int g(r, sigma) r^{q(1-s)-1} dr dsigma` with
//! `g(r, sigma) = (|f(x + r sigma) - f(x)| / r)^q`. Near `r = 0` the factor
//! `r^{q(1-s)-1}` blows up as `s -> 1`, so the singular leg is integrated with
//! the substitution `u = (r / delta)^{q(1-s)}`, which turns it into
//! `delta^{q(1-s)} / (q(1-s)) * int_0^1 g(delta u^{1/(q(1-s))}, sigma) du`.
//! For difference quotients with a limit at 0 (anything differentiable) the
//! substituted integrand is smooth uniformly in `s`, so a fixed Gauss rule
//! keeps its accuracy all the way into the `s -> 1` regime.

use crate::error::{Error, Result};
use crate::geometry::{Point, MAX_DIM};
use serde::Serialize;

/// Evaluate the Legendre polynomial `P_n` and its derivative at `x`.
fn legendre_pd(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, ascending by node.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1, "a quadrature rule needs at least one node");
    let mut nodes = vec![(0.0f64, 0.0f64); n];
    let m = n.div_ceil(2);
    for i in 1..=m {
        // Chebyshev-based initial guess, then Newton.
        let mut z = (std::f64::consts::PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..64 {
            let (p, d) = legendre_pd(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() <= 1e-15 * z.abs().max(1e-3) {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        // Roots come out in decreasing order; store symmetrically.
        nodes[i - 1] = (-z, w);
        nodes[n - i] = (z, w);
    }
    if n % 2 == 1 {
        // The middle node is exactly zero by symmetry.
        nodes[n / 2].0 = 0.0;
    }
    nodes
}

/// Gauss-Legendre nodes and weights mapped to `[0, 1]`.
pub fn gauss_legendre_unit(n: usize) -> Vec<(f64, f64)> {
    gauss_legendre(n)
        .into_iter()
        .map(|(x, w)| (0.5 * (x + 1.0), 0.5 * w))
        .collect()
}

/// Surface measure of the unit sphere `S^{N-1}` for N in 1..=3
/// (the 0-sphere carries counting measure, total 2).
pub fn sphere_surface(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI,
        _ => 4.0 * std::f64::consts::PI,
    }
}

/// Quadrature rule for the unit sphere `S^{N-1}` whose weights sum exactly to
/// the surface measure. `order` controls the node count: 2 fixed points for
/// N = 1, `order` midpoint angles for N = 2, and a Gauss-Legendre (polar) by
/// midpoint (azimuthal) product with about `order^2 / 2` nodes for N = 3.
/// Midpoint rules on the circle converge spectrally for smooth integrands and
/// integrate trigonometric polynomials of degree < `order` exactly.
pub fn sphere_rule(dim: usize, order: usize) -> Result<Vec<(Point, f64)>> {
    if order == 0 {
        return Err(Error::invalid("sphere rule order must be positive"));
    }
    match dim {
        1 => Ok(vec![
            (Point::from_parts([1.0, 0.0, 0.0], 1), 1.0),
            (Point::from_parts([-1.0, 0.0, 0.0], 1), 1.0),
        ]),
        2 => {
            let m = order;
            let dth = 2.0 * std::f64::consts::PI / m as f64;
            Ok((0..m)
                .map(|j| {
                    let th = (j as f64 + 0.5) * dth;
                    (Point::from_parts([th.cos(), th.sin(), 0.0], 2), dth)
                })
                .collect())
        }
        3 => {
            let nt = (order / 2).max(1);
            let m = order.max(2);
            let dph = 2.0 * std::f64::consts::PI / m as f64;
            let tg = gauss_legendre(nt); // t = cos(polar angle) on [-1, 1]
            let mut out = Vec::with_capacity(nt * m);
            for (t, wt) in tg {
                let sin_t = (1.0 - t * t).max(0.0).sqrt();
                for j in 0..m {
                    let ph = (j as f64 + 0.5) * dph;
                    out.push((
                        Point::from_parts([sin_t * ph.cos(), sin_t * ph.sin(), t], 3),
                        wt * dph,
                    ));
                }
            }
            Ok(out)
        }
        d => Err(Error::UnsupportedDimension(d)),
    }
}

/// Neumaier-compensated summation: drop-in accumulator whose `total()` is
/// immune to catastrophic cancellation between large intermediate terms.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        NeumaierSum::default()
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// `|base|^q` with fast paths for the common small integer exponents.
#[inline]
pub fn powq(base: f64, q: f64) -> f64 {
    if q == 1.0 {
        base
    } else if q == 2.0 {
        base * base
    } else if q == 3.0 {
        base * base * base
    } else {
        base.powf(q)
    }
}

/// Apply `f` to every index in `0..n`, returning results in index order.
///
/// With the `parallel` feature this fans out over the rayon pool; the output
/// is bit-identical to the sequential version because each element is computed
/// independently and placed by index, and every reduction downstream runs
/// sequentially over the returned vector.
#[cfg(feature = "parallel")]
pub fn map_nodes<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

/// Apply `f` to every index in `0..n`, returning results in index order.
#[cfg(not(feature = "parallel"))]
pub fn map_nodes<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Always-sequential twin of [`map_nodes`], kept callable under every feature
/// combination so benchmarks can compare the two directly.
pub fn map_nodes_serial<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Tuning knobs for the deterministic inner quadrature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadratureConfig {
    /// Node-count parameter of the sphere rule used for the angular factor.
    pub sphere_order: usize,
    /// Gauss-Legendre nodes per radial segment.
    pub radial_nodes: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            sphere_order: 32,
            radial_nodes: 16,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sphere_order == 0 || self.radial_nodes == 0 {
            return Err(Error::invalid(
                "quadrature orders must be positive (sphere_order and radial_nodes)",
            ));
        }
        Ok(())
    }
}

/// One radial leg of the inner integral at a fixed base point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Seg {
    /// `[0, upper]`, integrated with the power substitution that removes the
    /// `r^{q(1-s)-1}` singularity. Only ever used for radii the geometry
    /// guarantees to stay inside the region, so no membership test is needed.
    Singular { upper: f64 },
    /// `[lo, hi]`, integrated directly (the weight is smooth there). With
    /// `reject` set, shifted points failing `member` contribute zero --
    /// this is how the inner region is clipped to the domain or a
    /// truncation of it.
    Plain { lo: f64, hi: f64, reject: bool },
}

/// Pointwise floor for the radius at which difference quotients are formed:
/// below this fraction of the segment scale the quotient is evaluated at the
/// floor instead, preventing `0/0` while changing the integral by less than
/// rounding error (the substituted radii reach the floor only at fantastically
/// small quadrature nodes).
const RADIUS_FLOOR_FRACTION: f64 = 1e-7;

/// Deterministic inner integral
/// `int_{S^{N-1}} int_segs |f(x + r sigma) - f(x)|^q r^{-1-sq} r^{N-1} dr dsigma`
/// over the given radial segments (already reduced to the 1-d weight
/// `r^{q(1-s)-1}` acting on difference quotients; see the module docs).
///
/// `eval` returns function values at shifted points, `member` is the
/// rejection test used by `Seg::Plain { reject: true, .. }` legs. Summation
/// order is fixed (sphere node major, segment, then radial node) and
/// compensated, so results are reproducible bit for bit.
#[allow(clippy::too_many_arguments)]
pub fn inner_integral<E, M>(
    x: &Point,
    f_x: f64,
    eval: &E,
    member: &M,
    segs: &[Seg],
    s: f64,
    q: f64,
    sphere: &[(Point, f64)],
    radial: &[(f64, f64)],
) -> Result<f64>
where
    E: Fn(&Point) -> Result<f64>,
    M: Fn(&Point) -> bool,
{
    let eq = q * (1.0 - s); // exponent of the substituted variable
    let mut acc = NeumaierSum::new();
    for (sigma, w_sigma) in sphere {
        for seg in segs {
            match *seg {
                Seg::Singular { upper } => {
                    if !(upper > 0.0) {
                        continue;
                    }
                    let coef = upper.powf(eq) / eq;
                    let floor = RADIUS_FLOOR_FRACTION * upper;
                    let mut leg = NeumaierSum::new();
                    for &(u, w_u) in radial {
                        // r = upper * u^(1/eq), computed in log space because
                        // 1/eq is huge near s = 1.
                        let r = upper * (u.ln() / eq).exp();
                        let r = r.max(floor);
                        let y = x.add_scaled(sigma, r);
                        let fy = eval(&y)?;
                        let quot = (fy - f_x).abs() / r;
                        leg.add(w_u * powq(quot, q));
                    }
                    acc.add(w_sigma * coef * leg.total());
                }
                Seg::Plain { lo, hi, reject } => {
                    if !(hi > lo) {
                        continue;
                    }
                    let span = hi - lo;
                    let mut leg = NeumaierSum::new();
                    for &(t, w_t) in radial {
                        let r = lo + span * t;
                        let y = x.add_scaled(sigma, r);
                        if reject && !member(&y) {
                            continue;
                        }
                        let fy = eval(&y)?;
                        let diff = (fy - f_x).abs();
                        leg.add(span * w_t * powq(diff, q) * r.powf(eq - 1.0 - q));
                    }
                    acc.add(w_sigma * leg.total());
                }
            }
        }
    }
    let total = acc.total();
    if !total.is_finite() {
        return Err(Error::NonFiniteSample {
            node: x.coords().to_vec(),
            point: x.coords().to_vec(),
        });
    }
    Ok(total)
}

/// Monte Carlo estimator of the singular leg `[0, delta]` of the inner
/// integral, used as an independent cross-check of the deterministic rule.
/// Radii are drawn by inverting the substituted measure
/// (`r = delta * U^{1/(q(1-s))}`), directions uniformly on the sphere.
/// Returns `(estimate, standard_error)`.
#[allow(clippy::too_many_arguments)]
pub fn inner_singular_mc<E, R>(
    x: &Point,
    f_x: f64,
    eval: &E,
    delta: f64,
    s: f64,
    q: f64,
    dim: usize,
    samples: usize,
    rng: &mut R,
) -> Result<(f64, f64)>
where
    E: Fn(&Point) -> Result<f64>,
    R: rand::Rng,
{
    use rand_distr::{Distribution, StandardNormal};
    if samples < 2 {
        return Err(Error::invalid("Monte Carlo cross-check needs at least 2 samples"));
    }
    if !(delta > 0.0) {
        return Ok((0.0, 0.0));
    }
    let eq = q * (1.0 - s);
    let coef = sphere_surface(dim) * delta.powf(eq) / eq;
    let floor = RADIUS_FLOOR_FRACTION * delta;
    let mut mean = NeumaierSum::new();
    let mut sq = NeumaierSum::new();
    for _ in 0..samples {
        // Uniform sphere direction via normalized Gaussians (sign flip for N=1).
        let mut dir = [0.0f64; MAX_DIM];
        loop {
            let mut norm2 = 0.0;
            for d in dir.iter_mut().take(dim) {
                let g: f64 = StandardNormal.sample(rng);
                *d = g;
                norm2 += g * g;
            }
            if norm2 > 1e-12 {
                let n = norm2.sqrt();
                for d in dir.iter_mut().take(dim) {
                    *d /= n;
                }
                break;
            }
        }
        let sigma = Point::from_parts(dir, dim);
        let u: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
        let r = (delta * (u.ln() / eq).exp()).max(floor);
        let y = x.add_scaled(&sigma, r);
        let fy = eval(&y)?;
        let g = powq((fy - f_x).abs() / r, q);
        mean.add(g);
        sq.add(g * g);
    }
    let n = samples as f64;
    let m = mean.total() / n;
    let var = ((sq.total() / n) - m * m).max(0.0) / (n - 1.0);
    Ok((coef * m, coef * var.sqrt()))
}
