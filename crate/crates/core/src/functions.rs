//! Test functions with known smoothness class, gradients where they exist,
//! and closed-form first-order energies for use as references.

use crate::error::{Error, Result};
use crate::geometry::{ball_volume, sample_domain, Domain, DomainKind, Point, SamplingPlan, MAX_DIM};
use crate::quadrature::{powq, NeumaierSum};
use serde::Serialize;

/// Smoothness class a test function is known to belong to (on bounded open
/// sets, up to the stated caveats on each variant).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regularity {
    /// Affine: constant gradient.
    Linear,
    /// Smooth with p-integrable gradient for every p.
    SmoothW1p,
    /// Lipschitz but not C^1 (gradient defined a.e.).
    Lipschitz,
    /// Bounded variation with a jump part; not in W^{1,1}.
    BvNotW11,
    /// Not in W^{1,p} for any p >= 1 (and not BV).
    NotW1p,
}

impl Regularity {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regularity::Linear => "linear",
            Regularity::SmoothW1p => "smooth_w1p",
            Regularity::Lipschitz => "lipschitz",
            Regularity::BvNotW11 => "bv_not_w11",
            Regularity::NotW1p => "not_w1p",
        }
    }
}

/// The function catalog. Every variant evaluates on any supported dimension
/// unless noted; see [`TestFunction::validate_for_dim`].
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFunction {
    /// `f(x) = coeffs . x + offset`.
    Linear { coeffs: Point, offset: f64 },
    /// `f(x) = exp(-|x - center|^2 / (2 width^2))`.
    GaussianBump { center: Point, width: f64 },
    /// `f(x) = x_1^2 x_2`: a smooth anisotropic polynomial with non-constant
    /// gradient. Needs dimension >= 2.
    CoordPoly,
    /// `f(x) = |x|^2`, gradient `2x`.
    DistanceSquared,
    /// `f(x) = |x_axis|`: Lipschitz, gradient defined away from the hyperplane
    /// `x_axis = 0` (a null set; the evaluator returns the right-sided choice
    /// on it).
    AbsCoord { axis: usize },
    /// Indicator of the open half space `x_axis > threshold`.
    HalfSpaceIndicator { axis: usize, threshold: f64 },
    /// Indicator of the open ball `|x - center| < radius`.
    BallIndicator { center: Point, radius: f64 },
    /// Band-limited lacunary series
    /// `sum_k decay^k cos(base_freq 2^k x_1)`, `k < octaves`. With
    /// `decay > 1/2` this models a nowhere-differentiable Hoelder function
    /// through scales down to `2^-octaves`; it reports no gradient.
    Lacunary {
        amplitude_decay: f64,
        octaves: u32,
        base_freq: f64,
    },
    /// `factor * inner(x)` (amplitude scaling).
    Scaled {
        inner: Box<TestFunction>,
        factor: f64,
    },
    /// `inner(x - shift)`.
    Translated {
        inner: Box<TestFunction>,
        shift: Point,
    },
}

impl TestFunction {
    /// Evaluate at a point. Infallible for in-range dimensions; pair with
    /// [`TestFunction::validate_for_dim`] at setup time.
    pub fn eval(&self, x: &Point) -> f64 {
        match self {
            TestFunction::Linear { coeffs, offset } => coeffs.dot(x) + offset,
            TestFunction::GaussianBump { center, width } => {
                let d2 = {
                    let d = x.sub(center);
                    d.dot(&d)
                };
                (-d2 / (2.0 * width * width)).exp()
            }
            TestFunction::CoordPoly => {
                let x1 = x.get(0);
                x1 * x1 * x.get(1)
            }
            TestFunction::DistanceSquared => x.dot(x),
            TestFunction::AbsCoord { axis } => x.get(*axis).abs(),
            TestFunction::HalfSpaceIndicator { axis, threshold } => {
                if x.get(*axis) > *threshold {
                    1.0
                } else {
                    0.0
                }
            }
            TestFunction::BallIndicator { center, radius } => {
                if x.dist(center) < *radius {
                    1.0
                } else {
                    0.0
                }
            }
            TestFunction::Lacunary {
                amplitude_decay,
                octaves,
                base_freq,
            } => {
                let mut acc = 0.0;
                let mut amp = 1.0;
                let mut freq = *base_freq;
                for _ in 0..*octaves {
                    acc += amp * (freq * x.get(0)).cos();
                    amp *= amplitude_decay;
                    freq *= 2.0;
                }
                acc
            }
            TestFunction::Scaled { inner, factor } => factor * inner.eval(x),
            TestFunction::Translated { inner, shift } => inner.eval(&x.sub(shift)),
        }
    }

    /// The gradient where the function has one. Indicator and lacunary
    /// variants report [`Error::GradientUnavailable`].
    pub fn gradient(&self, x: &Point) -> Result<Point> {
        let dim = x.dim();
        match self {
            TestFunction::Linear { coeffs, .. } => Ok(*coeffs),
            TestFunction::GaussianBump { center, width } => {
                let d = x.sub(center);
                let f = self.eval(x);
                Ok(d.scale(-f / (width * width)))
            }
            TestFunction::CoordPoly => {
                let mut g = [0.0; MAX_DIM];
                g[0] = 2.0 * x.get(0) * x.get(1);
                g[1] = x.get(0) * x.get(0);
                Ok(Point::from_parts(g, dim))
            }
            TestFunction::DistanceSquared => Ok(x.scale(2.0)),
            TestFunction::AbsCoord { axis } => {
                let mut g = [0.0; MAX_DIM];
                g[*axis] = if x.get(*axis) >= 0.0 { 1.0 } else { -1.0 };
                Ok(Point::from_parts(g, dim))
            }
            TestFunction::HalfSpaceIndicator { .. } | TestFunction::BallIndicator { .. } => {
                Err(Error::GradientUnavailable {
                    name: self.name(),
                    reason: "jump discontinuity; the derivative is a surface measure".into(),
                })
            }
            TestFunction::Lacunary { .. } => Err(Error::GradientUnavailable {
                name: self.name(),
                reason: "models a nowhere-differentiable function".into(),
            }),
            TestFunction::Scaled { inner, factor } => Ok(inner.gradient(x)?.scale(*factor)),
            TestFunction::Translated { inner, shift } => inner.gradient(&x.sub(shift)),
        }
    }

    /// Known smoothness class (wrappers inherit the inner class; amplitude
    /// scaling by zero would collapse to a constant, which we still report
    /// conservatively as the inner class).
    pub fn regularity(&self) -> Regularity {
        match self {
            TestFunction::Linear { .. } => Regularity::Linear,
            TestFunction::GaussianBump { .. }
            | TestFunction::CoordPoly
            | TestFunction::DistanceSquared => Regularity::SmoothW1p,
            TestFunction::AbsCoord { .. } => Regularity::Lipschitz,
            TestFunction::HalfSpaceIndicator { .. } | TestFunction::BallIndicator { .. } => {
                Regularity::BvNotW11
            }
            TestFunction::Lacunary { .. } => Regularity::NotW1p,
            TestFunction::Scaled { inner, .. } | TestFunction::Translated { inner, .. } => {
                inner.regularity()
            }
        }
    }

    /// Short stable identifier for reports and config files.
    pub fn name(&self) -> String {
        match self {
            TestFunction::Linear { .. } => "linear".into(),
            TestFunction::GaussianBump { .. } => "gaussian_bump".into(),
            TestFunction::CoordPoly => "coord_poly".into(),
            TestFunction::DistanceSquared => "distance_squared".into(),
            TestFunction::AbsCoord { .. } => "abs_coord".into(),
            TestFunction::HalfSpaceIndicator { .. } => "half_space_indicator".into(),
            TestFunction::BallIndicator { .. } => "ball_indicator".into(),
            TestFunction::Lacunary { .. } => "lacunary".into(),
            TestFunction::Scaled { inner, .. } => format!("scaled({})", inner.name()),
            TestFunction::Translated { inner, .. } => format!("translated({})", inner.name()),
        }
    }

    /// True for functions with jumps or unresolved fine scales; the seminorm
    /// evaluator densifies its radial rule for them, since the substituted
    /// integrand is then discontinuous rather than smooth.
    pub fn needs_dense_radial(&self) -> bool {
        match self {
            TestFunction::HalfSpaceIndicator { .. }
            | TestFunction::BallIndicator { .. }
            | TestFunction::Lacunary { .. } => true,
            TestFunction::Scaled { inner, .. } | TestFunction::Translated { inner, .. } => {
                inner.needs_dense_radial()
            }
            _ => false,
        }
    }

    /// Check the function's own parameters against an ambient dimension.
    pub fn validate_for_dim(&self, dim: usize) -> Result<()> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::UnsupportedDimension(dim));
        }
        match self {
            TestFunction::Linear { coeffs, .. } => {
                if coeffs.dim() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: coeffs.dim(),
                    });
                }
            }
            TestFunction::GaussianBump { center, width } => {
                if center.dim() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: center.dim(),
                    });
                }
                if !(*width > 0.0) {
                    return Err(Error::invalid("gaussian_bump width must be positive"));
                }
            }
            TestFunction::AbsCoord { axis } | TestFunction::HalfSpaceIndicator { axis, .. } => {
                if *axis >= dim {
                    return Err(Error::invalid("function axis out of range for the dimension"));
                }
            }
            TestFunction::BallIndicator { center, radius } => {
                if center.dim() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: center.dim(),
                    });
                }
                if !(*radius > 0.0) {
                    return Err(Error::invalid("ball_indicator radius must be positive"));
                }
            }
            TestFunction::Lacunary {
                amplitude_decay,
                octaves,
                base_freq,
            } => {
                if !(*amplitude_decay > 0.0 && *amplitude_decay < 1.0) {
                    return Err(Error::invalid("lacunary amplitude_decay must lie in (0,1)"));
                }
                if *octaves == 0 || !(*base_freq > 0.0) {
                    return Err(Error::invalid(
                        "lacunary needs at least one octave and a positive base_freq",
                    ));
                }
            }
            TestFunction::Scaled { inner, factor } => {
                if !factor.is_finite() {
                    return Err(Error::invalid("scaling factor must be finite"));
                }
                inner.validate_for_dim(dim)?;
            }
            TestFunction::Translated { inner, shift } => {
                if shift.dim() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: shift.dim(),
                    });
                }
                inner.validate_for_dim(dim)?;
            }
            TestFunction::CoordPoly => {
                if dim < 2 {
                    return Err(Error::invalid("coord_poly needs dimension >= 2"));
                }
            }
            TestFunction::DistanceSquared => {}
        }
        Ok(())
    }
}

/// Representative catalog instances sized for domains of unit scale. The
/// anisotropic polynomial is omitted in dimension 1, where it is undefined.
pub fn catalog(dim: usize) -> Result<Vec<TestFunction>> {
    let take = |v: &[f64]| Point::new(&v[..dim]);
    let mut list = vec![
        TestFunction::Linear {
            coeffs: take(&[1.3, -0.7, 0.4])?,
            offset: 0.25,
        },
        TestFunction::GaussianBump {
            center: take(&[0.2, -0.1, 0.05])?,
            width: 0.6,
        },
    ];
    if dim >= 2 {
        list.push(TestFunction::CoordPoly);
    }
    list.extend([
        TestFunction::DistanceSquared,
        TestFunction::AbsCoord { axis: 0 },
        TestFunction::HalfSpaceIndicator {
            axis: 0,
            threshold: 0.0,
        },
        TestFunction::BallIndicator {
            center: Point::zero(dim)?,
            radius: 0.45,
        },
        TestFunction::Lacunary {
            amplitude_decay: 0.7,
            octaves: 12,
            base_freq: 3.0,
        },
    ]);
    Ok(list)
}

/// Closed-form `int_domain |grad f|^p dx` for the pairs where one exists.
pub fn exact_w1p(f: &TestFunction, domain: &Domain, p: f64) -> Option<f64> {
    match f {
        TestFunction::Linear { coeffs, .. } => {
            Some(powq(coeffs.norm(), p) * domain.measure()?)
        }
        TestFunction::AbsCoord { .. } => domain.measure(),
        TestFunction::DistanceSquared => {
            // |grad f| = 2|x|; integrable in closed form on origin-centered balls.
            if let DomainKind::Ball { center, radius } = domain.kind() {
                if center.norm() != 0.0 {
                    return None;
                }
                let n = domain.dim() as f64;
                let rho = *radius;
                let shell = crate::quadrature::sphere_surface(domain.dim());
                // int_0^rho (2r)^p r^{N-1} dr * |S^{N-1}|
                Some(shell * 2f64.powf(p) * rho.powf(p + n) / (p + n))
            } else {
                None
            }
        }
        TestFunction::Scaled { inner, factor } => {
            Some(powq(factor.abs(), p) * exact_w1p(inner, domain, p)?)
        }
        _ => None,
    }
}

/// `int_domain |grad f|^p dx`: the closed form when one is known, otherwise
/// quadrature over the sampling plan. Errors if the function has no gradient.
pub fn w1p_seminorm(
    f: &TestFunction,
    domain: &Domain,
    p: f64,
    plan: &SamplingPlan,
    seed: u64,
) -> Result<f64> {
    f.validate_for_dim(domain.dim())?;
    // Closed forms cover the whole domain, so they only apply to untruncated
    // plans; truncated plans integrate over the truncated set by quadrature.
    if plan.truncation.is_none() {
        if let Some(v) = exact_w1p(f, domain, p) {
            return Ok(v);
        }
    }
    let nodes = sample_domain(domain, plan, seed)?;
    let mut acc = NeumaierSum::new();
    for (x, w) in &nodes {
        let g = f.gradient(x)?;
        acc.add(w * powq(g.norm(), p));
    }
    Ok(acc.total())
}

/// Total mass of the jump set of an indicator inside the domain (the length /
/// area of the discontinuity surface times the unit jump height), for the
/// (function, domain) pairs with a closed form. This is the first-order
/// reference for functions of bounded variation, playing the role the
/// gradient energy plays for W^{1,p} functions.
pub fn jump_measure(f: &TestFunction, domain: &Domain) -> Option<f64> {
    match f {
        TestFunction::HalfSpaceIndicator { axis, threshold } => match domain.kind() {
            DomainKind::AxisBox { lo, hi } => {
                if !(lo.get(*axis) < *threshold && *threshold < hi.get(*axis)) {
                    return None;
                }
                let mut m = 1.0;
                for i in 0..domain.dim() {
                    if i != *axis {
                        m *= hi.get(i) - lo.get(i);
                    }
                }
                Some(m)
            }
            DomainKind::Ball { center, radius } => {
                let t = threshold - center.get(*axis);
                if t.abs() >= *radius {
                    return None;
                }
                let cross = (radius * radius - t * t).sqrt();
                match domain.dim() {
                    1 => Some(1.0),
                    2 => Some(2.0 * cross),
                    _ => Some(std::f64::consts::PI * cross * cross),
                }
            }
            _ => None,
        },
        TestFunction::BallIndicator { center, radius } => {
            // Valid when the closed ball sits strictly inside the domain.
            let clearance = domain.dist_to_boundary(center).ok()?;
            if clearance <= *radius {
                return None;
            }
            match domain.dim() {
                1 => Some(2.0),
                2 => Some(2.0 * std::f64::consts::PI * radius),
                _ => Some(2.0 * ball_volume(3, *radius) * 3.0 / radius / 2.0), // 4 pi r^2
            }
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn p(coords: &[f64]) -> Point {
        Point::new(coords).unwrap()
    }

    #[test]
    fn linear_eval_and_gradient() {
        let f = TestFunction::Linear {
            coeffs: p(&[2.0, -1.0]),
            offset: 0.5,
        };
        assert_relative_eq!(f.eval(&p(&[1.0, 3.0])), 2.0 - 3.0 + 0.5);
        assert_eq!(f.gradient(&p(&[0.3, 0.4])).unwrap().coords(), &[2.0, -1.0]);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let fns = catalog(2).unwrap();
        let pts = [p(&[0.31, -0.12]), p(&[-0.4, 0.22]), p(&[0.05, 0.61])];
        let h = 1e-6;
        for f in &fns {
            let g0 = match f.gradient(&pts[0]) {
                Ok(_) => true,
                Err(Error::GradientUnavailable { .. }) => false,
                Err(e) => panic!("unexpected error: {e}"),
            };
            if !g0 {
                continue;
            }
            for x in &pts {
                let g = f.gradient(x).unwrap();
                for axis in 0..2 {
                    let mut e = [0.0; MAX_DIM];
                    e[axis] = 1.0;
                    let dir = Point::from_parts(e, 2);
                    let fp = f.eval(&x.add_scaled(&dir, h));
                    let fm = f.eval(&x.add_scaled(&dir, -h));
                    let fd = (fp - fm) / (2.0 * h);
                    assert_relative_eq!(g.get(axis), fd, epsilon = 1e-6, max_relative = 1e-5);
                }
            }
        }
    }

    #[test]
    fn indicators_and_lacunary_report_no_gradient() {
        for f in [
            TestFunction::HalfSpaceIndicator {
                axis: 0,
                threshold: 0.0,
            },
            TestFunction::BallIndicator {
                center: Point::zero(2).unwrap(),
                radius: 0.3,
            },
            TestFunction::Lacunary {
                amplitude_decay: 0.7,
                octaves: 8,
                base_freq: 3.0,
            },
        ] {
            assert!(matches!(
                f.gradient(&p(&[0.1, 0.1])),
                Err(Error::GradientUnavailable { .. })
            ));
        }
    }

    #[test]
    fn regularity_tags() {
        let fns = catalog(2).unwrap();
        let tags: Vec<Regularity> = fns.iter().map(|f| f.regularity()).collect();
        assert_eq!(
            tags,
            vec![
                Regularity::Linear,
                Regularity::SmoothW1p,
                Regularity::SmoothW1p,
                Regularity::SmoothW1p,
                Regularity::Lipschitz,
                Regularity::BvNotW11,
                Regularity::BvNotW11,
                Regularity::NotW1p,
            ]
        );
        let wrapped = TestFunction::Scaled {
            inner: Box::new(fns[5].clone()),
            factor: 2.0,
        };
        assert_eq!(wrapped.regularity(), Regularity::BvNotW11);
    }

    #[test]
    fn exact_first_order_energy_linear_on_disk() {
        let f = TestFunction::Linear {
            coeffs: p(&[3.0, 4.0]),
            offset: 1.0,
        };
        let d = Domain::unit_ball(2).unwrap();
        // |grad f| = 5, area pi, p = 2 -> 25 pi.
        assert_relative_eq!(exact_w1p(&f, &d, 2.0).unwrap(), 25.0 * PI);
    }

    #[test]
    fn quadrature_energy_matches_closed_form() {
        let d = Domain::unit_ball(2).unwrap();
        let f = TestFunction::DistanceSquared;
        let exact = exact_w1p(&f, &d, 2.0).unwrap();
        assert_relative_eq!(exact, 2.0 * PI, max_relative = 1e-14); // 2pi*4/4
        // Force the quadrature path through a gaussian (no closed form).
        let g = TestFunction::GaussianBump {
            center: Point::zero(2).unwrap(),
            width: 0.5,
        };
        let plan = SamplingPlan::grid(96);
        let num = w1p_seminorm(&g, &d, 2.0, &plan, 0).unwrap();
        // int |grad g|^2 over R^2 for this profile, restricted to the unit
        // disk: computed by 1-d radial reduction int_0^1 (r/w^2)^2
        // exp(-r^2/w^2) 2 pi r dr, w = 0.5.
        let w2: f64 = 0.25;
        let radial = |r: f64| (r / w2).powi(2) * (-r * r / w2).exp() * 2.0 * PI * r;
        // Composite Simpson with many panels as an independent check.
        let n = 4000;
        let h = 1.0 / n as f64;
        let mut simpson = radial(0.0) + radial(1.0);
        for k in 1..n {
            simpson += radial(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        simpson *= h / 3.0;
        assert_relative_eq!(num, simpson, max_relative = 1e-6);
    }

    #[test]
    fn jump_measures_for_indicator_pairs() {
        let square = Domain::axis_box(p(&[-0.5, -0.5]), p(&[0.5, 0.5])).unwrap();
        let half = TestFunction::HalfSpaceIndicator {
            axis: 0,
            threshold: 0.0,
        };
        assert_relative_eq!(jump_measure(&half, &square).unwrap(), 1.0);

        let disk = Domain::unit_ball(2).unwrap();
        assert_relative_eq!(jump_measure(&half, &disk).unwrap(), 2.0);

        let ball_ind = TestFunction::BallIndicator {
            center: Point::zero(2).unwrap(),
            radius: 0.45,
        };
        assert_relative_eq!(jump_measure(&ball_ind, &disk).unwrap(), 2.0 * PI * 0.45);
        // Ball touching the boundary: no closed form claimed.
        let big = TestFunction::BallIndicator {
            center: Point::zero(2).unwrap(),
            radius: 1.5,
        };
        assert!(jump_measure(&big, &disk).is_none());
    }

    #[test]
    fn lacunary_is_bounded_and_validated() {
        let f = TestFunction::Lacunary {
            amplitude_decay: 0.7,
            octaves: 12,
            base_freq: 3.0,
        };
        f.validate_for_dim(2).unwrap();
        let bound: f64 = (0..12).map(|k| 0.7f64.powi(k)).sum();
        for t in 0..100 {
            let x = p(&[t as f64 * 0.02 - 1.0, 0.3]);
            assert!(f.eval(&x).abs() <= bound + 1e-12);
        }
        let bad = TestFunction::Lacunary {
            amplitude_decay: 1.2,
            octaves: 4,
            base_freq: 1.0,
        };
        assert!(bad.validate_for_dim(2).is_err());
    }

    #[test]
    fn wrappers_compose() {
        let base = TestFunction::DistanceSquared;
        let f = TestFunction::Translated {
            inner: Box::new(TestFunction::Scaled {
                inner: Box::new(base),
                factor: 3.0,
            }),
            shift: p(&[1.0, 0.0]),
        };
        // f(x) = 3 |x - (1,0)|^2
        assert_relative_eq!(f.eval(&p(&[2.0, 2.0])), 3.0 * 5.0);
        let g = f.gradient(&p(&[2.0, 2.0])).unwrap();
        assert_eq!(g.coords(), &[6.0, 12.0]);
    }
}
