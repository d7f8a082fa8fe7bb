//! Limit studies built on the seminorm engine: convergence sweeps in `s`,
//! pointwise first-order limits, embedding-bound checks, a regularity
//! detector, truncation tail diagnostics, and the two-parameter study that
//! interleaves interior exhaustion with the `s -> 1` limit.
//!
//! Everything here works on *scaled* quantities: the seminorm power times its
//! vanishing prefactor `(1-s)^{p/q}`. For a function with `p`-integrable
//! gradient the scaled value tends to `K(N,p,q) * int |grad f|^p` as
//! `s -> 1`, where `K` is [`crate::seminorm::bbm_constant`]; for a function
//! of bounded variation and `p = q = 1` the gradient energy is replaced by
//! the total variation. Sweeps are evaluated on an increasing grid of `s`
//! values (dyadic by default) and extrapolated linearly in `1 - s` from the
//! last rows, which cancels the leading error term of both the limit and the
//! quadrature.

use crate::error::{Error, Result};
use crate::functions::{jump_measure, w1p_seminorm, TestFunction};
use crate::geometry::{sample_domain, Domain, Point, SamplingPlan, Truncation};
use crate::quadrature::{
    gauss_legendre_unit, inner_integral, powq, sphere_rule, NeumaierSum, QuadratureConfig,
};
use crate::seminorm::{
    bbm_constant, seminorm_p, truncated_seminorm_p_contributions, variant_segments, SeminormSpec,
    Variant, S_MAX,
};
use serde::Serialize;

/// Thresholds governing study verdicts. All are relative quantities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StudyControls {
    /// Maximum relative step between the last two scaled values for a sweep
    /// to count as converged.
    pub plateau_tol: f64,
    /// Cumulative growth factor (peak over first scaled value) past which a
    /// sweep is a divergence candidate; see [`classify_sequence`].
    pub divergence_factor: f64,
    /// Largest final-step growth factor still compatible with a plateau.
    pub plateau_factor: f64,
    /// Relative tolerance of the pointwise limit check.
    pub pointwise_tol: f64,
}

impl Default for StudyControls {
    fn default() -> Self {
        StudyControls {
            plateau_tol: 0.02,
            divergence_factor: 4.0,
            plateau_factor: 1.25,
            pointwise_tol: 0.01,
        }
    }
}

/// Everything a study needs besides its own parameters.
#[derive(Clone, Copy)]
pub struct StudyInputs<'a> {
    pub domain: &'a Domain,
    pub f: &'a TestFunction,
    pub plan: &'a SamplingPlan,
    pub quad: &'a QuadratureConfig,
    pub seed: u64,
}

/// The dyadic sweep `s_k = 1 - 2^{-k}`, `k = 1..=n`, capped at [`S_MAX`].
pub fn default_s_sequence(n: usize) -> Vec<f64> {
    (1..=n as i32)
        .map(|k| (1.0 - 2.0f64.powi(-k)).min(S_MAX))
        .collect()
}

fn validate_s_values(s_values: &[f64]) -> Result<()> {
    if s_values.is_empty() {
        return Err(Error::invalid("the s sweep needs at least one value"));
    }
    for w in s_values.windows(2) {
        if !(w[0] < w[1]) {
            return Err(Error::invalid("s values must be strictly increasing"));
        }
    }
    for &s in s_values {
        if !(s > 0.0 && s <= S_MAX) {
            return Err(Error::invalid(format!("s values must lie in (0, {S_MAX}]")));
        }
    }
    Ok(())
}

/// Least-squares line `v ~ a + b*(1-s)` through the last up-to-3 points,
/// reported at `1-s = 0` together with the root-mean-square misfit of the
/// line at the fitted points. With one point the value passes through and
/// the misfit is zero; the linear model matches the leading error term of
/// both the limit itself and the inner quadrature, so the extrapolation
/// cancels them to second order. A misfit comparable to the values means
/// the error model failed and the intercept should not be trusted.
fn extrapolate_fit(eps: &[f64], vals: &[f64]) -> (f64, f64) {
    let k = eps.len().min(3);
    let (eps, vals) = (&eps[eps.len() - k..], &vals[vals.len() - k..]);
    if k == 1 {
        return (vals[0], 0.0);
    }
    let n = k as f64;
    let (mut se, mut sv, mut see, mut sev) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..k {
        se += eps[i];
        sv += vals[i];
        see += eps[i] * eps[i];
        sev += eps[i] * vals[i];
    }
    let denom = n * see - se * se;
    let (a, b) = if denom.abs() < 1e-300 {
        (vals[k - 1], 0.0)
    } else {
        (
            (sv * see - se * sev) / denom,
            (n * sev - se * sv) / denom,
        )
    };
    let mut rss = 0.0;
    for i in 0..k {
        let r = a + b * eps[i] - vals[i];
        rss += r * r;
    }
    (a, (rss / n).sqrt())
}

fn extrapolate(eps: &[f64], vals: &[f64]) -> f64 {
    extrapolate_fit(eps, vals).0
}

/// One row of a sweep in `s`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct StudyRow {
    pub s: f64,
    pub one_minus_s: f64,
    /// The seminorm power itself.
    pub raw_p_power: f64,
    /// `(1-s)^{p/q}` times the power: the quantity with a finite limit.
    pub scaled: f64,
    /// Relative deviation of `scaled` from the reference, when one is known.
    pub rel_error: Option<f64>,
}

/// Result of [`convergence_study`].
#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceStudy {
    pub rows: Vec<StudyRow>,
    /// First-order reference the scaled values should approach, if known.
    pub reference: Option<f64>,
    /// Scaled value extrapolated to `s = 1`.
    pub extrapolated: f64,
    /// Root-mean-square misfit of the extrapolation line at its fit points;
    /// large against the scaled values means the linear error model broke.
    pub fit_residual: f64,
    pub rel_error_extrapolated: Option<f64>,
    /// Whether the last step satisfied the plateau tolerance.
    pub converged: bool,
}

/// Sweep the scaled seminorm power over `s_values` and compare against a
/// first-order reference (see [`first_order_reference`] for the usual one).
pub fn convergence_study(
    inputs: &StudyInputs,
    base: &SeminormSpec,
    s_values: &[f64],
    controls: &StudyControls,
    reference: Option<f64>,
) -> Result<ConvergenceStudy> {
    validate_s_values(s_values)?;
    let mut rows = Vec::with_capacity(s_values.len());
    for &s in s_values {
        let spec = base.with_s(s)?;
        let value = seminorm_p(
            inputs.domain,
            inputs.f,
            &spec,
            inputs.plan,
            inputs.quad,
            inputs.seed,
        )?;
        let scaled = spec.scale_factor() * value.value_p;
        rows.push(StudyRow {
            s,
            one_minus_s: 1.0 - s,
            raw_p_power: value.value_p,
            scaled,
            rel_error: reference.map(|r| (scaled - r).abs() / r.abs().max(1e-300)),
        });
    }
    let eps: Vec<f64> = rows.iter().map(|r| r.one_minus_s).collect();
    let vals: Vec<f64> = rows.iter().map(|r| r.scaled).collect();
    let (extrapolated, fit_residual) = extrapolate_fit(&eps, &vals);
    let converged = if rows.len() >= 2 {
        let a = vals[vals.len() - 2];
        let b = vals[vals.len() - 1];
        (b - a).abs() <= controls.plateau_tol * b.abs().max(a.abs()).max(1e-300)
    } else {
        false
    };
    Ok(ConvergenceStudy {
        rows,
        reference,
        extrapolated,
        fit_residual,
        rel_error_extrapolated: reference
            .map(|r| (extrapolated - r).abs() / r.abs().max(1e-300)),
        converged,
    })
}

/// The limit a scaled sweep should reach: `K(N,p,q) * int |grad f|^p` for
/// differentiable functions (integrated over the same, possibly truncated,
/// region the study samples), `K(N,1,1) * |jump set|` for indicators at
/// `p = q = 1` when the jump measure has a closed form, `None` otherwise.
pub fn first_order_reference(
    domain: &Domain,
    f: &TestFunction,
    p: f64,
    q: f64,
    plan: &SamplingPlan,
    seed: u64,
) -> Result<Option<f64>> {
    let k = bbm_constant(domain.dim(), p, q)?;
    let probe = Point::zero(domain.dim())?;
    match f.gradient(&probe) {
        Ok(_) => Ok(Some(k * w1p_seminorm(f, domain, p, plan, seed)?)),
        Err(Error::GradientUnavailable { .. }) => {
            if p == 1.0 && q == 1.0 && plan.truncation.is_none() {
                Ok(jump_measure(f, domain).map(|m| k * m))
            } else {
                Ok(None)
            }
        }
        Err(e) => Err(e),
    }
}

/// One pointwise check: the inner integral at a fixed interior point, scaled
/// by `(1-s)`, swept in `s` and extrapolated against the local target
/// `(C_{N,q}/q) |grad f(x)|^q`.
#[derive(Clone, Debug, Serialize)]
pub struct PointwiseEntry {
    pub point: Point,
    /// `(C_{N,q}/q) |grad f(point)|^q`.
    pub target: f64,
    pub extrapolated: f64,
    pub rel_error: f64,
    pub pass: bool,
    /// `(s, (1-s) * inner integral)` rows.
    pub values: Vec<(f64, f64)>,
}

/// Result of [`pointwise_limit_check`].
#[derive(Clone, Debug, Serialize)]
pub struct PointwiseReport {
    pub entries: Vec<PointwiseEntry>,
    pub all_pass: bool,
}

/// Verify the pointwise first-order limit at chosen interior points, using a
/// restricted variant's inner region (`tilde` or `hat`). The pass tolerance
/// is relative to the target, with an absolute floor of `1e-3` times the
/// largest swept value so that zero-gradient points remain checkable.
pub fn pointwise_limit_check(
    inputs: &StudyInputs,
    base: &SeminormSpec,
    points: &[Point],
    s_values: &[f64],
    controls: &StudyControls,
) -> Result<PointwiseReport> {
    validate_s_values(s_values)?;
    base.validate()?;
    inputs.quad.validate()?;
    inputs.f.validate_for_dim(inputs.domain.dim())?;
    if base.variant == Variant::Full {
        return Err(Error::invalid(
            "the pointwise limit is a statement about the restricted variants; use tilde or hat",
        ));
    }
    if points.is_empty() {
        return Err(Error::invalid("pointwise check needs at least one point"));
    }
    let dim = inputs.domain.dim();
    let moment = crate::seminorm::angular_moment(dim, base.q)?;
    let sphere = sphere_rule(dim, inputs.quad.sphere_order)?;
    let refine = if inputs.f.needs_dense_radial() { 2 } else { 1 };
    let radial = gauss_legendre_unit(inputs.quad.radial_nodes * refine);
    let eval = |y: &Point| Ok(inputs.f.eval(y));
    let member = |_: &Point| true;
    let mut entries = Vec::with_capacity(points.len());
    for x in points {
        let dist = inputs.domain.dist_to_boundary(x)?;
        let grad = inputs.f.gradient(x)?;
        let target = moment / base.q * powq(grad.norm(), base.q);
        let f_x = inputs.f.eval(x);
        let mut values = Vec::with_capacity(s_values.len());
        for &s in s_values {
            let spec = base.with_s(s)?;
            let segs = variant_segments(&spec, dist, 0.0);
            let inner =
                inner_integral(x, f_x, &eval, &member, &segs, s, spec.q, &sphere, &radial)?;
            values.push((s, (1.0 - s) * inner));
        }
        let eps: Vec<f64> = values.iter().map(|(s, _)| 1.0 - s).collect();
        let vals: Vec<f64> = values.iter().map(|(_, v)| *v).collect();
        let extrapolated = extrapolate(&eps, &vals);
        // Scale agreement by the larger of the target and the sweep's own peak
        // magnitude, so a zero-gradient point is judged against how large the
        // rescaled integrals ever got rather than against an absolute epsilon.
        let vmax = vals.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let scale = target.abs().max(vmax).max(1e-300);
        let tol = controls.pointwise_tol * scale;
        let rel_error = (extrapolated - target).abs() / scale;
        entries.push(PointwiseEntry {
            point: *x,
            target,
            extrapolated,
            rel_error,
            pass: (extrapolated - target).abs() <= tol,
            values,
        });
    }
    let all_pass = entries.iter().all(|e| e.pass);
    Ok(PointwiseReport { entries, all_pass })
}

/// Result of [`embedding_bound_check`].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct EmbeddingReport {
    /// Scaled seminorm power `(1-s)^{p/q} * value_p` of the capped variant.
    pub lhs: f64,
    /// `rhs_coefficient * gradient_energy`; infinite in the degenerate regime.
    pub rhs: f64,
    /// `(omega_{N-1} r_cap^{q(1-s)} / (q (1 - q(1-s))))^{p/q}`.
    pub rhs_coefficient: f64,
    /// `int |grad f|^p` over the sampled region.
    pub gradient_energy: f64,
    /// True when `q(1-s) >= 1`, where the bound's constant degenerates and
    /// the comparison is vacuous.
    pub degenerate: bool,
    pub satisfied: bool,
}

/// Check the first-order embedding bound for the capped (`hat`) variant with
/// `q <= p`: the scaled seminorm power is controlled by the gradient energy
/// times an explicit constant. The constant degenerates when `q(1-s) >= 1`
/// (reported, and the bound then holds vacuously).
pub fn embedding_bound_check(inputs: &StudyInputs, spec: &SeminormSpec) -> Result<EmbeddingReport> {
    spec.validate()?;
    if spec.variant != Variant::Hat {
        return Err(Error::invalid("the embedding bound concerns the hat variant"));
    }
    if spec.q > spec.p {
        return Err(Error::invalid(
            "the embedding bound needs q <= p; use the boundedness check for p < q",
        ));
    }
    let value = seminorm_p(
        inputs.domain,
        inputs.f,
        spec,
        inputs.plan,
        inputs.quad,
        inputs.seed,
    )?;
    let lhs = spec.scale_factor() * value.value_p;
    let gradient_energy = w1p_seminorm(inputs.f, inputs.domain, spec.p, inputs.plan, inputs.seed)?;
    let omega = crate::quadrature::sphere_surface(inputs.domain.dim());
    let denom = 1.0 - spec.q * (1.0 - spec.s);
    let degenerate = denom <= 0.0;
    let rhs_coefficient = if degenerate {
        f64::INFINITY
    } else {
        (omega * spec.r_cap.powf(spec.q * (1.0 - spec.s)) / (spec.q * denom)).powf(spec.p / spec.q)
    };
    let rhs = rhs_coefficient * gradient_energy;
    Ok(EmbeddingReport {
        lhs,
        rhs,
        rhs_coefficient,
        gradient_energy,
        degenerate,
        satisfied: degenerate || lhs <= rhs * (1.0 + 1e-9),
    })
}

/// Result of [`embedding_ratio_sweep`].
#[derive(Clone, Debug, Serialize)]
pub struct EmbeddingSweep {
    /// `(s, lhs / gradient_energy)` rows in the order requested.
    pub rows: Vec<(f64, f64)>,
    /// `int |grad f|^p` over the sampled region.
    pub gradient_energy: f64,
    /// Whether the ratio has stopped growing by the end of the sweep.
    pub bounded: bool,
}

/// The `p < q` regime carries no explicit embedding constant, so instead of a
/// one-shot inequality this records the ratio of the scaled capped seminorm
/// power to the gradient energy along `s_values` and reports whether it stays
/// bounded (final step within the plateau factor). It also accepts `q <= p`,
/// where it serves as a constant-free cross-check of
/// [`embedding_bound_check`].
pub fn embedding_ratio_sweep(
    inputs: &StudyInputs,
    base: &SeminormSpec,
    s_values: &[f64],
    controls: &StudyControls,
) -> Result<EmbeddingSweep> {
    base.validate()?;
    if base.variant != Variant::Hat {
        return Err(Error::invalid("the embedding bound concerns the hat variant"));
    }
    validate_s_values(s_values)?;
    if s_values.len() < 2 {
        return Err(Error::invalid("the ratio sweep needs at least two s values"));
    }
    let gradient_energy = w1p_seminorm(inputs.f, inputs.domain, base.p, inputs.plan, inputs.seed)?;
    if gradient_energy <= 0.0 {
        // Constant function: every lhs vanishes and the bound is trivial.
        let rows = s_values.iter().map(|&s| (s, 0.0)).collect();
        return Ok(EmbeddingSweep {
            rows,
            gradient_energy,
            bounded: true,
        });
    }
    let mut rows = Vec::with_capacity(s_values.len());
    for &s in s_values {
        let spec = base.with_s(s)?;
        let value = seminorm_p(
            inputs.domain,
            inputs.f,
            &spec,
            inputs.plan,
            inputs.quad,
            inputs.seed,
        )?;
        rows.push((s, spec.scale_factor() * value.value_p / gradient_energy));
    }
    let last = rows[rows.len() - 1].1;
    let prev = rows[rows.len() - 2].1;
    let bounded = last <= prev * controls.plateau_factor || last <= 1e-300;
    Ok(EmbeddingSweep {
        rows,
        gradient_energy,
        bounded,
    })
}

/// Verdict of [`regularity_detector`] and of sequence classification.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorVerdict {
    /// Scaled values reached a plateau or decayed: consistent with a
    /// first-order (gradient- or variation-bounded) function.
    BoundedSuggestsW1p,
    /// Scaled values piled up a large growth factor — either still climbing
    /// at the end of the sweep, or collapsing after the rise once the grid
    /// stopped resolving them. Consistent with no first-order structure at
    /// the probed scales.
    DivergingSuggestsNotW1p,
    /// Still growing, but too slowly to call.
    Inconclusive,
}

impl DetectorVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            DetectorVerdict::BoundedSuggestsW1p => "bounded_suggests_w1p",
            DetectorVerdict::DivergingSuggestsNotW1p => "diverging_suggests_not_w1p",
            DetectorVerdict::Inconclusive => "inconclusive",
        }
    }
}

/// Classify a sweep of nonnegative scaled values.
///
/// Divergence has two signatures. On a window the grid still resolves, the
/// values pile up a large cumulative factor and are still climbing steeply at
/// the end. Once `1/(1-s)` outruns the resolved scales, true divergence
/// instead shows as a large rise followed by a clear decay, because the mass
/// retreats into a layer thinner than any fixed grid spacing. A single large
/// step is neither: smooth sweeps routinely open with one big ratio while
/// climbing out of a small first value, so only cumulative growth counts.
///
/// Bounded means the final step is no longer growing: a plateau or a decay
/// both support a finite limsup (decay without a prior rise is exactly how a
/// bounded jump-type limit presents on a fixed grid). Everything else is
/// inconclusive. Returns the verdict together with the maximum step ratio and
/// the peak-to-first ratio, which the reports echo.
pub fn classify_sequence(values: &[f64], controls: &StudyControls) -> (DetectorVerdict, f64, f64) {
    const TINY: f64 = 1e-300;
    if values.len() < 2 {
        return (DetectorVerdict::Inconclusive, 1.0, 1.0);
    }
    let peak = values.iter().fold(0.0f64, |a, &b| a.max(b));
    if peak <= TINY {
        // Identically zero sweep: nothing diverges.
        return (DetectorVerdict::BoundedSuggestsW1p, 1.0, 1.0);
    }
    let mut max_ratio: f64 = 0.0;
    for w in values.windows(2) {
        if w[0] > TINY {
            max_ratio = max_ratio.max(w[1] / w[0]);
        } else if w[1] > TINY {
            max_ratio = f64::INFINITY;
        }
    }
    let first = values[0];
    let last = *values.last().unwrap();
    let peak_to_first = if first > TINY {
        peak / first
    } else {
        f64::INFINITY
    };
    let prev = values[values.len() - 2];
    let last_ratio = if prev > TINY {
        last / prev
    } else if last <= TINY {
        1.0
    } else {
        f64::INFINITY
    };
    let turnover =
        peak_to_first >= controls.divergence_factor && last <= peak / controls.plateau_factor;
    let sustained =
        peak_to_first >= controls.divergence_factor && last_ratio > controls.plateau_factor;
    if turnover || sustained {
        return (
            DetectorVerdict::DivergingSuggestsNotW1p,
            max_ratio,
            peak_to_first,
        );
    }
    let verdict = if last_ratio <= controls.plateau_factor {
        DetectorVerdict::BoundedSuggestsW1p
    } else {
        DetectorVerdict::Inconclusive
    };
    (verdict, max_ratio, peak_to_first)
}

/// Result of [`regularity_detector`].
#[derive(Clone, Debug, Serialize)]
pub struct DetectorReport {
    pub rows: Vec<StudyRow>,
    pub max_step_ratio: f64,
    pub peak_to_first: f64,
    pub verdict: DetectorVerdict,
}

/// Probe whether a function behaves like a first-order function on the
/// domain: sweep the scaled interior-ball (`tilde`) seminorm power at `p = q`
/// over `s_values` and classify the growth pattern. Needs at least three
/// sweep values to distinguish growth from a plateau.
pub fn regularity_detector(
    inputs: &StudyInputs,
    p: f64,
    tau: f64,
    s_values: &[f64],
    controls: &StudyControls,
) -> Result<DetectorReport> {
    validate_s_values(s_values)?;
    if s_values.len() < 3 {
        return Err(Error::invalid("the detector needs at least 3 sweep values"));
    }
    let base = SeminormSpec::new(
        s_values[0],
        p,
        p,
        tau,
        f64::INFINITY,
        Variant::Tilde,
    )?;
    let study = convergence_study(inputs, &base, s_values, controls, None)?;
    let vals: Vec<f64> = study.rows.iter().map(|r| r.scaled).collect();
    let (verdict, max_step_ratio, peak_to_first) = classify_sequence(&vals, controls);
    Ok(DetectorReport {
        rows: study.rows,
        max_step_ratio,
        peak_to_first,
        verdict,
    })
}

/// One row of [`tail_mass_diagnostic`].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TailRow {
    /// Truncation index `i` the row describes.
    pub index: u32,
    /// Fraction of the seminorm mass carried by outer nodes outside the
    /// doubled truncation (index `2i`).
    pub tail_share: f64,
}

/// Result of [`tail_mass_diagnostic`].
#[derive(Clone, Debug, Serialize)]
pub struct TailReport {
    /// Index of the truncation actually sampled (1.5x the largest requested).
    pub sample_index: u32,
    /// Total seminorm power over the sampled truncation.
    pub total_p_power: f64,
    pub rows: Vec<TailRow>,
    /// Whether the shares decrease (weakly) along the requested indices.
    pub nonincreasing: bool,
    pub final_share: f64,
}

/// Measure how much of the truncated seminorm mass lives outside interior
/// truncations of increasing index: for each requested `i`, the share of the
/// mass at nodes outside the index-`2i` truncation. A decaying share is the
/// quantitative sign that the exhaustion limit has no mass escaping to the
/// boundary or to infinity. `p = q` (the truncated seminorm's setting).
pub fn tail_mass_diagnostic(
    inputs: &StudyInputs,
    s: f64,
    p: f64,
    indices: &[u32],
) -> Result<TailReport> {
    if indices.is_empty() {
        return Err(Error::invalid("tail diagnostic needs at least one index"));
    }
    if indices.iter().any(|&i| i == 0) {
        return Err(Error::invalid("truncation indices must be at least 1"));
    }
    for w in indices.windows(2) {
        if !(w[0] < w[1]) {
            return Err(Error::invalid("truncation indices must be strictly increasing"));
        }
    }
    let max_i = *indices.last().unwrap();
    let sample_index = (1.5 * f64::from(max_i)).ceil() as u32;
    let contribs = truncated_seminorm_p_contributions(
        inputs.domain,
        inputs.f,
        s,
        p,
        Truncation::Index(sample_index),
        inputs.plan,
        inputs.quad,
        inputs.seed,
    )?;
    let mut total = NeumaierSum::new();
    for (_, v) in &contribs {
        total.add(*v);
    }
    let total = total.total();
    let mut rows = Vec::with_capacity(indices.len());
    for &i in indices {
        let inner_threshold = 1.0 / f64::from(2 * i);
        let ball = f64::from(2 * i);
        let mut tail = NeumaierSum::new();
        for (x, v) in &contribs {
            let inside =
                inputs.domain.signed_distance(x)? < -inner_threshold && x.norm() < ball;
            if !inside {
                tail.add(*v);
            }
        }
        rows.push(TailRow {
            index: i,
            tail_share: if total > 0.0 { tail.total() / total } else { 0.0 },
        });
    }
    let nonincreasing = rows
        .windows(2)
        .all(|w| w[1].tail_share <= w[0].tail_share + 1e-12);
    let final_share = rows.last().unwrap().tail_share;
    Ok(TailReport {
        sample_index,
        total_p_power: total,
        rows,
        nonincreasing,
        final_share,
    })
}

/// One truncation stage of [`double_limit_study`].
#[derive(Clone, Debug, Serialize)]
pub struct StageReport {
    pub truncation: Truncation,
    pub rows: Vec<StudyRow>,
    /// Scaled truncated seminorm power extrapolated to `s = 1`.
    pub extrapolated: f64,
    /// Root-mean-square misfit of the extrapolation line at its fit points.
    pub fit_residual: f64,
    /// `K * int |grad f|^p` over the truncated set, when the gradient exists.
    pub reference: Option<f64>,
    pub rel_error: Option<f64>,
}

/// Result of [`double_limit_study`].
#[derive(Clone, Debug, Serialize)]
pub struct DoubleLimitReport {
    pub stages: Vec<StageReport>,
    /// Whether the extrapolated limits grow (weakly) along the stages, as
    /// set inclusion demands when the stages are passed widest-last.
    pub monotone_nondecreasing: bool,
}

/// Interleave the two limits: for each interior truncation (pass them in
/// widening order), sweep `s` on the truncated full seminorm, extrapolate to
/// `s = 1`, and compare with the first-order energy of the truncated set.
/// The stage limits must grow with the set and exhaust the whole-domain
/// energy; `p = q`.
pub fn double_limit_study(
    inputs: &StudyInputs,
    p: f64,
    truncations: &[Truncation],
    s_values: &[f64],
    controls: &StudyControls,
) -> Result<DoubleLimitReport> {
    validate_s_values(s_values)?;
    if truncations.is_empty() {
        return Err(Error::invalid("double-limit study needs at least one truncation"));
    }
    let k = bbm_constant(inputs.domain.dim(), p, p)?;
    let mut stages = Vec::with_capacity(truncations.len());
    for &t in truncations {
        let mut rows = Vec::with_capacity(s_values.len());
        for &s in s_values {
            let contribs = truncated_seminorm_p_contributions(
                inputs.domain,
                inputs.f,
                s,
                p,
                t,
                inputs.plan,
                inputs.quad,
                inputs.seed,
            )?;
            let mut acc = NeumaierSum::new();
            for (_, v) in &contribs {
                acc.add(*v);
            }
            let raw = acc.total();
            rows.push(StudyRow {
                s,
                one_minus_s: 1.0 - s,
                raw_p_power: raw,
                scaled: (1.0 - s) * raw,
                rel_error: None,
            });
        }
        let eps: Vec<f64> = rows.iter().map(|r| r.one_minus_s).collect();
        let vals: Vec<f64> = rows.iter().map(|r| r.scaled).collect();
        let (extrapolated, fit_residual) = extrapolate_fit(&eps, &vals);
        // First-order energy of the same truncated node set.
        let reference = {
            let plan = SamplingPlan {
                plan: inputs.plan.plan,
                truncation: Some(t),
            };
            match sample_domain(inputs.domain, &plan, inputs.seed) {
                Ok(nodes) => {
                    let mut acc = NeumaierSum::new();
                    let mut ok = true;
                    for (x, w) in &nodes {
                        match inputs.f.gradient(x) {
                            Ok(g) => acc.add(w * powq(g.norm(), p)),
                            Err(Error::GradientUnavailable { .. }) => {
                                ok = false;
                                break;
                            }
                            Err(e) => return Err(e),
                        }
                    }
                    if ok {
                        Some(k * acc.total())
                    } else {
                        None
                    }
                }
                Err(e) => return Err(e),
            }
        };
        let rel_error =
            reference.map(|r| (extrapolated - r).abs() / r.abs().max(1e-300));
        // Fill per-row relative errors against the stage reference.
        if let Some(r) = reference {
            for row in &mut rows {
                row.rel_error = Some((row.scaled - r).abs() / r.abs().max(1e-300));
            }
        }
        stages.push(StageReport {
            truncation: t,
            rows,
            extrapolated,
            fit_residual,
            reference,
            rel_error,
        });
    }
    let monotone_nondecreasing = stages.windows(2).all(|w| {
        w[1].extrapolated
            >= w[0].extrapolated * (1.0 - controls.plateau_tol)
    });
    Ok(DoubleLimitReport {
        stages,
        monotone_nondecreasing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn p2(coords: &[f64]) -> Point {
        Point::new(coords).unwrap()
    }

    fn quick_quad() -> QuadratureConfig {
        QuadratureConfig {
            sphere_order: 16,
            radial_nodes: 8,
        }
    }

    #[test]
    fn dyadic_sequence() {
        let s = default_s_sequence(4);
        assert_eq!(s, vec![0.5, 0.75, 0.875, 0.9375]);
        assert!(default_s_sequence(40).iter().all(|&v| v <= S_MAX));
    }

    #[test]
    fn extrapolation_recovers_lines() {
        // Exact line through 3 points.
        let eps = [0.25, 0.125, 0.0625];
        let vals: Vec<f64> = eps.iter().map(|e| 3.0 + 2.0 * e).collect();
        assert_relative_eq!(extrapolate(&eps, &vals), 3.0, max_relative = 1e-12);
        // Two points.
        assert_relative_eq!(
            extrapolate(&[0.5, 0.25], &[4.0, 3.5]),
            3.0,
            max_relative = 1e-12
        );
        // One point: the value itself.
        assert_eq!(extrapolate(&[0.5], &[7.0]), 7.0);
    }

    #[test]
    fn fit_residual_flags_nonlinear_sweeps() {
        // A line fits itself: residual at rounding level.
        let eps = [0.25, 0.125, 0.0625];
        let on_line: Vec<f64> = eps.iter().map(|e| 3.0 + 2.0 * e).collect();
        let (_, clean) = extrapolate_fit(&eps, &on_line);
        assert!(clean <= 1e-12, "residual {clean} for exact line");
        // A kink the size of the values leaves a residual of that order.
        let (_, kinked) = extrapolate_fit(&eps, &[3.5, 3.25, 13.0]);
        assert!(kinked > 1.0, "residual {kinked} for kinked data");
        // Degenerate fits carry no misfit by construction.
        assert_eq!(extrapolate_fit(&[0.5], &[7.0]).1, 0.0);
    }

    #[test]
    fn sequence_classification() {
        let c = StudyControls::default();
        let bounded = classify_sequence(&[1.0, 1.1, 1.12, 1.125], &c).0;
        assert_eq!(bounded, DetectorVerdict::BoundedSuggestsW1p);
        // Large cumulative growth, still climbing steeply at the end.
        let diverging = classify_sequence(&[1.0, 2.0, 9.0, 30.0], &c).0;
        assert_eq!(diverging, DetectorVerdict::DivergingSuggestsNotW1p);
        // Rise then fall (fixed-grid signature of divergence).
        let turnover = classify_sequence(&[1.0, 2.5, 4.6, 3.0], &c).0;
        assert_eq!(turnover, DetectorVerdict::DivergingSuggestsNotW1p);
        // Still growing but under every threshold.
        let unclear = classify_sequence(&[1.0, 1.5, 2.2, 3.2], &c).0;
        assert_eq!(unclear, DetectorVerdict::Inconclusive);
        // A smooth sweep climbing out of a small first value: one early step
        // is large and the cumulative factor is big, but it settles, so the
        // plateau wins.
        let slow_start = classify_sequence(&[0.002, 0.011, 0.04, 0.055, 0.06, 0.062], &c).0;
        assert_eq!(slow_start, DetectorVerdict::BoundedSuggestsW1p);
        // Decay without a prior rise: a bounded limit whose mass left the
        // grid, not divergence.
        let decay = classify_sequence(&[0.4, 0.35, 0.2, 0.1], &c).0;
        assert_eq!(decay, DetectorVerdict::BoundedSuggestsW1p);
        // All zero.
        let zero = classify_sequence(&[0.0, 0.0, 0.0], &c).0;
        assert_eq!(zero, DetectorVerdict::BoundedSuggestsW1p);
    }

    #[test]
    fn affine_study_converges_to_first_order_energy() {
        let domain = Domain::unit_ball(2).unwrap();
        let f = TestFunction::Linear {
            coeffs: p2(&[1.0, 0.0]),
            offset: 0.0,
        };
        let plan = SamplingPlan::grid(24);
        let quad = quick_quad();
        let inputs = StudyInputs {
            domain: &domain,
            f: &f,
            plan: &plan,
            quad: &quad,
            seed: 0,
        };
        let base = SeminormSpec::new(0.5, 2.0, 2.0, 0.5, f64::INFINITY, Variant::Tilde).unwrap();
        let reference =
            first_order_reference(&domain, &f, 2.0, 2.0, &plan, 0).unwrap();
        assert_relative_eq!(reference.unwrap(), PI / 2.0 * PI, max_relative = 1e-9);
        let s_values = default_s_sequence(8);
        let study = convergence_study(
            &inputs,
            &base,
            &s_values,
            &StudyControls::default(),
            reference,
        )
        .unwrap();
        assert!(study.converged, "rows: {:?}", study.rows);
        assert!(study.rel_error_extrapolated.unwrap() < 0.02);
        // Scaled values increase toward the limit for this closed form.
        assert!(study.rows.last().unwrap().scaled > study.rows[0].scaled);
    }

    #[test]
    fn pointwise_limit_at_interior_points() {
        let domain = Domain::unit_ball(2).unwrap();
        let f = TestFunction::DistanceSquared;
        let plan = SamplingPlan::grid(8); // unused by the pointwise path
        let quad = QuadratureConfig {
            sphere_order: 32,
            radial_nodes: 12,
        };
        let inputs = StudyInputs {
            domain: &domain,
            f: &f,
            plan: &plan,
            quad: &quad,
            seed: 0,
        };
        let base = SeminormSpec::new(0.5, 2.0, 2.0, 0.5, f64::INFINITY, Variant::Tilde).unwrap();
        let pts = [p2(&[0.3, 0.1]), p2(&[0.0, 0.0]), p2(&[-0.5, 0.2])];
        let report = pointwise_limit_check(
            &inputs,
            &base,
            &pts,
            &default_s_sequence(10),
            &StudyControls::default(),
        )
        .unwrap();
        assert!(report.all_pass, "entries: {:?}", report.entries);
        // The zero-gradient point must have target 0 and still pass.
        assert_eq!(report.entries[1].target, 0.0);
    }

    #[test]
    fn embedding_bound_on_affine_function() {
        let domain = Domain::unit_ball(2).unwrap();
        let f = TestFunction::Linear {
            coeffs: p2(&[1.0, 0.0]),
            offset: 0.0,
        };
        let plan = SamplingPlan::grid(48);
        let quad = QuadratureConfig {
            sphere_order: 32,
            radial_nodes: 12,
        };
        let inputs = StudyInputs {
            domain: &domain,
            f: &f,
            plan: &plan,
            quad: &quad,
            seed: 0,
        };
        let spec = SeminormSpec::new(0.9, 2.0, 2.0, 0.5, 0.2, Variant::Hat).unwrap();
        let rep = embedding_bound_check(&inputs, &spec).unwrap();
        assert!(!rep.degenerate);
        assert!(rep.satisfied, "lhs {} rhs {}", rep.lhs, rep.rhs);
        // Frozen closed-form values for this configuration.
        assert_relative_eq!(rep.lhs, 3.151_66, max_relative = 2e-3);
        assert_relative_eq!(rep.rhs, 8.941_66, max_relative = 2e-3);
        // Degenerate regime: q(1-s) >= 1.
        let spec = SeminormSpec::new(0.5, 2.0, 2.0, 0.5, 0.2, Variant::Hat).unwrap();
        let rep = embedding_bound_check(&inputs, &spec).unwrap();
        assert!(rep.degenerate && rep.satisfied && rep.rhs.is_infinite());
    }

    #[test]
    fn detector_separates_smooth_from_rough() {
        let domain = Domain::unit_ball(2).unwrap();
        let plan = SamplingPlan::grid(32);
        let quad = quick_quad();
        let controls = StudyControls::default();
        let s_values = default_s_sequence(7);

        let smooth = TestFunction::GaussianBump {
            center: p2(&[0.1, 0.0]),
            width: 0.5,
        };
        let inputs = StudyInputs {
            domain: &domain,
            f: &smooth,
            plan: &plan,
            quad: &quad,
            seed: 0,
        };
        let rep = regularity_detector(&inputs, 2.0, 0.5, &s_values, &controls).unwrap();
        assert_eq!(
            rep.verdict,
            DetectorVerdict::BoundedSuggestsW1p,
            "rows: {:?}",
            rep.rows
        );

        let rough = TestFunction::Lacunary {
            amplitude_decay: 0.7,
            octaves: 12,
            base_freq: 3.0,
        };
        let inputs = StudyInputs {
            domain: &domain,
            f: &rough,
            plan: &plan,
            quad: &quad,
            seed: 0,
        };
        // A finite lacunary sum emulates a rough function only while 1/(1-s)
        // stays below its top frequency; probe the window where successive
        // octaves are still switching on. (Past it the finite sum honestly
        // settles, as any finite-frequency model must.)
        let rough_window = default_s_sequence(5);
        let rep = regularity_detector(&inputs, 2.0, 0.5, &rough_window, &controls).unwrap();
        assert_eq!(
            rep.verdict,
            DetectorVerdict::DivergingSuggestsNotW1p,
            "rows: {:?}",
            rep.rows
        );
        assert!(rep.peak_to_first >= controls.divergence_factor);
    }

    #[test]
    fn tail_shares_decay_on_a_strip() {
        let domain = Domain::strip(2, 1, 1.0).unwrap();
        let f = TestFunction::Linear {
            coeffs: p2(&[1.0, 0.0]),
            offset: 0.0,
        };
        let plan = SamplingPlan::grid(48);
        let quad = quick_quad();
        let inputs = StudyInputs {
            domain: &domain,
            f: &f,
            plan: &plan,
            quad: &quad,
            seed: 0,
        };
        let report = tail_mass_diagnostic(&inputs, 0.9, 2.0, &[2, 4]).unwrap();
        assert!(report.total_p_power > 0.0);
        assert!(report.nonincreasing, "rows: {:?}", report.rows);
        assert!(report.rows[0].tail_share > report.rows[1].tail_share);
    }

    #[test]
    fn double_limit_stages_grow_toward_full_energy() {
        let domain = Domain::unit_ball(2).unwrap();
        let f = TestFunction::Linear {
            coeffs: p2(&[1.0, 0.0]),
            offset: 0.0,
        };
        let plan = SamplingPlan::grid(24);
        let quad = quick_quad();
        let inputs = StudyInputs {
            domain: &domain,
            f: &f,
            plan: &plan,
            quad: &quad,
            seed: 0,
        };
        let report = double_limit_study(
            &inputs,
            2.0,
            &[Truncation::Lambda(0.4), Truncation::Lambda(0.2)],
            &default_s_sequence(6),
            &StudyControls::default(),
        )
        .unwrap();
        assert!(report.monotone_nondecreasing);
        // Stage limits approximate K * pi * (1 - lambda)^2.
        for (stage, lambda) in report.stages.iter().zip([0.4, 0.2]) {
            let want = PI / 2.0 * PI * (1.0f64 - lambda).powi(2);
            assert_relative_eq!(stage.extrapolated, want, max_relative = 0.1);
            assert!(stage.rel_error.unwrap() < 0.1);
        }
    }
}
