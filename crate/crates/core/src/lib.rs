//! Numerical engine for fractional seminorms of `W^{s,p}_q` type on open
//! sets described by exact signed distance functions, together with the
//! studies that verify their first-order limits.
//!
//! The crate is organized bottom-up:
//!
//! * [`geometry`] -- domains with exact signed distances, interior
//!   truncations, and deterministic outer sampling plans;
//! * [`quadrature`] -- Gauss-Legendre and sphere rules, compensated
//!   summation, and the singularity-removing inner radial integral;
//! * [`functions`] -- a catalog of test functions with known smoothness
//!   class, gradients, and closed-form first-order energies;
//! * [`seminorm`] -- the three seminorm variants (`full`, `tilde`, `hat`),
//!   the limit constant `K(N, p, q)`, and the truncated-set seminorm;
//! * [`study`] -- convergence sweeps in `s`, pointwise limits, embedding
//!   bounds, a regularity detector, tail diagnostics, and the two-parameter
//!   exhaustion study.
//!
//! Everything is deterministic for a fixed seed: outer Monte Carlo uses a
//! counter-based generator seeded explicitly, all reductions run in a fixed
//! order with compensated summation, and the data-parallel node map (enabled
//! by the default `parallel` feature) produces bit-identical results to the
//! sequential fallback because nodes are mapped independently and reduced
//! sequentially.

pub mod error;
pub mod functions;
pub mod geometry;
pub mod quadrature;
pub mod seminorm;
pub mod study;

pub use error::{Error, Result};
pub use functions::{catalog, exact_w1p, jump_measure, w1p_seminorm, Regularity, TestFunction};
pub use geometry::{
    ball_volume, sample_domain, Domain, DomainKind, OuterPlan, Point, SamplingPlan, Truncation,
    TruncationSet, MAX_DIM,
};
pub use quadrature::{
    gauss_legendre, gauss_legendre_unit, inner_singular_mc, map_nodes, map_nodes_serial,
    sphere_rule, sphere_surface, NeumaierSum, QuadratureConfig,
};
pub use seminorm::{
    angular_moment, angular_moment_closed_form, bbm_constant, bbm_constant_closed_form,
    seminorm_p, seminorm_p_contributions, truncated_seminorm_p,
    truncated_seminorm_p_contributions, SeminormSpec, SeminormValue, Variant, S_MAX,
};
pub use study::{
    classify_sequence, convergence_study, default_s_sequence, double_limit_study,
    embedding_bound_check, embedding_ratio_sweep, first_order_reference, pointwise_limit_check,
    regularity_detector, tail_mass_diagnostic, ConvergenceStudy, DetectorReport, DetectorVerdict,
    DoubleLimitReport, EmbeddingReport, EmbeddingSweep, PointwiseEntry, PointwiseReport,
    StageReport, StudyControls, StudyInputs, StudyRow, TailReport, TailRow,
};
