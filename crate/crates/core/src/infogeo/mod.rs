//! Fisher geometry of the open probability simplex.

mod autoparallel;
mod divergence;
mod geodesic;
mod point;
mod tensor;

pub use autoparallel::{autoparallel_residual, ON_MANIFOLD_TOL};
pub use divergence::{
    alpha_divergence, alpha_projection, Projection, ProjectionOptions, KL_BRANCH_TOL,
    UNIQUENESS_TOL,
};
pub use geodesic::{
    alpha_geodesic_bvp, alpha_geodesic_ivp, e_geodesic, geodesic_acceleration, m_geodesic,
    GeodesicTrace, DEFAULT_STEPS, MIN_STEPS, SHOOTING_MAX_ITER, SHOOTING_TOL,
};
pub use point::{log_partition, SimplexPoint, INTERIOR_MARGIN, SUM_TOL};
pub use tensor::{
    christoffel, duality_residual, exponential_mixture_christoffel, fisher_metric,
    raised_contraction, Christoffel, CoordinateChart,
};
