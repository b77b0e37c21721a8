//! Rayon front end for the pair integrator.

use cpq_core::{CurvedTriangle, DensityPolynomial, IntegralResult, PairIntegrator, PairKernel, RegularizationLevel};
use rayon::prelude::*;

use crate::error::Result;

/// Same result as [`PairIntegrator::integrate`]; outer nodes are spread over
/// the current rayon pool and summed in node order, so the value does not
/// depend on the thread count.
#[allow(clippy::too_many_arguments)]
pub fn integrate_pair_par(
    pi: &PairIntegrator,
    tri_x: &CurvedTriangle,
    tri_y: &CurvedTriangle,
    dens_x: &DensityPolynomial,
    dens_y: &DensityPolynomial,
    level: Option<RegularizationLevel>,
    kernel: PairKernel,
) -> Result<IntegralResult> {
    let terms = (0..pi.outer_nodes().len())
        .into_par_iter()
        .map(|i| pi.outer_term(tri_x, tri_y, dens_x, dens_y, level, kernel, i))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(pi.assemble(terms, level))
}
