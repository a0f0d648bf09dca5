use super::{Discretization, SolverError};
use crate::calderon::MultiTraceVector;
use crate::geometry::Point;
use crate::operators::{eval_potential, PotentialKind};
use crate::C64;

/// `û_j = Ŝ_j(s) γ_N − D̂_j(s) γ_D` from the traces of boundary `j`, at arbitrary points.
/// Inside `Ω_j` this is the field; outside it vanishes up to discretization error.
pub fn reconstruct_from_side(
    disc: &Discretization,
    j: usize,
    s: C64,
    traces: &MultiTraceVector,
    points: &[Point],
) -> Result<Vec<C64>, SolverError> {
    let b = &disc.boundaries[j];
    let m = &disc.media[j];
    let single = eval_potential(PotentialKind::Single, s, b, m, traces.neumann(j), points)?;
    let double = eval_potential(PotentialKind::Double, s, b, m, traces.dirichlet(j), points)?;
    Ok(single.into_iter().zip(double).map(|(a, b)| a - b).collect())
}

/// Field at points, each evaluated from the subdomain that contains it.
pub fn reconstruct_field(
    disc: &Discretization,
    s: C64,
    traces: &MultiTraceVector,
    points: &[Point],
) -> Result<Vec<C64>, SolverError> {
    let mut owner = Vec::with_capacity(points.len());
    for (i, x) in points.iter().enumerate() {
        match disc.boundaries.iter().position(|b| b.contains(x)) {
            Some(j) => owner.push(j),
            None => return Err(SolverError::PointOutside(i)),
        }
    }
    let mut out = vec![C64::default(); points.len()];
    for j in 0..disc.boundaries.len() {
        let idx: Vec<usize> = (0..points.len()).filter(|&i| owner[i] == j).collect();
        if idx.is_empty() {
            continue;
        }
        let pts: Vec<Point> = idx.iter().map(|&i| points[i]).collect();
        for (i, v) in idx.into_iter().zip(reconstruct_from_side(disc, j, s, traces, &pts)?) {
            out[i] = v;
        }
    }
    Ok(out)
}
