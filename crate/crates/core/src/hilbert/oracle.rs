//! Grid-search projection, used as an independent check on Dykstra.

use super::point::Point;
use super::sets::{BoxSet, ConvexSet};
use crate::error::{Error, Result};
use crate::par;

const MEMBERSHIP_TOL: f64 = 1e-12;

/// Nearest feasible grid point to `x` over a grid of spacing `grid_step`
/// covering `probe` (or the bounding box of the sets when `probe` is `None`).
///
/// Accuracy is O(grid_step). Limited to dimension 3; the grid is scanned in
/// parallel and ties go to the first grid point in row-major order.
pub fn brute_force_project(
    sets: &[ConvexSet],
    x: &Point,
    grid_step: f64,
    probe: Option<&BoxSet>,
) -> Result<Point> {
    if sets.is_empty() {
        return Err(Error::EmptyInput("brute_force_project needs at least one set"));
    }
    let dim = x.dim();
    if dim > 3 {
        return Err(Error::Precondition(format!("grid oracle limited to dim <= 3, got {dim}")));
    }
    if !(grid_step > 0.0) {
        return Err(Error::Precondition(format!("grid step must be positive, got {grid_step}")));
    }
    for s in sets {
        x.check_dim(s.dim())?;
    }
    let derived;
    let probe = match probe {
        Some(b) => b,
        None => {
            derived = sets
                .iter()
                .filter_map(ConvexSet::bounding_box)
                .try_fold(None::<BoxSet>, |acc, b| match acc {
                    None => Some(Some(b)),
                    Some(a) => a.meet(&b).map(Some),
                })
                .flatten()
                .ok_or_else(|| Error::Precondition("no bounded probe box available".into()))?;
            &derived
        }
    };
    probe.is_bounded().then_some(()).ok_or_else(|| {
        Error::Precondition("probe box must be bounded".into())
    })?;
    x.check_dim(probe.dim())?;

    let counts: Vec<usize> = probe
        .lower()
        .iter()
        .zip(probe.upper())
        .map(|(lo, hi)| ((hi - lo) / grid_step).floor() as usize + 1)
        .collect();
    let total: usize = counts.iter().product();
    let node = |mut flat: usize| -> Point {
        let mut coords = vec![0.0; dim];
        for axis in (0..dim).rev() {
            let i = flat % counts[axis];
            flat /= counts[axis];
            coords[axis] = probe.lower()[axis] + i as f64 * grid_step;
        }
        Point::raw(coords)
    };

    let best = par::argmax(total, |flat| {
        let y = node(flat);
        if sets.iter().all(|s| s.contains(&y, MEMBERSHIP_TOL)) {
            -x.dist_sq(&y)
        } else {
            f64::NEG_INFINITY
        }
    });
    match best {
        Some((flat, v)) if v > f64::NEG_INFINITY => Ok(node(flat)),
        _ => Err(Error::NoFeasibleGridPoint),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::sets::Halfspace;

    #[test]
    fn halfspace_boundary_in_one_dimension() {
        let sets = [ConvexSet::Halfspace(Halfspace::new(Point::from(1.0), 0.0).unwrap())];
        let probe = BoxSet::interval(-3.0, 3.0).unwrap();
        let p = brute_force_project(&sets, &Point::from(2.0), 0.001, Some(&probe)).unwrap();
        assert!(p[0].abs() <= 0.001, "{p}");
    }

    #[test]
    fn unit_ball_radial_case() {
        let sets = [ConvexSet::ball(Point::zeros(2), 1.0).unwrap()];
        let p = brute_force_project(&sets, &Point::from([2.0, 0.0]), 0.001, None).unwrap();
        assert!(p.dist(&Point::from([1.0, 0.0])) <= 0.001, "{p}");
    }

    #[test]
    fn lens_oracle_value() {
        // Reference for the Dykstra lens test: nearest point of the lens
        // {|z| <= 1} ∩ {z1 >= 0.5} to (-1, 0).
        let sets = [
            ConvexSet::ball(Point::zeros(2), 1.0).unwrap(),
            ConvexSet::Halfspace(Halfspace::new(Point::from([-1.0, 0.0]), -0.5).unwrap()),
        ];
        let p = brute_force_project(&sets, &Point::from([-1.0, 0.0]), 0.001, None).unwrap();
        assert!(p.dist(&Point::from([0.5, 0.0])) <= 0.002, "{p}");
    }

    #[test]
    fn errors() {
        let ball = [ConvexSet::ball(Point::zeros(4), 1.0).unwrap()];
        assert!(matches!(
            brute_force_project(&ball, &Point::zeros(4), 0.1, None),
            Err(Error::Precondition(_))
        ));
        let half = [ConvexSet::Halfspace(Halfspace::new(Point::from(1.0), 0.0).unwrap())];
        assert!(matches!(
            brute_force_project(&half, &Point::from(1.0), 0.1, None),
            Err(Error::Precondition(_))
        ));
        let probe = BoxSet::interval(1.0, 2.0).unwrap();
        assert!(matches!(
            brute_force_project(&half, &Point::from(1.5), 0.1, Some(&probe)),
            Err(Error::NoFeasibleGridPoint)
        ));
    }
}
