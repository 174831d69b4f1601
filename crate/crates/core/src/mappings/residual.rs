//! Sample-based residuals of the defining inequalities.
//!
//! A passing report certifies an inequality only on the points checked. Every
//! report carries the inputs that produced the largest violation.

use std::fmt;

use super::Mapping;
use crate::error::{Error, Result};
use crate::hilbert::Point;
use crate::par;

pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct ResidualReport {
    pub max_violation: f64,
    /// Inputs at the maximum: `[x]`, `[x, z]` or `[x, y]` depending on the check.
    pub witness: Vec<Point>,
    pub samples_checked: usize,
    pub passed: bool,
    pub tol: f64,
    /// Points excluded from pass/fail accounting as boundary-ambiguous.
    pub ambiguous: usize,
    pub seed: Option<u64>,
}

impl ResidualReport {
    pub(crate) fn from_max(best: (usize, f64), witness: Vec<Point>, n: usize, tol: f64) -> Self {
        let max_violation = best.1;
        Self {
            max_violation,
            witness,
            samples_checked: n,
            passed: max_violation <= tol,
            tol,
            ambiguous: 0,
            seed: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }
}

impl fmt::Display for ResidualReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} max_violation={:.6e} tol={:e} samples={}",
            if self.passed { "PASS" } else { "FAIL" },
            self.max_violation,
            self.tol,
            self.samples_checked
        )?;
        if self.ambiguous > 0 {
            write!(f, " ambiguous={}", self.ambiguous)?;
        }
        if let Some(seed) = self.seed {
            write!(f, " seed={seed}")?;
        }
        write!(f, " witness=[")?;
        for (i, w) in self.witness.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{w}")?;
        }
        write!(f, "]")
    }
}

fn check_samples(t: &Mapping, samples: &[Point]) -> Result<()> {
    samples.iter().try_for_each(|x| t.require_in_domain(x))
}

/// True iff `|Tx - x| <= tol`.
pub fn is_fixed_point(t: &Mapping, x: &Point, tol: f64) -> Result<bool> {
    Ok(t.evaluate(x)?.dist(x) <= tol)
}

/// `max_x |Tx - z| - |x - z|` over the samples.
pub fn attractive_residual(t: &Mapping, z: &Point, samples: &[Point], tol: f64) -> Result<ResidualReport> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("attractive_residual needs samples"));
    }
    z.check_dim(t.dim())?;
    check_samples(t, samples)?;
    let best = par::argmax(samples.len(), |i| {
        let x = &samples[i];
        t.apply(x).dist(z) - x.dist(z)
    })
    .expect("non-empty");
    Ok(ResidualReport::from_max(best, vec![samples[best.0].clone()], samples.len(), tol))
}

/// `max_{x, z} |Tx - z| - |x - z|` over samples `x` and reference points `z`.
pub fn quasinonexpansive_residual(
    t: &Mapping,
    f_points: &[Point],
    samples: &[Point],
    tol: f64,
) -> Result<ResidualReport> {
    if f_points.is_empty() {
        return Err(Error::EmptyInput("quasinonexpansive_residual needs reference points"));
    }
    if samples.is_empty() {
        return Err(Error::EmptyInput("quasinonexpansive_residual needs samples"));
    }
    check_samples(t, samples)?;
    for z in f_points {
        z.check_dim(t.dim())?;
    }
    let images: Vec<Point> = par::map(samples, |x| t.apply(x));
    let m = f_points.len();
    let n = samples.len() * m;
    let best = par::argmax(n, |k| {
        let (x, tx, z) = (&samples[k / m], &images[k / m], &f_points[k % m]);
        tx.dist(z) - x.dist(z)
    })
    .expect("non-empty");
    let witness = vec![samples[best.0 / m].clone(), f_points[best.0 % m].clone()];
    Ok(ResidualReport::from_max(best, witness, n, tol))
}

fn pair_residual(
    t: &Mapping,
    pairs: &[(Point, Point)],
    tol: f64,
    name: &'static str,
    excess: impl Fn(&Point, &Point, &Point, &Point) -> f64 + Sync + Send,
) -> Result<ResidualReport> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput(name));
    }
    for (x, y) in pairs {
        t.require_in_domain(x)?;
        t.require_in_domain(y)?;
    }
    let best = par::argmax(pairs.len(), |i| {
        let (x, y) = &pairs[i];
        excess(x, &t.apply(x), y, &t.apply(y))
    })
    .expect("non-empty");
    let (x, y) = &pairs[best.0];
    Ok(ResidualReport::from_max(best, vec![x.clone(), y.clone()], pairs.len(), tol))
}

/// `max |Tx-Ty|² - |x-y|² - 2(1-λ)⟨x-Tx, y-Ty⟩` over the pairs.
pub fn lambda_hybrid_residual(
    t: &Mapping,
    lambda: f64,
    pairs: &[(Point, Point)],
    tol: f64,
) -> Result<ResidualReport> {
    pair_residual(t, pairs, tol, "lambda_hybrid_residual needs pairs", |x, tx, y, ty| {
        let x_move = x - tx;
        let y_move = y - ty;
        tx.dist_sq(ty) - x.dist_sq(y) - 2.0 * (1.0 - lambda) * x_move.dot(&y_move)
    })
}

/// The same inequality in the form
/// `|Tx-Ty|² <= |x-Ty|² + |Ty-y|² + 2⟨λx + (1-λ)Tx - Ty, Ty-y⟩`.
pub fn lambda_hybrid_equiv_residual(
    t: &Mapping,
    lambda: f64,
    pairs: &[(Point, Point)],
    tol: f64,
) -> Result<ResidualReport> {
    pair_residual(t, pairs, tol, "lambda_hybrid_equiv_residual needs pairs", |x, tx, y, ty| {
        let blend = &(&x.scale(lambda) + &tx.scale(1.0 - lambda)) - ty;
        let y_step = ty - y;
        tx.dist_sq(ty) - (x.dist_sq(ty) + y_step.norm_sq() + 2.0 * blend.dot(&y_step))
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::hilbert::ConvexSet;
    use crate::mappings::{random_pairs, random_points, CatalogEntry};

    const TOL: f64 = DEFAULT_RESIDUAL_TOL;

    fn pts(v: &[f64]) -> Vec<Point> {
        v.iter().map(|&x| Point::from(x)).collect()
    }

    fn rotation(theta: f64) -> Mapping {
        CatalogEntry::Rotation { theta, center: [0.0, 0.0] }.mapping()
    }

    #[test]
    fn fixed_point_examples() {
        let sq = CatalogEntry::Square.mapping();
        assert!(is_fixed_point(&sq, &Point::from(1.0), 1e-9).unwrap());
        assert!(!is_fixed_point(&sq, &Point::from(0.5), 1e-9).unwrap());
        assert!(is_fixed_point(&rotation(PI / 3.0), &Point::from([0.0, 0.0]), 1e-9).unwrap());
        assert!(matches!(
            is_fixed_point(&CatalogEntry::Halving.mapping(), &Point::from(-1.0), 1e-9),
            Err(Error::OutsideDomain { .. })
        ));
    }

    #[test]
    fn attractive_residual_examples() {
        let h = CatalogEntry::Halving.mapping();
        let r = attractive_residual(&h, &Point::from(0.0), &pts(&[0.1, 1.0, 2.0, 5.0]), TOL).unwrap();
        assert!(r.passed && r.max_violation <= 0.0);

        let r = attractive_residual(&h, &Point::from(0.5), &pts(&[0.5, 1.0, 2.0]), TOL).unwrap();
        assert!(!r.passed);
        assert_eq!(r.max_violation, 0.25);
        assert_eq!(r.witness, vec![Point::from(0.5)]);

        let sq = CatalogEntry::Square.mapping();
        let r = attractive_residual(&sq, &Point::from(1.0), &pts(&[0.5, 0.9]), TOL).unwrap();
        assert!(!r.passed);
        assert_eq!(r.max_violation, 0.25);
        assert_eq!(r.witness, vec![Point::from(0.5)]);
    }

    #[test]
    fn attractive_residual_errors() {
        let h = CatalogEntry::Halving.mapping();
        assert!(matches!(attractive_residual(&h, &Point::from(0.0), &[], TOL), Err(Error::EmptyInput(_))));
        assert!(matches!(
            attractive_residual(&h, &Point::from(0.0), &pts(&[0.0]), TOL),
            Err(Error::OutsideDomain { .. })
        ));
    }

    #[test]
    fn quasinonexpansive_examples() {
        let rot = rotation(PI / 2.0);
        let samples = random_points(&rot, 50, 3);
        let r = quasinonexpansive_residual(&rot, &[Point::from([0.0, 0.0])], &samples, TOL).unwrap();
        assert!(r.passed);

        let sq = CatalogEntry::Square.mapping();
        let grid: Vec<Point> = (0..=100).map(|i| Point::from(i as f64 / 100.0)).collect();
        assert!(quasinonexpansive_residual(&sq, &[Point::from(0.0)], &grid, TOL).unwrap().passed);

        let r = quasinonexpansive_residual(&sq, &[Point::from(1.0)], &pts(&[0.5]), TOL).unwrap();
        assert!(!r.passed);
        assert_eq!(r.max_violation, 0.25);
        assert_eq!(r.witness, vec![Point::from(0.5), Point::from(1.0)]);
        assert!(quasinonexpansive_residual(&sq, &[], &grid, TOL).is_err());
    }

    #[test]
    fn lambda_hybrid_examples() {
        let h = CatalogEntry::Halving.mapping();
        let pairs = random_pairs(&h, 200, 11);
        assert!(lambda_hybrid_residual(&h, 1.0, &pairs, TOL).unwrap().passed);

        let rot = rotation(PI / 2.0);
        let pairs = random_pairs(&rot, 200, 12);
        let r = lambda_hybrid_residual(&rot, 1.0, &pairs, TOL).unwrap();
        assert!(r.passed);
        assert_eq!(r.max_violation, 0.0);

        let proj = CatalogEntry::Projection { set: ConvexSet::ball(Point::zeros(2), 1.0).unwrap() }
            .mapping();
        let pairs = random_pairs(&proj, 200, 13);
        // firmly nonexpansive: nonspreading (λ = 0) and nonexpansive (λ = 1)
        assert!(lambda_hybrid_residual(&proj, 0.0, &pairs, TOL).unwrap().passed);
        assert!(lambda_hybrid_residual(&proj, 1.0, &pairs, TOL).unwrap().passed);
        // two far points with equal displacement break λ = 2
        let far = [(Point::from([3.0, 0.0]), Point::from([3.0, 0.1]))];
        let r = lambda_hybrid_residual(&proj, 2.0, &far, TOL).unwrap();
        assert!(!r.passed);
        assert!(r.max_violation > 1.0);
        assert!(lambda_hybrid_residual(&proj, 0.0, &[], TOL).is_err());
    }

    #[test]
    fn equivalent_form_matches_direct_form() {
        for (t, seed) in [
            (rotation(PI / 2.0), 21),
            (CatalogEntry::Halving.mapping(), 22),
            (CatalogEntry::Square.mapping(), 23),
        ] {
            for lambda in [-1.0, 0.0, 0.5, 1.0, 2.0] {
                for pair in random_pairs(&t, 200, seed) {
                    let pair = [pair];
                    let a = lambda_hybrid_residual(&t, lambda, &pair, TOL).unwrap();
                    let b = lambda_hybrid_equiv_residual(&t, lambda, &pair, TOL).unwrap();
                    assert!((a.max_violation - b.max_violation).abs() <= 1e-9);
                }
            }
        }
    }

    #[test]
    fn forms_coincide_when_y_is_fixed() {
        let sq = CatalogEntry::Square.mapping();
        let pair = [(Point::from(0.3), Point::from(1.0))];
        let a = lambda_hybrid_residual(&sq, 0.7, &pair, TOL).unwrap();
        let b = lambda_hybrid_equiv_residual(&sq, 0.7, &pair, TOL).unwrap();
        assert_eq!(a.max_violation, b.max_violation);
    }

    #[test]
    fn report_display_names_witness() {
        let sq = CatalogEntry::Square.mapping();
        let r = attractive_residual(&sq, &Point::from(1.0), &pts(&[0.5]), TOL).unwrap().with_seed(9);
        let s = r.to_string();
        assert!(s.starts_with("FAIL"));
        assert!(s.contains("witness=[(0.5)]"));
        assert!(s.contains("seed=9"));
    }
}
