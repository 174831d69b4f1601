use std::f64::consts::PI;
use std::fmt::Write as _;

use super::{Domain, Mapping};
use crate::error::{Error, Result};
use crate::hilbert::{BoxSet, ConvexSet, Halfspace, Point};

pub const CATALOG_IDS: [&str; 5] = ["halving", "rotation", "square", "projection", "affine-contraction"];

/// Built-in example mappings.
#[derive(Clone, Debug, PartialEq)]
pub enum CatalogEntry {
    /// `Tx = x/2` on the open half-line `(0, ∞)`.
    Halving,
    /// Rotation of the plane by `theta` about `center`.
    Rotation { theta: f64, center: [f64; 2] },
    /// `Tx = x²` on `[0, 1]`.
    Square,
    /// Metric projection onto `set`, defined on all of R^d.
    Projection { set: ConvexSet },
    /// `Tx = c + rho·R(angle)(x - c)` on the plane.
    AffineContraction { center: [f64; 2], rho: f64, angle: f64 },
}

/// Static description of a catalog entry.
#[derive(Clone, Debug, PartialEq)]
pub struct CatalogInfo {
    pub id: &'static str,
    pub params: &'static str,
    pub domain: &'static str,
    pub fixed_set: &'static str,
    pub attractive_set: &'static str,
    pub lambda: Option<f64>,
}

impl CatalogInfo {
    pub fn all() -> Vec<CatalogInfo> {
        vec![
            CatalogInfo {
                id: "halving",
                params: "(none)",
                domain: "(0, inf)",
                fixed_set: "F(T) = {} (0 is not in C)",
                attractive_set: "A(T) = (-inf, 0]",
                lambda: Some(1.0),
            },
            CatalogInfo {
                id: "rotation",
                params: "theta [, cx, cy]  (center defaults to origin)",
                domain: "R^2",
                fixed_set: "F(T) = {c} (theta not a multiple of 2pi)",
                attractive_set: "A(T) = {c} (theta not a multiple of 2pi)",
                lambda: Some(1.0),
            },
            CatalogInfo {
                id: "square",
                params: "(none)",
                domain: "[0, 1]",
                fixed_set: "F(T) = {0, 1}",
                attractive_set: "A(T) = (-inf, 0]  (1 is fixed but not attractive)",
                lambda: None,
            },
            CatalogInfo {
                id: "projection",
                params: "[c1, ..., cd, r]  ball of radius r about c (default unit disc)",
                domain: "R^d",
                fixed_set: "F(T) = S",
                attractive_set: "A(T) = S",
                lambda: Some(0.0),
            },
            CatalogInfo {
                id: "affine-contraction",
                params: "[rho [, angle [, cx, cy]]]  rho in (0, 1] (defaults 0.5, pi/4, origin)",
                domain: "R^2",
                fixed_set: "F(T) = {c} (unless rho = 1 and angle = 0)",
                attractive_set: "A(T) = {c} (unless rho = 1 and angle = 0)",
                lambda: Some(1.0),
            },
        ]
    }

    pub fn find(id: &str) -> Option<CatalogInfo> {
        Self::all().into_iter().find(|info| info.id == id)
    }

    /// Human-readable multi-line block.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{}", self.id);
        let _ = writeln!(s, "  params:     {}", self.params);
        let _ = writeln!(s, "  domain:     {}", self.domain);
        let _ = writeln!(s, "  fixed set:  {}", self.fixed_set);
        let _ = writeln!(s, "  attractive: {}", self.attractive_set);
        let _ = writeln!(
            s,
            "  lambda:     {}",
            self.lambda.map_or("none".to_string(), |l| l.to_string())
        );
        s
    }

    /// One tab-separated `key=value` record.
    pub fn to_record(&self) -> String {
        format!(
            "id={}\tparams={}\tdomain={}\tfixed={}\tattractive={}\tlambda={}",
            self.id,
            self.params,
            self.domain,
            self.fixed_set,
            self.attractive_set,
            self.lambda.map_or("none".to_string(), |l| l.to_string())
        )
    }
}

/// Rounds trigonometric values within a few ulps of 0 or ±1 so that quarter
/// turns are exact.
fn snap(v: f64) -> f64 {
    const EPS: f64 = 1e-15;
    if v.abs() < EPS {
        0.0
    } else if (v.abs() - 1.0).abs() < EPS {
        v.signum()
    } else {
        v
    }
}

fn rotation_matrix(angle: f64) -> [[f64; 2]; 2] {
    let (s, c) = angle.sin_cos();
    let (s, c) = (snap(s), snap(c));
    [[c, -s], [s, c]]
}

fn is_full_turn(angle: f64) -> bool {
    let r = angle.rem_euclid(2.0 * PI);
    r.abs() < 1e-15 || (2.0 * PI - r).abs() < 1e-15
}

fn param_error(id: &str, msg: impl Into<String>) -> Error {
    Error::Parse(format!("{id}: {}", msg.into()))
}

impl CatalogEntry {
    /// Builds an entry from its textual identifier and parameter list.
    pub fn from_id(id: &str, params: &[f64]) -> Result<CatalogEntry> {
        match id {
            "halving" | "square" => {
                if !params.is_empty() {
                    return Err(param_error(id, "takes no parameters"));
                }
                Ok(if id == "halving" { CatalogEntry::Halving } else { CatalogEntry::Square })
            }
            "rotation" => match params {
                [theta] => Ok(CatalogEntry::Rotation { theta: *theta, center: [0.0, 0.0] }),
                [theta, cx, cy] => Ok(CatalogEntry::Rotation { theta: *theta, center: [*cx, *cy] }),
                _ => Err(param_error(id, "expected theta [, cx, cy]")),
            },
            "projection" => {
                let set = match params {
                    [] => ConvexSet::ball(Point::zeros(2), 1.0)?,
                    [.., r] => ConvexSet::ball(Point::from_slice(&params[..params.len() - 1])?, *r)?,
                };
                if set.dim() == 0 {
                    return Err(param_error(id, "expected c1, ..., cd, r"));
                }
                Ok(CatalogEntry::Projection { set })
            }
            "affine-contraction" => {
                let (rho, angle, center) = match params {
                    [] => (0.5, PI / 4.0, [0.0, 0.0]),
                    [rho] => (*rho, PI / 4.0, [0.0, 0.0]),
                    [rho, angle] => (*rho, *angle, [0.0, 0.0]),
                    [rho, angle, cx, cy] => (*rho, *angle, [*cx, *cy]),
                    _ => return Err(param_error(id, "expected rho [, angle [, cx, cy]]")),
                };
                if !(rho > 0.0 && rho <= 1.0) {
                    return Err(param_error(id, format!("rho must lie in (0, 1], got {rho}")));
                }
                Ok(CatalogEntry::AffineContraction { center, rho, angle })
            }
            other => Err(Error::Parse(format!(
                "unknown mapping id '{other}' (known: {})",
                CATALOG_IDS.join(", ")
            ))),
        }
        .and_then(|entry| {
            if params.iter().all(|p| p.is_finite()) {
                Ok(entry)
            } else {
                Err(param_error(id, "parameters must be finite"))
            }
        })
    }

    pub fn id(&self) -> &'static str {
        match self {
            CatalogEntry::Halving => "halving",
            CatalogEntry::Rotation { .. } => "rotation",
            CatalogEntry::Square => "square",
            CatalogEntry::Projection { .. } => "projection",
            CatalogEntry::AffineContraction { .. } => "affine-contraction",
        }
    }

    pub fn info(&self) -> CatalogInfo {
        CatalogInfo::find(self.id()).expect("every entry has catalog info")
    }

    pub fn mapping(&self) -> Mapping {
        match self {
            CatalogEntry::Halving => Mapping::new(
                "halving",
                Domain::OpenBox(BoxSet::interval(0.0, f64::INFINITY).unwrap()),
                BoxSet::interval(0.0, 5.0).unwrap(),
                |x| x.scale(0.5),
            )
            .with_lambda(1.0)
            .with_known_attractive(ConvexSet::Halfspace(
                Halfspace::new(Point::from(1.0), 0.0).unwrap(),
            )),

            CatalogEntry::Rotation { theta, center } => {
                let c = *center;
                let m = rotation_matrix(*theta);
                let known = if is_full_turn(*theta) {
                    ConvexSet::WholeSpace(2)
                } else {
                    ConvexSet::Singleton(Point::from(c))
                };
                Mapping::new(
                    "rotation",
                    Domain::Closed(ConvexSet::WholeSpace(2)),
                    BoxSet::new(vec![c[0] - 2.0, c[1] - 2.0], vec![c[0] + 2.0, c[1] + 2.0])
                        .unwrap(),
                    move |x| rotate_about(x, &c, &m, 1.0),
                )
                .with_params(vec![*theta, c[0], c[1]])
                .with_lambda(1.0)
                .with_known_attractive(known)
            }

            CatalogEntry::Square => Mapping::new(
                "square",
                Domain::Closed(ConvexSet::Box(BoxSet::interval(0.0, 1.0).unwrap())),
                BoxSet::interval(0.0, 1.0).unwrap(),
                |x| Point::raw(x.coords().iter().map(|v| v * v).collect()),
            )
            .with_known_attractive(ConvexSet::Halfspace(
                Halfspace::new(Point::from(1.0), 0.0).unwrap(),
            )),

            CatalogEntry::Projection { set } => {
                let dim = set.dim();
                let probe = match set.bounding_box() {
                    Some(b) => {
                        let half: Vec<f64> = b
                            .lower()
                            .iter()
                            .zip(b.upper())
                            .map(|(lo, hi)| 1.5 * (hi - lo).max(1.0))
                            .collect();
                        let mid: Vec<f64> =
                            b.lower().iter().zip(b.upper()).map(|(lo, hi)| 0.5 * (lo + hi)).collect();
                        BoxSet::new(
                            mid.iter().zip(&half).map(|(m, h)| m - h).collect(),
                            mid.iter().zip(&half).map(|(m, h)| m + h).collect(),
                        )
                        .unwrap()
                    }
                    None => BoxSet::cube(dim, -3.0, 3.0).unwrap(),
                };
                let params = match set {
                    ConvexSet::Ball(b) => {
                        let mut p = b.center().coords().to_vec();
                        p.push(b.radius());
                        p
                    }
                    _ => Vec::new(),
                };
                let target = set.clone();
                Mapping::new(
                    "projection",
                    Domain::Closed(ConvexSet::WholeSpace(dim)),
                    probe,
                    move |x| target.project(x).map(|r| r.point).unwrap_or_else(|_| x.clone()),
                )
                .with_params(params)
                .with_lambda(0.0)
                .with_known_attractive(set.clone())
            }

            CatalogEntry::AffineContraction { center, rho, angle } => {
                let c = *center;
                let rho = *rho;
                let m = rotation_matrix(*angle);
                let known = if rho == 1.0 && is_full_turn(*angle) {
                    ConvexSet::WholeSpace(2)
                } else {
                    ConvexSet::Singleton(Point::from(c))
                };
                Mapping::new(
                    "affine-contraction",
                    Domain::Closed(ConvexSet::WholeSpace(2)),
                    BoxSet::new(vec![c[0] - 2.0, c[1] - 2.0], vec![c[0] + 2.0, c[1] + 2.0])
                        .unwrap(),
                    move |x| rotate_about(x, &c, &m, rho),
                )
                .with_params(vec![rho, *angle, c[0], c[1]])
                .with_lambda(1.0)
                .with_known_attractive(known)
            }
        }
    }
}

fn rotate_about(x: &Point, c: &[f64; 2], m: &[[f64; 2]; 2], scale: f64) -> Point {
    let dx = x[0] - c[0];
    let dy = x[1] - c[1];
    Point::raw(vec![
        c[0] + scale * (m[0][0] * dx + m[0][1] * dy),
        c[1] + scale * (m[1][0] * dx + m[1][1] * dy),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quarter_turn_is_exact() {
        let t = CatalogEntry::Rotation { theta: PI / 2.0, center: [0.0, 0.0] }.mapping();
        assert_eq!(t.apply(&Point::from([1.0, 0.0])), Point::from([0.0, 1.0]));
        assert_eq!(t.apply(&Point::from([0.0, 1.0])), Point::from([-1.0, 0.0]));
    }

    #[test]
    fn from_id_parses_parameters() {
        assert_eq!(CatalogEntry::from_id("halving", &[]).unwrap(), CatalogEntry::Halving);
        assert_eq!(
            CatalogEntry::from_id("rotation", &[1.0, 2.0, 3.0]).unwrap(),
            CatalogEntry::Rotation { theta: 1.0, center: [2.0, 3.0] }
        );
        let p = CatalogEntry::from_id("projection", &[0.0, 0.0, 0.0, 2.0]).unwrap();
        assert_eq!(p.mapping().dim(), 3);
        assert!(CatalogEntry::from_id("square", &[1.0]).is_err());
        assert!(CatalogEntry::from_id("affine-contraction", &[1.5]).is_err());
        assert!(CatalogEntry::from_id("rotation", &[f64::NAN]).is_err());
        let err = CatalogEntry::from_id("nope", &[]).unwrap_err();
        assert!(err.to_string().contains("unknown mapping id"));
    }

    #[test]
    fn every_id_round_trips() {
        for id in CATALOG_IDS {
            let params: &[f64] = if id == "rotation" { &[1.0] } else { &[] };
            let entry = CatalogEntry::from_id(id, params).unwrap();
            assert_eq!(entry.id(), id);
            assert_eq!(entry.mapping().label(), id);
            assert!(entry.info().attractive_set.starts_with("A(T)"));
        }
    }

    #[test]
    fn full_turn_has_whole_space_attractive_set() {
        let t = CatalogEntry::Rotation { theta: 2.0 * PI, center: [0.0, 0.0] }.mapping();
        assert_eq!(t.known_attractive(), Some(&ConvexSet::WholeSpace(2)));
    }
}
