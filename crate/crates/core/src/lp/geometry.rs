//! Convex-geometry primitives on finite point sets: the relative-interior
//! test for the cone they span, the maximal one-sided separator, and convex
//! combinations hitting the origin.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::simplex::{lp_solve, LinearProgram, LpOutcome, Relation, Sense};
use crate::error::{Error, Result};
use crate::rational::{dot, primitive_integer_direction, Rational};

/// Outcome of [`zero_in_relative_interior`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum RiCertificate {
    /// Strictly positive convex weights with `Σ λ_i y_i = 0`.
    Interior { weights: Vec<Rational> },
    /// `H·y ≥ 0` for every point and `> 0` for at least one.
    Separated { h: Vec<Rational> },
}

/// A separator with `H·y ≥ 0` on every point and the largest possible set of
/// strictly positive points.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Separator {
    pub h: Vec<Rational>,
    pub strict: BTreeSet<usize>,
}

fn check_points(points: &[Vec<Rational>]) -> Result<usize> {
    let Some(first) = points.first() else {
        return Err(Error::Precondition("point set is empty".into()));
    };
    let d = first.len();
    if points.iter().any(|p| p.len() != d) {
        return Err(Error::Dimension("points have different dimensions".into()));
    }
    Ok(d)
}

/// Distinct points in first-occurrence order, plus the map from each input
/// index to its distinct representative.
fn dedupe(points: &[Vec<Rational>]) -> (Vec<&Vec<Rational>>, Vec<usize>) {
    let mut seen: BTreeMap<&Vec<Rational>, usize> = BTreeMap::new();
    let mut unique = Vec::new();
    let map = points
        .iter()
        .map(|p| {
            *seen.entry(p).or_insert_with(|| {
                unique.push(p);
                unique.len() - 1
            })
        })
        .collect();
    (unique, map)
}

fn solved(lp: &LinearProgram) -> LpOutcome {
    lp_solve(lp).expect("internally built program is well formed")
}

/// Decides whether the origin lies in the relative interior of the convex
/// cone spanned by `points`, i.e. whether some strictly positive weights
/// combine them to zero.
pub fn zero_in_relative_interior(points: &[Vec<Rational>]) -> Result<(bool, RiCertificate)> {
    let d = check_points(points)?;
    let n = points.len();
    // max t  s.t.  λ_i ≥ t,  Σ λ = 1,  Σ λ_i y_i = 0,  λ ≥ 0.
    let mut c = vec![Rational::zero(); n + 1];
    c[n] = Rational::one();
    let mut lp = LinearProgram::new(Sense::Max, c);
    lp.set_free(n);
    for i in 0..n {
        lp.add_sparse(
            &[(i, Rational::one()), (n, -Rational::one())],
            Relation::Ge,
            Rational::zero(),
        );
    }
    let ones: Vec<(usize, Rational)> = (0..n).map(|i| (i, Rational::one())).collect();
    lp.add_sparse(&ones, Relation::Eq, Rational::one());
    for k in 0..d {
        let row: Vec<(usize, Rational)> = (0..n).map(|i| (i, points[i][k].clone())).collect();
        lp.add_sparse(&row, Relation::Eq, Rational::zero());
    }
    if let LpOutcome::Optimal { value, primal, .. } = solved(&lp) {
        if value.is_positive() {
            return Ok((
                true,
                RiCertificate::Interior {
                    weights: primal[..n].to_vec(),
                },
            ));
        }
    }
    let sep = max_support_separator(points)?;
    debug_assert!(!sep.strict.is_empty());
    Ok((false, RiCertificate::Separated { h: sep.h }))
}

/// Finds `H` with `H·y ≥ 0` on all points whose strict set `{i : H·y_i > 0}`
/// contains the strict set of every other such `H`. `H` is returned as a
/// primitive integer vector, and is zero exactly when the strict set is
/// empty.
pub fn max_support_separator(points: &[Vec<Rational>]) -> Result<Separator> {
    let d = check_points(points)?;
    let (unique, map) = dedupe(points);
    let m = unique.len();
    let mut total = vec![Rational::zero(); d];
    let mut strict = vec![false; m];
    loop {
        // Variables: H (free, d of them), then one capped slack per point
        // that is not strict yet.
        let open: Vec<usize> = (0..m)
            .filter(|&j| !strict[j] && unique[j].iter().any(|v| !v.is_zero()))
            .collect();
        if open.is_empty() {
            break;
        }
        let mut c = vec![Rational::zero(); d + open.len()];
        for s in &mut c[d..] {
            *s = Rational::one();
        }
        let mut lp = LinearProgram::new(Sense::Max, c);
        for k in 0..d {
            lp.set_free(k);
        }
        for s in 0..open.len() {
            lp.set_bounds(d + s, Some(Rational::zero()), Some(Rational::one()));
        }
        let mut slot = vec![None; m];
        for (s, &j) in open.iter().enumerate() {
            slot[j] = Some(d + s);
        }
        for (j, y) in unique.iter().enumerate() {
            let mut terms: Vec<(usize, Rational)> = (0..d).map(|k| (k, y[k].clone())).collect();
            if let Some(s) = slot[j] {
                terms.push((s, -Rational::one()));
            }
            lp.add_sparse(&terms, Relation::Ge, Rational::zero());
        }
        let LpOutcome::Optimal { value, primal, .. } = solved(&lp) else {
            unreachable!("H = 0 is feasible and the slacks are capped");
        };
        if value.is_zero() {
            break;
        }
        let h = &primal[..d];
        for (j, y) in unique.iter().enumerate() {
            if dot(h, y).is_positive() {
                strict[j] = true;
            }
        }
        for (t, hk) in total.iter_mut().zip(h) {
            *t += hk;
        }
    }
    let h = primitive_integer_direction(&total);
    let strict = (0..points.len()).filter(|&i| strict[map[i]]).collect();
    Ok(Separator { h, strict })
}

/// Convex weights `λ` on `points` with `Σ λ_i y_i = 0` and the largest
/// possible weight on `target`; the result is a vertex of that polytope.
/// Requires the origin to lie in the relative interior of the spanned cone.
pub fn zero_convex_combination(points: &[Vec<Rational>], target: usize) -> Result<Vec<Rational>> {
    let d = check_points(points)?;
    if target >= points.len() {
        return Err(Error::Precondition(format!("target index {target} out of range")));
    }
    let (inside, _) = zero_in_relative_interior(points)?;
    if !inside {
        return Err(Error::Precondition(
            "the origin is not in the relative interior of the point cone".into(),
        ));
    }
    let n = points.len();
    let mut c = vec![Rational::zero(); n];
    c[target] = Rational::one();
    let mut lp = LinearProgram::new(Sense::Max, c);
    let ones: Vec<(usize, Rational)> = (0..n).map(|i| (i, Rational::one())).collect();
    lp.add_sparse(&ones, Relation::Eq, Rational::one());
    for k in 0..d {
        let row: Vec<(usize, Rational)> = (0..n).map(|i| (i, points[i][k].clone())).collect();
        lp.add_sparse(&row, Relation::Eq, Rational::zero());
    }
    match solved(&lp) {
        LpOutcome::Optimal { value, primal, .. } if value.is_positive() => Ok(primal),
        _ => Err(Error::InvariantBreach(
            "relative-interior point set admits no combination charging the target".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn pts(v: &[&[i64]]) -> Vec<Vec<Rational>> {
        v.iter().map(|p| p.iter().map(|&x| int(x)).collect()).collect()
    }

    #[test]
    fn symmetric_pair_is_interior() {
        let (inside, cert) = zero_in_relative_interior(&pts(&[&[1], &[-1]])).unwrap();
        assert!(inside);
        assert_eq!(
            cert,
            RiCertificate::Interior {
                weights: vec![rat(1, 2), rat(1, 2)]
            }
        );
    }

    #[test]
    fn one_sided_pair_is_separated() {
        let (inside, cert) = zero_in_relative_interior(&pts(&[&[0], &[-2]])).unwrap();
        assert!(!inside);
        assert_eq!(cert, RiCertificate::Separated { h: vec![int(-1)] });
        let sep = max_support_separator(&pts(&[&[0], &[-2]])).unwrap();
        assert_eq!(sep.h, vec![int(-1)]);
        assert_eq!(sep.strict, [1].into_iter().collect());
    }

    #[test]
    fn segment_in_the_plane_is_relative_interior() {
        let (inside, _) = zero_in_relative_interior(&pts(&[&[1, 0], &[-1, 0]])).unwrap();
        assert!(inside);
        let sep = max_support_separator(&pts(&[&[1, 0], &[-1, 0]])).unwrap();
        assert!(sep.strict.is_empty());
        assert_eq!(sep.h, vec![int(0), int(0)]);
    }

    #[test]
    fn all_zero_points() {
        let (inside, _) = zero_in_relative_interior(&pts(&[&[0, 0], &[0, 0]])).unwrap();
        assert!(inside);
        let sep = max_support_separator(&pts(&[&[0, 0]])).unwrap();
        assert!(sep.strict.is_empty());
    }

    #[test]
    fn three_points_in_the_plane() {
        let p = pts(&[&[1, 1], &[1, -1], &[-1, 0]]);
        let sep = max_support_separator(&p).unwrap();
        assert!(sep.strict.is_empty());
        for y in &p {
            assert!(!dot(&sep.h, y).is_negative());
        }
        let (inside, _) = zero_in_relative_interior(&p).unwrap();
        assert!(inside);
    }

    #[test]
    fn convex_combinations() {
        assert_eq!(
            zero_convex_combination(&pts(&[&[1], &[-1]]), 0).unwrap(),
            vec![rat(1, 2), rat(1, 2)]
        );
        assert_eq!(
            zero_convex_combination(&pts(&[&[2], &[-1]]), 0).unwrap(),
            vec![rat(1, 3), rat(2, 3)]
        );
        assert_eq!(zero_convex_combination(&pts(&[&[0]]), 0).unwrap(), vec![int(1)]);
        assert!(matches!(
            zero_convex_combination(&pts(&[&[0], &[1]]), 0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn empty_and_ragged_inputs() {
        assert!(zero_in_relative_interior(&[]).is_err());
        assert!(max_support_separator(&[vec![int(1)], vec![int(1), int(2)]]).is_err());
    }
}
