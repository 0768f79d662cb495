use super::{BoxError, BoxGrid, BoxSet};
use crate::systems::{euclidean, State};

/// A set argument for [`hausdorff_semimetric`].
#[derive(Debug, Clone, Copy)]
pub enum Cover<'a> {
    Points(&'a [State]),
    /// Box sets are represented by their centers.
    Boxes(&'a BoxGrid, &'a BoxSet),
    /// A closed axis-aligned region `[lo, hi]`.
    Region(&'a [f64], &'a [f64]),
}

impl Cover<'_> {
    fn is_empty(&self) -> bool {
        match self {
            Cover::Points(p) => p.is_empty(),
            Cover::Boxes(_, s) => s.is_empty(),
            Cover::Region(lo, hi) => lo.len() != hi.len() || lo.iter().zip(*hi).any(|(a, b)| a > b),
        }
    }

    /// Half the box diagonal for box covers, zero otherwise.
    fn slack(&self) -> f64 {
        match self {
            Cover::Boxes(g, _) => 0.5 * g.box_diameter(),
            _ => 0.0,
        }
    }

    fn representatives(&self) -> Option<Vec<State>> {
        match self {
            Cover::Points(p) => Some(p.to_vec()),
            Cover::Boxes(g, s) => Some(s.iter().map(|b| g.center(b)).collect()),
            Cover::Region(lo, hi) => {
                let d = lo.len();
                (d < 20).then(|| {
                    (0..1usize << d)
                        .map(|m| (0..d).map(|a| if (m >> a) & 1 == 1 { hi[a] } else { lo[a] }).collect())
                        .collect()
                })
            }
        }
    }

    fn distance(&self, x: &[f64]) -> f64 {
        match self {
            Cover::Points(p) => p.iter().map(|q| euclidean(x, q)).fold(f64::INFINITY, f64::min),
            Cover::Boxes(g, s) => s.iter().map(|b| euclidean(x, &g.center(b))).fold(f64::INFINITY, f64::min),
            Cover::Region(lo, hi) => x
                .iter()
                .enumerate()
                .map(|(a, &v)| {
                    let d = (lo[a] - v).max(v - hi[a]).max(0.0);
                    d * d
                })
                .sum::<f64>()
                .sqrt(),
        }
    }
}

/// `d(A|B)` together with the resolution slack of the box covers involved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Semimetric {
    pub value: f64,
    /// Sum of half box diagonals of the box arguments; the distance between the
    /// covered sets differs from `value` by at most this amount.
    pub box_correction: f64,
}

/// `sup_{a ∈ A} inf_{b ∈ B} |a − b|`.
///
/// A region as first argument is only supported against a region second argument,
/// where the sup of the convex distance function is attained at a corner.
pub fn hausdorff_semimetric(a: Cover<'_>, b: Cover<'_>) -> Result<Semimetric, BoxError> {
    if a.is_empty() || b.is_empty() {
        return Err(BoxError::EmptySet);
    }
    if matches!(a, Cover::Region(..)) && !matches!(b, Cover::Region(..)) {
        return Err(BoxError::InvalidParameter("a region can only be measured against a region".into()));
    }
    let reps = a.representatives().ok_or_else(|| BoxError::InvalidParameter("region dimension too large".into()))?;
    let value = reps.iter().map(|x| b.distance(x)).fold(0.0, f64::max);
    Ok(Semimetric { value, box_correction: a.slack() + b.slack() })
}

/// Distance queries to the closed union of a set of boxes.
#[derive(Debug, Clone)]
pub struct ClosedCover {
    kind: CoverKind,
}

#[derive(Debug, Clone)]
enum CoverKind {
    /// Sorted disjoint intervals.
    Intervals(Vec<(f64, f64)>),
    Boxes(Vec<(Vec<f64>, Vec<f64>)>),
}

impl ClosedCover {
    pub fn new(grid: &BoxGrid, set: &BoxSet) -> Self {
        if grid.dim() == 1 {
            let mut iv: Vec<(f64, f64)> = Vec::new();
            for b in set.iter() {
                let (lo, hi) = (grid.box_lo(b)[0], grid.box_hi(b)[0]);
                match iv.last_mut() {
                    Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
                    _ => iv.push((lo, hi)),
                }
            }
            Self { kind: CoverKind::Intervals(iv) }
        } else {
            Self { kind: CoverKind::Boxes(set.iter().map(|b| (grid.box_lo(b), grid.box_hi(b))).collect()) }
        }
    }

    pub fn is_empty(&self) -> bool {
        match &self.kind {
            CoverKind::Intervals(v) => v.is_empty(),
            CoverKind::Boxes(v) => v.is_empty(),
        }
    }

    /// Infinite for an empty cover.
    pub fn distance(&self, x: &[f64]) -> f64 {
        match &self.kind {
            CoverKind::Intervals(iv) => {
                let v = x[0];
                let i = iv.partition_point(|&(lo, _)| lo <= v);
                let mut best = f64::INFINITY;
                if i > 0 {
                    let (_, hi) = iv[i - 1];
                    best = (v - hi).max(0.0);
                }
                if i < iv.len() {
                    best = best.min(iv[i].0 - v);
                }
                best
            }
            CoverKind::Boxes(bs) => {
                bs.iter().map(|(lo, hi)| Cover::Region(lo, hi).distance(x)).fold(f64::INFINITY, f64::min)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn interval_examples() {
        let d = |a: (f64, f64), b: (f64, f64)| {
            hausdorff_semimetric(Cover::Region(&[a.0], &[a.1]), Cover::Region(&[b.0], &[b.1])).unwrap().value
        };
        assert_eq!(d((0.0, 1.0), (0.0, 2.0)), 0.0);
        assert_eq!(d((0.0, 2.0), (0.0, 1.0)), 1.0);
        assert_eq!(d((0.0, 2.0), (0.0, 2.0)), 0.0);
    }

    #[test]
    fn empty_sets_are_errors() {
        let none: Vec<State> = vec![];
        let one = vec![vec![0.0]];
        assert!(matches!(hausdorff_semimetric(Cover::Points(&none), Cover::Points(&one)), Err(BoxError::EmptySet)));
        assert!(matches!(hausdorff_semimetric(Cover::Points(&one), Cover::Points(&none)), Err(BoxError::EmptySet)));
    }

    #[test]
    fn box_covers_report_correction() {
        let g = BoxGrid::interval(0.0, 4.0, 4).unwrap();
        let a = BoxSet::from_indices(4, [0, 1]);
        let b = BoxSet::from_indices(4, [3]);
        let r = hausdorff_semimetric(Cover::Boxes(&g, &a), Cover::Boxes(&g, &b)).unwrap();
        assert_eq!(r.value, 3.0);
        assert_eq!(r.box_correction, 1.0);
        let pts = vec![vec![3.5]];
        assert_eq!(hausdorff_semimetric(Cover::Points(&pts), Cover::Boxes(&g, &b)).unwrap().value, 0.0);
    }

    #[test]
    fn closed_cover_distances() {
        let g = BoxGrid::interval(-2.0, 2.0, 8).unwrap();
        let s = BoxSet::from_indices(8, [1, 2, 6]);
        let c = ClosedCover::new(&g, &s);
        assert_eq!(c.distance(&[-2.0]), 0.5);
        assert_eq!(c.distance(&[-0.5]), 0.0);
        assert_eq!(c.distance(&[0.0]), 0.5);
        assert_eq!(c.distance(&[2.0]), 0.5);
        assert_eq!(c.distance(&[1.2]), 0.0);
        assert!(ClosedCover::new(&g, &BoxSet::empty(8)).distance(&[0.0]).is_infinite());
        let g2 = BoxGrid::new(vec![0.0, 0.0], vec![2.0, 2.0], vec![2, 2]).unwrap();
        let c2 = ClosedCover::new(&g2, &BoxSet::from_indices(4, [0]));
        assert!((c2.distance(&[2.0, 2.0]) - 2f64.sqrt()).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn zero_iff_contained_and_triangle(
            a in proptest::collection::vec(-3.0f64..3.0, 1..8),
            b in proptest::collection::vec(-3.0f64..3.0, 1..8),
            c in proptest::collection::vec(-3.0f64..3.0, 1..8),
        ) {
            let wrap = |v: &Vec<f64>| v.iter().map(|&x| vec![x]).collect::<Vec<State>>();
            let (pa, pb, pc) = (wrap(&a), wrap(&b), wrap(&c));
            let d = |x: &Vec<State>, y: &Vec<State>| hausdorff_semimetric(Cover::Points(x), Cover::Points(y)).unwrap().value;
            prop_assert!(d(&pa, &pc) <= d(&pa, &pb) + d(&pb, &pc) + 1e-12);
            let mut ab = pa.clone();
            ab.extend(pb.iter().cloned());
            prop_assert_eq!(d(&pa, &ab), 0.0);
            prop_assert_eq!(d(&pa, &pa), 0.0);
        }

        #[test]
        fn cover_distance_matches_brute_force(mask in proptest::collection::vec(any::<bool>(), 16), x in -2.5f64..2.5) {
            let g = BoxGrid::interval(-2.0, 2.0, 16).unwrap();
            let s = BoxSet::from_indices(16, mask.iter().enumerate().filter(|p| *p.1).map(|p| p.0));
            let fast = ClosedCover::new(&g, &s).distance(&[x]);
            let slow = s.iter().map(|b| g.distance_to_box(&[x], b)).fold(f64::INFINITY, f64::min);
            prop_assert!((fast - slow).abs() < 1e-12 || (fast.is_infinite() && slow.is_infinite()));
        }
    }
}
