use serde::{Deserialize, Serialize};

use super::BoxError;
use crate::systems::State;

/// Relative tolerance (in box widths) for closed-box membership tests.
pub const FACE_TOLERANCE: f64 = 1e-9;

/// Uniform tiling of an axis-aligned box `[lo, hi]` into `depth[a]` cells per axis.
///
/// Box ids are row-major in the integer coordinates, last axis fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct BoxGrid {
    lo: Vec<f64>,
    hi: Vec<f64>,
    depth: Vec<usize>,
    width: Vec<f64>,
    strides: Vec<usize>,
    len: usize,
}

#[derive(Serialize, Deserialize)]
struct GridSpec {
    lo: Vec<f64>,
    hi: Vec<f64>,
    depth: Vec<usize>,
}

impl TryFrom<GridSpec> for BoxGrid {
    type Error = BoxError;

    fn try_from(s: GridSpec) -> Result<Self, BoxError> {
        BoxGrid::new(s.lo, s.hi, s.depth)
    }
}

impl From<BoxGrid> for GridSpec {
    fn from(g: BoxGrid) -> Self {
        GridSpec { lo: g.lo, hi: g.hi, depth: g.depth }
    }
}

impl BoxGrid {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, depth: Vec<usize>) -> Result<Self, BoxError> {
        let dim = lo.len();
        if dim == 0 || hi.len() != dim || depth.len() != dim {
            return Err(BoxError::InvalidGrid(format!(
                "lo, hi and depth must have the same positive length (got {}, {}, {})",
                dim,
                hi.len(),
                depth.len()
            )));
        }
        for a in 0..dim {
            if !(lo[a].is_finite() && hi[a].is_finite() && lo[a] < hi[a]) {
                return Err(BoxError::InvalidGrid(format!(
                    "axis {a}: need finite lo < hi, got [{}, {}]",
                    lo[a], hi[a]
                )));
            }
            if !depth[a].is_power_of_two() {
                return Err(BoxError::InvalidGrid(format!("axis {a}: depth {} is not a power of two", depth[a])));
            }
        }
        let width = (0..dim).map(|a| (hi[a] - lo[a]) / depth[a] as f64).collect();
        let mut strides = vec![1; dim];
        for a in (0..dim.saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * depth[a + 1];
        }
        let len = depth
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| BoxError::InvalidGrid("too many boxes".into()))?;
        Ok(Self { lo, hi, depth, width, strides, len })
    }

    /// One-dimensional grid on `[lo, hi]`.
    pub fn interval(lo: f64, hi: f64, depth: usize) -> Result<Self, BoxError> {
        Self::new(vec![lo], vec![hi], vec![depth])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn depth(&self) -> &[usize] {
        &self.depth
    }

    pub fn width(&self) -> &[f64] {
        &self.width
    }

    pub fn max_width(&self) -> f64 {
        self.width.iter().cloned().fold(0.0, f64::max)
    }

    /// Euclidean diameter of one box.
    pub fn box_diameter(&self) -> f64 {
        self.width.iter().map(|w| w * w).sum::<f64>().sqrt()
    }

    pub fn coords(&self, id: usize) -> Vec<usize> {
        let mut rest = id;
        self.strides
            .iter()
            .map(|s| {
                let c = rest / s;
                rest %= s;
                c
            })
            .collect()
    }

    pub fn id(&self, coords: &[usize]) -> usize {
        coords.iter().zip(&self.strides).map(|(c, s)| c * s).sum()
    }

    /// Coordinate of the grid line `k` on axis `a`; the last line is exactly `hi`.
    fn line(&self, a: usize, k: f64) -> f64 {
        if k >= self.depth[a] as f64 {
            self.hi[a]
        } else {
            self.lo[a] + k * self.width[a]
        }
    }

    pub fn box_lo(&self, id: usize) -> Vec<f64> {
        self.coords(id).iter().enumerate().map(|(a, &c)| self.line(a, c as f64)).collect()
    }

    pub fn box_hi(&self, id: usize) -> Vec<f64> {
        self.coords(id).iter().enumerate().map(|(a, &c)| self.line(a, (c + 1) as f64)).collect()
    }

    pub fn center(&self, id: usize) -> State {
        self.coords(id).iter().enumerate().map(|(a, &c)| self.line(a, c as f64 + 0.5)).collect()
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), BoxError> {
        if x.len() != self.dim() {
            return Err(BoxError::Dimension { expected: self.dim(), got: x.len() });
        }
        Ok(())
    }

    /// Closed-domain membership with a small face tolerance.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter().enumerate().all(|(a, &v)| {
                let tol = FACE_TOLERANCE * self.width[a];
                v >= self.lo[a] - tol && v <= self.hi[a] + tol
            })
    }

    /// Box containing `x`, with half-open boxes except the last one on each axis.
    pub fn point_to_box(&self, x: &[f64]) -> Result<usize, BoxError> {
        self.check_dim(x)?;
        let mut id = 0;
        for (a, &v) in x.iter().enumerate() {
            if !(v >= self.lo[a] && v <= self.hi[a]) {
                return Err(BoxError::OutsideDomain { point: x.to_vec() });
            }
            let c = (((v - self.lo[a]) / self.width[a]).floor() as usize).min(self.depth[a] - 1);
            id += c * self.strides[a];
        }
        Ok(id)
    }

    /// Every box whose closure (widened by [`FACE_TOLERANCE`]) contains `x`.
    /// Empty when `x` is outside the domain.
    pub fn boxes_containing(&self, x: &[f64]) -> Vec<usize> {
        if !self.contains(x) {
            return Vec::new();
        }
        let mut ranges = Vec::with_capacity(self.dim());
        for (a, &v) in x.iter().enumerate() {
            let r = (v - self.lo[a]) / self.width[a];
            let last = self.depth[a] as f64 - 1.0;
            let lo = (r - 1.0 - FACE_TOLERANCE).ceil().clamp(0.0, last) as usize;
            let hi = (r + FACE_TOLERANCE).floor().clamp(0.0, last) as usize;
            ranges.push(lo..=hi);
        }
        let mut out = vec![0usize];
        for (a, range) in ranges.into_iter().enumerate() {
            out = out.iter().flat_map(|&base| range.clone().map(move |c| base + c * self.strides[a])).collect();
        }
        out.sort_unstable();
        out
    }

    /// Distance from `x` to the closed box `id` (zero inside).
    pub fn distance_to_box(&self, x: &[f64], id: usize) -> f64 {
        let (lo, hi) = (self.box_lo(id), self.box_hi(id));
        x.iter()
            .enumerate()
            .map(|(a, &v)| {
                let d = (lo[a] - v).max(v - hi[a]).max(0.0);
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    /// The first `count` test points of box `id`. The pattern is prefix-stable, so a
    /// larger count only adds points.
    pub fn test_points(&self, id: usize, count: usize) -> Vec<State> {
        let coords = self.coords(id);
        unit_pattern(self.dim(), count)
            .into_iter()
            .map(|u| u.iter().enumerate().map(|(a, &f)| self.line(a, coords[a] as f64 + f)).collect())
            .collect()
    }
}

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut out = 0.0;
    while i > 0 {
        out += (i % base) as f64 * inv;
        i /= base;
        inv /= base as f64;
    }
    out
}

/// Offsets in the unit cube: center, the `2^d` corners, then Halton points.
pub fn unit_pattern(dim: usize, count: usize) -> Vec<Vec<f64>> {
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(count);
    if count == 0 {
        return pts;
    }
    pts.push(vec![0.5; dim]);
    if dim < 16 {
        for mask in 0..(1u32 << dim) {
            if pts.len() == count {
                return pts;
            }
            pts.push((0..dim).map(|a| ((mask >> a) & 1) as f64).collect());
        }
    }
    let mut i = 1u64;
    while pts.len() < count {
        let p: Vec<f64> = (0..dim).map(|a| radical_inverse(i, PRIMES[a % PRIMES.len()])).collect();
        if !pts.contains(&p) {
            pts.push(p);
        }
        i += 1;
    }
    pts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_to_box_conventions() {
        let g = BoxGrid::interval(-2.0, 2.0, 256).unwrap();
        assert_eq!(g.point_to_box(&[-2.0]).unwrap(), 0);
        assert_eq!(g.point_to_box(&[-1.0]).unwrap(), 64);
        assert_eq!(g.point_to_box(&[2.0]).unwrap(), 255);
        assert!(matches!(g.point_to_box(&[2.1]), Err(BoxError::OutsideDomain { .. })));
    }

    #[test]
    fn rejects_bad_depth() {
        assert!(BoxGrid::interval(0.0, 1.0, 0).is_err());
        assert!(BoxGrid::interval(0.0, 1.0, 12).is_err());
        assert!(BoxGrid::interval(1.0, 1.0, 4).is_err());
        assert!(BoxGrid::new(vec![0.0], vec![1.0, 2.0], vec![4]).is_err());
    }

    #[test]
    fn coords_round_trip() {
        let g = BoxGrid::new(vec![0.0, -1.0, 2.0], vec![1.0, 1.0, 3.0], vec![4, 2, 8]).unwrap();
        assert_eq!(g.len(), 64);
        for id in 0..g.len() {
            assert_eq!(g.id(&g.coords(id)), id);
            assert_eq!(g.point_to_box(&g.center(id)).unwrap(), id);
        }
    }

    #[test]
    fn shared_faces_touch_both_boxes() {
        let g = BoxGrid::interval(-2.0, 2.0, 1024).unwrap();
        assert_eq!(g.boxes_containing(&[0.0]), vec![511, 512]);
        assert_eq!(g.boxes_containing(&[-1.0]), vec![255, 256]);
        assert_eq!(g.boxes_containing(&[2.0]), vec![1023]);
        assert_eq!(g.boxes_containing(&[0.001]), vec![512]);
        assert!(g.boxes_containing(&[2.5]).is_empty());
        let g2 = BoxGrid::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![2, 2]).unwrap();
        assert_eq!(g2.boxes_containing(&[0.5, 0.5]), vec![0, 1, 2, 3]);
    }

    #[test]
    fn pattern_is_prefix_stable_and_inside() {
        let long = unit_pattern(2, 12);
        for k in 0..12 {
            assert_eq!(unit_pattern(2, k)[..], long[..k]);
        }
        assert_eq!(long[0], vec![0.5, 0.5]);
        assert!(long.iter().all(|p| p.iter().all(|&v| (0.0..=1.0).contains(&v))));
        let mut dedup = long.clone();
        dedup.dedup();
        assert_eq!(dedup.len(), 12);
    }

    #[test]
    fn test_points_lie_in_their_box() {
        let g = BoxGrid::interval(-2.0, 2.0, 8).unwrap();
        for id in 0..8 {
            for p in g.test_points(id, 6) {
                assert!(g.distance_to_box(&p, id) == 0.0);
            }
        }
        assert_eq!(g.test_points(7, 3)[2], vec![2.0]);
    }

    #[test]
    fn serde_round_trip_validates() {
        let g = BoxGrid::interval(-2.0, 2.0, 8).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        assert_eq!(serde_json::from_str::<BoxGrid>(&s).unwrap(), g);
        assert!(serde_json::from_str::<BoxGrid>(r#"{"lo":[0],"hi":[1],"depth":[3]}"#).is_err());
    }
}
