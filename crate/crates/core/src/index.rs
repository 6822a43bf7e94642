//! Exact nearest-neighbour and fixed-radius queries over a growing point set.
//!
//! Points live in a uniform hash grid. The cell side follows the query
//! scale the caller announces through [`PointIndex::set_scale`]; the grid is
//! rebuilt whenever that scale drops below half the current cell side, so a
//! query of radius `r` touches `O(3^d)` cells. Every candidate is checked by
//! true distance, so results never depend on the grid geometry.

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};

pub type PointId = usize;

/// Euclidean distance, computed as the square root of the sum of squares.
#[inline]
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    dist2(a, b).sqrt()
}

#[inline]
fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

const ROOT: PointId = 0;

/// Below this many points queries scan linearly.
const LINEAR_SCAN_MAX: usize = 16;

#[derive(Debug, Clone)]
pub struct PointIndex {
    d: usize,
    coords: Vec<f64>,
    cell: f64,
    grid: FxHashMap<Vec<i64>, Vec<PointId>>,
    rebuilds: usize,
}

impl PointIndex {
    pub fn new(d: usize) -> Self {
        Self::with_cell(d, 1.0)
    }

    pub fn with_cell(d: usize, cell: f64) -> Self {
        assert!(d >= 1, "dimension must be positive");
        assert!(cell > 0.0 && cell.is_finite(), "cell side must be positive");
        PointIndex {
            d,
            coords: Vec::new(),
            cell,
            grid: FxHashMap::default(),
            rebuilds: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, id: PointId) -> &[f64] {
        &self.coords[id * self.d..(id + 1) * self.d]
    }

    /// All points, flat with stride `d`, in insertion order.
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn cell_side(&self) -> f64 {
        self.cell
    }

    /// Number of grid rebuilds so far.
    pub fn rebuilds(&self) -> usize {
        self.rebuilds
    }

    fn cell_of(&self, p: &[f64], key: &mut Vec<i64>) {
        key.clear();
        key.extend(p.iter().map(|&x| (x / self.cell).floor() as i64));
    }

    pub fn insert(&mut self, p: &[f64]) -> Result<PointId> {
        if p.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: p.len(),
            });
        }
        if let Some((axis, &value)) = p.iter().enumerate().find(|(_, x)| !x.is_finite()) {
            return Err(Error::NonFinite { axis, value });
        }
        let id = self.len();
        self.coords.extend_from_slice(p);
        let mut key = Vec::with_capacity(self.d);
        self.cell_of(p, &mut key);
        self.grid.entry(key).or_default().push(id);
        Ok(id)
    }

    /// Announces the radius of upcoming queries; rebuilds the grid when the
    /// radius has shrunk below half the cell side.
    pub fn set_scale(&mut self, radius: f64) {
        if radius > 0.0 && radius.is_finite() && radius < 0.5 * self.cell {
            self.rebuild(radius);
        }
    }

    fn rebuild(&mut self, cell: f64) {
        self.cell = cell;
        self.grid.clear();
        let mut key = Vec::with_capacity(self.d);
        for id in 0..self.len() {
            let p = &self.coords[id * self.d..(id + 1) * self.d];
            key.clear();
            key.extend(p.iter().map(|&x| (x / cell).floor() as i64));
            self.grid.entry(key.clone()).or_default().push(id);
        }
        self.rebuilds += 1;
    }

    fn check_query(&self, q: &[f64]) -> Result<()> {
        if q.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: q.len(),
            });
        }
        if let Some((axis, &value)) = q.iter().enumerate().find(|(_, x)| !x.is_finite()) {
            return Err(Error::NonFinite { axis, value });
        }
        Ok(())
    }

    /// Calls `visit` on every point whose cell intersects the axis box of
    /// half-width `r` about `q`. Returns false (and visits nothing) when
    /// that box spans more cells than are occupied; callers then scan.
    fn for_each_candidate(&self, q: &[f64], r: f64, mut visit: impl FnMut(PointId)) -> bool {
        let d = self.d;
        let mut lo = Vec::with_capacity(d);
        let mut hi = Vec::with_capacity(d);
        let mut cells: f64 = 1.0;
        for &x in q {
            // Widen by a few ulps so rounding in x -/+ r never drops a boundary cell.
            let pad = r + 4.0 * f64::EPSILON * (x.abs() + r);
            let a = ((x - pad) / self.cell).floor();
            let b = ((x + pad) / self.cell).floor();
            cells *= b - a + 1.0;
            lo.push(a as i64);
            hi.push(b as i64);
        }
        if !(cells <= self.grid.len() as f64) {
            return false;
        }
        let mut key = lo.clone();
        loop {
            if let Some(bucket) = self.grid.get(key.as_slice()) {
                bucket.iter().for_each(|&id| visit(id));
            }
            let mut axis = 0;
            loop {
                if axis == d {
                    return true;
                }
                if key[axis] < hi[axis] {
                    key[axis] += 1;
                    break;
                }
                key[axis] = lo[axis];
                axis += 1;
            }
        }
    }

    /// Best candidate among the cells covering radius `r`, plus whether the
    /// whole set was scanned instead.
    fn nearest_candidate(
        &self,
        q: &[f64],
        r: f64,
        exclude: Option<PointId>,
    ) -> (Option<(PointId, f64)>, bool) {
        let mut best: Option<(PointId, f64)> = None;
        let mut consider = |id: PointId| {
            if exclude == Some(id) {
                return;
            }
            let dist = dist2(q, self.point(id)).sqrt();
            match best {
                Some((b, bd)) if dist > bd || (dist == bd && id > b) => {}
                _ => best = Some((id, dist)),
            }
        };
        let mut scanned = false;
        if self.len() <= LINEAR_SCAN_MAX || !self.for_each_candidate(q, r, &mut consider) {
            (0..self.len()).for_each(&mut consider);
            scanned = true;
        }
        (best, scanned)
    }

    /// Nearest point (lowest id on ties) if one lies within distance `r`.
    pub fn nearest_within(
        &self,
        q: &[f64],
        r: f64,
        exclude_root: bool,
    ) -> Result<Option<(PointId, f64)>> {
        self.check_query(q)?;
        let (best, _) = self.nearest_candidate(q, r, exclude_root.then_some(ROOT));
        Ok(best.filter(|&(_, dist)| dist <= r))
    }

    /// Exact nearest neighbour; ties go to the lowest id.
    pub fn nearest(&self, q: &[f64], exclude_root: bool) -> Result<(PointId, f64)> {
        self.check_query(q)?;
        let available = self.len() - usize::from(exclude_root && !self.is_empty());
        if available == 0 {
            return Err(Error::Empty);
        }
        Ok(self.nearest_excluding(q, exclude_root.then_some(ROOT)))
    }

    /// Nearest point other than `id` itself.
    pub fn nearest_other(&self, id: PointId) -> Result<(PointId, f64)> {
        if self.len() < 2 {
            return Err(Error::Empty);
        }
        let q = self.point(id).to_vec();
        Ok(self.nearest_excluding(&q, Some(id)))
    }

    fn nearest_excluding(&self, q: &[f64], exclude: Option<PointId>) -> (PointId, f64) {
        let mut r = self.cell;
        loop {
            match self.nearest_candidate(q, r, exclude) {
                (Some(hit), true) => return hit,
                (Some(hit), false) if hit.1 <= r => return hit,
                _ => r *= 2.0,
            }
        }
    }

    /// Number of points in the closed ball of radius `r` about `q`.
    pub fn count_within(&self, q: &[f64], r: f64, exclude_root: bool) -> Result<usize> {
        self.check_query(q)?;
        if !(r > 0.0) {
            return Err(Error::Domain(format!("radius must be positive, got {r}")));
        }
        let mut count = 0;
        let mut consider = |id: PointId| {
            if !(exclude_root && id == ROOT) && dist2(q, self.point(id)).sqrt() <= r {
                count += 1;
            }
        };
        if self.len() <= LINEAR_SCAN_MAX || !self.for_each_candidate(q, r, &mut consider) {
            (0..self.len()).for_each(&mut consider);
        }
        Ok(count)
    }

    /// Calls `visit(id, distance)` for every point within `r` of `q`.
    pub fn for_each_within(
        &self,
        q: &[f64],
        r: f64,
        mut visit: impl FnMut(PointId, f64),
    ) -> Result<()> {
        self.check_query(q)?;
        let mut consider = |id: PointId| {
            let dist = dist2(q, self.point(id)).sqrt();
            if dist <= r {
                visit(id, dist);
            }
        };
        if self.len() <= LINEAR_SCAN_MAX || !self.for_each_candidate(q, r, &mut consider) {
            (0..self.len()).for_each(&mut consider);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_nearest(pts: &[Vec<f64>], q: &[f64], exclude_root: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, p) in pts.iter().enumerate() {
            if exclude_root && i == 0 {
                continue;
            }
            let d = p
                .iter()
                .zip(q)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        best
    }

    fn brute_count(pts: &[Vec<f64>], q: &[f64], r: f64, exclude_root: bool) -> usize {
        pts.iter()
            .enumerate()
            .filter(|(i, p)| {
                !(exclude_root && *i == 0)
                    && p.iter()
                        .zip(q)
                        .map(|(a, b)| (a - b).powi(2))
                        .sum::<f64>()
                        .sqrt()
                        <= r
            })
            .count()
    }

    #[test]
    fn insert_then_find_self() {
        let mut idx = PointIndex::new(2);
        idx.insert(&[0.0, 0.0]).unwrap();
        let id = idx.insert(&[0.3, -0.2]).unwrap();
        assert_eq!(idx.nearest(&[0.3, -0.2], true).unwrap(), (id, 0.0));
    }

    #[test]
    fn rejects_bad_points() {
        let mut idx = PointIndex::new(2);
        assert!(matches!(
            idx.insert(&[1.0]),
            Err(Error::DimensionMismatch {
                expected: 2,
                got: 1
            })
        ));
        assert!(matches!(
            idx.insert(&[1.0, f64::NAN]),
            Err(Error::NonFinite { axis: 1, .. })
        ));
        assert!(idx.count_within(&[0.0, 0.0], 0.0, false).is_err());
    }

    #[test]
    fn empty_after_exclusion() {
        let mut idx = PointIndex::new(3);
        assert!(matches!(idx.nearest(&[0.0; 3], false), Err(Error::Empty)));
        idx.insert(&[0.0; 3]).unwrap();
        assert!(matches!(idx.nearest(&[1.0; 3], true), Err(Error::Empty)));
        assert_eq!(idx.nearest(&[1.0; 3], false).unwrap().0, 0);
    }

    #[test]
    fn ties_go_to_lowest_id() {
        let mut idx = PointIndex::new(2);
        idx.insert(&[0.0, 0.0]).unwrap();
        idx.insert(&[1.0, 0.0]).unwrap();
        idx.insert(&[-1.0, 0.0]).unwrap();
        assert_eq!(idx.nearest(&[0.0, 0.0], true).unwrap(), (1, 1.0));
    }

    #[test]
    fn closed_ball_boundary() {
        let mut idx = PointIndex::with_cell(2, 0.01);
        idx.insert(&[0.0, 0.0]).unwrap();
        idx.insert(&[0.3, 0.4]).unwrap();
        let r = distance(&[0.3, 0.4], &[0.0, 0.0]);
        assert_eq!(idx.count_within(&[0.0, 0.0], r, false).unwrap(), 2);
        assert_eq!(
            idx.count_within(&[0.0, 0.0], r * (1.0 - 1e-12), false)
                .unwrap(),
            1
        );
    }

    #[test]
    fn far_query_is_exact() {
        let mut idx = PointIndex::with_cell(2, 1e-3);
        let mut rng = crate::sampling::rng_from_seed(2);
        let mut pts = Vec::new();
        for _ in 0..500 {
            let mut p = vec![0.0; 2];
            crate::sampling::uniform_in_ball(&mut p, 0.1, &mut rng);
            idx.insert(&p).unwrap();
            pts.push(p);
        }
        let q = [40.0, -75.0];
        assert_eq!(
            Some(idx.nearest(&q, false).unwrap()),
            brute_nearest(&pts, &q, false)
        );
    }

    #[test]
    fn shrinking_scale_rebuilds() {
        let mut idx = PointIndex::with_cell(2, 1.0);
        for i in 0..100 {
            idx.insert(&[i as f64 / 128.0, 0.0]).unwrap();
        }
        idx.set_scale(0.6);
        assert_eq!(idx.rebuilds(), 0);
        idx.set_scale(0.2);
        assert_eq!((idx.rebuilds(), idx.cell_side()), (1, 0.2));
        assert_eq!(idx.count_within(&[0.5, 0.0], 0.0625, false).unwrap(), 17);
    }

    #[test]
    fn many_inserts_retrievable() {
        let mut idx = PointIndex::with_cell(2, 0.05);
        let mut rng = crate::sampling::rng_from_seed(8);
        let mut pts = Vec::new();
        for i in 0..10_000 {
            let mut p = vec![0.0; 2];
            crate::sampling::uniform_in_ball(&mut p, 1.0, &mut rng);
            assert_eq!(idx.insert(&p).unwrap(), i);
            pts.push(p);
        }
        for (i, p) in pts.iter().enumerate() {
            assert_eq!(idx.point(i), p.as_slice());
        }
    }

    fn cloud(d: usize) -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>, f64, f64)> {
        (
            prop::collection::vec(prop::collection::vec(-1.0..1.0f64, d), 1..120),
            prop::collection::vec(-1.5..1.5f64, d),
            1e-3..1.0f64,
            1e-3..0.5f64,
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn interleaved_matches_brute_force((pts, q, r, cell) in cloud(2)) {
            let mut idx = PointIndex::with_cell(2, cell);
            let mut shadow = Vec::new();
            for p in &pts {
                idx.insert(p).unwrap();
                shadow.push(p.clone());
                let nn = idx.nearest(&q, false).unwrap();
                prop_assert_eq!(Some(nn), brute_nearest(&shadow, &q, false));
                prop_assert_eq!(idx.count_within(&q, r, true).unwrap(), brute_count(&shadow, &q, r, true));
            }
        }

        #[test]
        fn three_dimensional_queries((pts, q, r, cell) in cloud(3)) {
            let mut idx = PointIndex::with_cell(3, cell);
            for p in &pts {
                idx.insert(p).unwrap();
            }
            if pts.len() > 1 {
                prop_assert_eq!(Some(idx.nearest(&q, true).unwrap()), brute_nearest(&pts, &q, true));
            }
            prop_assert_eq!(idx.count_within(&q, r, false).unwrap(), brute_count(&pts, &q, r, false));
            let within = idx.nearest_within(&q, r, false).unwrap();
            let expected = brute_nearest(&pts, &q, false).filter(|&(_, dist)| dist <= r);
            prop_assert_eq!(within, expected);
        }
    }
}
