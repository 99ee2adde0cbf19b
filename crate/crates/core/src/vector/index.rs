use rstar::{RTree, RTreeObject, AABB};

use super::geometry::Rect;
use super::polygon::FieldPolygon;

#[derive(Debug, Clone)]
struct Entry {
    slot: usize,
    envelope: AABB<[f64; 2]>,
}

impl RTreeObject for Entry {
    type Envelope = AABB<[f64; 2]>;

    fn envelope(&self) -> Self::Envelope {
        self.envelope
    }
}

/// R-tree over polygon bounding boxes; queries return positions into the
/// slice the index was built from.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    tree: RTree<Entry>,
}

impl SpatialIndex {
    pub fn build(polygons: &[FieldPolygon]) -> Self {
        Self::from_rects(polygons.iter().map(FieldPolygon::bbox))
    }

    pub fn from_rects<'a>(rects: impl IntoIterator<Item = &'a Rect>) -> Self {
        let entries = rects
            .into_iter()
            .enumerate()
            .map(|(slot, r)| Entry {
                slot,
                envelope: AABB::from_corners([r.min_x, r.min_y], [r.max_x, r.max_y]),
            })
            .collect();
        Self {
            tree: RTree::bulk_load(entries),
        }
    }

    /// Adds a box under the next slot number and returns that slot.
    pub fn insert(&mut self, r: &Rect) -> usize {
        let slot = self.tree.size();
        self.tree.insert(Entry {
            slot,
            envelope: AABB::from_corners([r.min_x, r.min_y], [r.max_x, r.max_y]),
        });
        slot
    }

    pub fn len(&self) -> usize {
        self.tree.size()
    }

    pub fn is_empty(&self) -> bool {
        self.tree.size() == 0
    }

    /// Slots whose boxes intersect `r` (closed), in ascending order.
    pub fn query(&self, r: &Rect) -> Vec<usize> {
        let env = AABB::from_corners([r.min_x, r.min_y], [r.max_x, r.max_y]);
        let mut hits: Vec<usize> = self
            .tree
            .locate_in_envelope_intersecting(&env)
            .map(|e| e.slot)
            .collect();
        hits.sort_unstable();
        hits
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vector::polygon::Provenance;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn empty_and_disjoint() {
        let idx = SpatialIndex::build(&[]);
        assert!(idx.is_empty());
        assert!(idx.query(&Rect::new(0.0, 0.0, 1e9, 1e9)).is_empty());
        let one = [FieldPolygon::rectangle("a", Rect::new(0.0, 0.0, 1.0, 1.0), Provenance::default()).unwrap()];
        let idx = SpatialIndex::build(&one);
        assert!(idx.query(&Rect::new(5.0, 5.0, 6.0, 6.0)).is_empty());
        assert_eq!(idx.query(&Rect::new(0.5, 0.5, 6.0, 6.0)), vec![0]);
        let mut idx = idx;
        assert_eq!(idx.insert(&Rect::new(5.5, 5.5, 7.0, 7.0)), 1);
        assert_eq!(idx.query(&Rect::new(5.0, 5.0, 6.0, 6.0)), vec![1]);
    }

    #[test]
    fn matches_brute_force_on_random_squares() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let polys: Vec<FieldPolygon> = (0..1000)
            .map(|i| {
                let (x, y, s) = (rng.random_range(0.0..1000.0), rng.random_range(0.0..1000.0), rng.random_range(1.0..40.0));
                FieldPolygon::rectangle(format!("s{i}"), Rect::new(x, y, x + s, y + s), Provenance::default()).unwrap()
            })
            .collect();
        let idx = SpatialIndex::build(&polys);
        assert_eq!(idx.len(), 1000);
        for _ in 0..200 {
            let (x, y, s) = (rng.random_range(-50.0..1000.0), rng.random_range(-50.0..1000.0), rng.random_range(1.0..120.0));
            let q = Rect::new(x, y, x + s, y + s);
            let brute: Vec<usize> = (0..polys.len()).filter(|&i| polys[i].bbox().intersects(&q)).collect();
            assert_eq!(idx.query(&q), brute);
        }
    }
}
