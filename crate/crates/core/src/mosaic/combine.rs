use crate::vector::{polygon_iou, FieldPolygon, LayerKey, PredictionLayer, SpatialIndex};

pub const DEFAULT_DEDUP_IOU: f64 = 0.8;

/// Pools all polygons of `inputs` into one layer under `out_key`.
/// Provenance is kept; ids become `<n>` in input order.
pub fn combine_layers(inputs: &[PredictionLayer], out_key: LayerKey) -> PredictionLayer {
    let polys: Vec<FieldPolygon> = inputs
        .iter()
        .flat_map(|l| l.polygons().iter())
        .enumerate()
        .map(|(n, p)| p.clone().with_id(n.to_string()))
        .collect();
    PredictionLayer::new(out_key, polys).expect("sequential ids are unique")
}

/// Greedy clustering by area, largest first: a polygon is absorbed by the
/// first representative it overlaps with IoU ≥ `iou_threshold`, otherwise
/// it becomes a representative. Only representatives are returned.
pub fn dedup(layer: &PredictionLayer, iou_threshold: f64) -> PredictionLayer {
    let mut order: Vec<&FieldPolygon> = layer.polygons().iter().collect();
    order.sort_by(|a, b| b.area().total_cmp(&a.area()).then_with(|| a.id.cmp(&b.id)));
    let mut reps: Vec<&FieldPolygon> = Vec::new();
    let mut index = SpatialIndex::from_rects(std::iter::empty());
    for p in order {
        let absorbed = index
            .query(p.bbox())
            .into_iter()
            .any(|slot| polygon_iou(reps[slot], p) >= iou_threshold);
        if !absorbed {
            index.insert(p.bbox());
            reps.push(p);
        }
    }
    PredictionLayer::new(layer.key.clone(), reps.into_iter().cloned().collect()).expect("subset of a valid layer")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vector::{Provenance, Rect};

    fn rect(id: &str, x0: f64, x1: f64) -> FieldPolygon {
        FieldPolygon::rectangle(id, Rect::new(x0, 0.0, x1, 1.0), Provenance::default()).unwrap()
    }

    #[test]
    fn combine_pools_with_fresh_ids() {
        let a = PredictionLayer::new(LayerKey::reference(), vec![rect("x", 0.0, 1.0)]).unwrap();
        let b = PredictionLayer::new(LayerKey::reference(), vec![rect("x", 0.0, 1.0), rect("y", 5.0, 6.0)]).unwrap();
        let c = combine_layers(&[a.clone(), b], LayerKey::reference());
        assert_eq!(c.len(), 3);
        let ids: Vec<&str> = c.polygons().iter().map(|p| p.id.as_str()).collect();
        assert_eq!(ids, ["0", "1", "2"]);
        assert_eq!(combine_layers(std::slice::from_ref(&a), LayerKey::reference()).polygons()[0].exterior(), a.polygons()[0].exterior());
    }

    #[test]
    fn dedup_identical_and_disjoint() {
        let l = PredictionLayer::new(LayerKey::reference(), vec![rect("a", 0.0, 1.0), rect("b", 0.0, 1.0), rect("c", 3.0, 4.0)]).unwrap();
        let d = dedup(&l, DEFAULT_DEDUP_IOU);
        assert_eq!(d.len(), 2);
        assert_eq!(dedup(&d, DEFAULT_DEDUP_IOU), d);
    }

    #[test]
    fn chain_keeps_both_ends() {
        // equal unit-height strips of length 10 shifted by s: IoU = (10 - s) / (10 + s)
        let a = rect("a", 0.0, 10.0);
        let b = rect("b", 0.8, 10.8);
        let c = rect("c", 1.6, 11.6);
        let iou = |s: f64| (10.0 - s) / (10.0 + s);
        assert!((polygon_iou(&a, &b) - iou(0.8)).abs() < 1e-9);
        assert!(iou(0.8) >= 0.85 - 1e-9 && iou(1.6) < 0.8);
        let l = PredictionLayer::new(LayerKey::reference(), vec![c, b, a]).unwrap();
        let d = dedup(&l, DEFAULT_DEDUP_IOU);
        let ids: Vec<&str> = d.polygons().iter().map(|p| p.id.as_str()).collect();
        assert_eq!(ids, ["a", "c"]);
    }
}
