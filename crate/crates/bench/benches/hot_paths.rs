use criterion::{black_box, criterion_group, criterion_main, Criterion};
use fieldfuse_bench::{composite, fragments, label_raster, shifted, truth};
use fieldfuse_core::metrics::match_detections;
use fieldfuse_core::mosaic::{merge_adjacent, MergeParams};
use fieldfuse_core::raster::{enhance_edges, EnhanceParams};
use fieldfuse_core::vector::{polygon_iou, vectorize_mask, LayerKey};

fn vectorize(c: &mut Criterion) {
    let t = truth(400.0);
    let (labels, w, h) = label_raster(&t);
    c.bench_function("vectorize_mask 500x500", |b| {
        b.iter(|| vectorize_mask(black_box(labels), w, h, &t.transform, 0.0).unwrap())
    });
}

fn iou(c: &mut Criterion) {
    let t = truth(200.0);
    let pred = shifted(&t, 1.6);
    let pairs: Vec<_> = t.gt.polygons().iter().zip(pred.polygons()).collect();
    c.bench_function("polygon_iou field pairs", |b| {
        b.iter(|| pairs.iter().map(|(a, p)| polygon_iou(a, p)).sum::<f64>())
    });
}

fn blur(c: &mut Criterion) {
    let img = composite(512);
    let params = EnhanceParams::default();
    c.bench_function("enhance_edges 512x512", |b| b.iter(|| enhance_edges(black_box(&img), &params).unwrap()));
}

fn matching(c: &mut Criterion) {
    let t = truth(400.0);
    let pred = shifted(&t, 2.4);
    c.bench_function("match_detections 400m scene", |b| {
        b.iter(|| match_detections(black_box(&pred), &t.gt, 0.5).len())
    });
}

fn merge(c: &mut Criterion) {
    let t = truth(400.0);
    let (grid, tiles) = fragments(&t, 256);
    let params = MergeParams::default();
    c.bench_function("merge_adjacent 256px tiles", |b| {
        b.iter(|| merge_adjacent(black_box(&tiles), &grid, LayerKey::reference(), &params).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = vectorize, iou, blur, matching, merge
}
criterion_main!(benches);
