//! Criterion benchmarks for kinesphere live in `benches/`.
