//! Criterion benchmarks for the simulator pipeline live in `benches/`.
