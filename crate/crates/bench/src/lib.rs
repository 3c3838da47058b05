//! Criterion benchmarks for the `kimura` crate live in `benches/`.
