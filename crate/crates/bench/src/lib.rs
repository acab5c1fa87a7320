//! Criterion benchmarks for the parser live in `benches/`.
