//! Benchmarks for the harmonagg solvers live in `benches/`.
