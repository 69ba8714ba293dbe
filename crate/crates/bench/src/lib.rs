//! Criterion benchmarks for `sobol-core`; see `benches/`.
