//! Criterion benchmarks for the hot kernels of `unfold-core`; see `benches/`.
