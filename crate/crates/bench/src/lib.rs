//! Criterion benchmarks for `natmap-core`; see `benches/kernels.rs`.
