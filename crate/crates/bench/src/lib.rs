//! Benchmarks for the model-checking engines live in `benches/`.
