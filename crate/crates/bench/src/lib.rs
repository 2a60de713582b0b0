//! Benchmarks for the `metapop` engine live under `benches/`.
