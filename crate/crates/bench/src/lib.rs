//! Benchmarks for the gridshort engine live in `benches/`.
