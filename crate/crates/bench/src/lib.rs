//! Criterion benchmarks for the exact and numerical engines; run with
//! `cargo bench -p bellscope-bench`.
