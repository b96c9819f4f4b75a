//! Benchmark-only crate; the measurements live in `benches/hot_paths.rs`.
//!
//! Run with `cargo bench -p qkeep-bench`, or `cargo bench -p qkeep-bench --
//! --test` for a quick single-pass smoke run.
