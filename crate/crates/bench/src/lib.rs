//! Criterion benchmarks for the ASEP(q,j) kernels live in `benches/`.
