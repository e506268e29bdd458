//! Shared setup for the criterion benches.

use evmfem::{DomainSpec, ManufacturedCase};

pub fn bench_spec(coarse_n: usize) -> DomainSpec {
    DomainSpec::checkerboard(3, 3, coarse_n, 2)
}

pub fn bench_case() -> ManufacturedCase {
    ManufacturedCase::Example3
}
