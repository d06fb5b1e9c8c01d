//! Fixtures shared by the criterion benches.

use transprod::transport::{latitude, ProjectionPath};
use transprod::{AlgebraKind, Element};

/// A dense n×n matrix with entries in [−1, 1), fixed by the seed-free
/// formula so every run times the same input.
pub fn test_matrix(n: usize) -> Element {
    let data = (0..n * n).map(|k| ((k * 7919 % 211) as f64 / 105.5) - 1.0).collect();
    Element::from_vec(AlgebraKind::Matrix(n), data).expect("square data")
}

/// The latitude loop used for transport timings.
pub fn latitude_path() -> ProjectionPath {
    latitude(1.0, 1.0).expect("latitude lies on the sphere")
}
