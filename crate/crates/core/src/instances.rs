//! Small reference instances used by tests, the CLI and the acceptance suite.

use crate::cones::ConeSpec;
use crate::model::{ConicMip, Matrix, RhsSense, Vector};

/// `min x + y1 + y2  s.t.  4x + y1 = 5, (x, y) in Soc(3), x integer`.
/// Its feasible set is the single point `(1, 1, 0)`.
pub fn lorentz() -> ConicMip {
    ConicMip::new(
        Matrix::from_row_slice(1, 1, &[4.0]),
        Matrix::from_row_slice(1, 2, &[1.0, 0.0]),
        Vector::from_column_slice(&[5.0]),
        Vector::from_column_slice(&[1.0]),
        Vector::from_column_slice(&[1.0, 1.0]),
        ConeSpec::soc(3),
        RhsSense::Equal,
    )
    .expect("valid instance")
}

/// `min x1 + x2  s.t.  x1 + 2 x2 = 3, x in Z^2_+`, optimum 2 at `(1, 1)`.
pub fn small_ip() -> ConicMip {
    ConicMip::new(
        Matrix::from_row_slice(1, 2, &[1.0, 2.0]),
        Matrix::zeros(1, 0),
        Vector::from_column_slice(&[3.0]),
        Vector::from_column_slice(&[1.0, 1.0]),
        Vector::zeros(0),
        ConeSpec::nonneg(2),
        RhsSense::Equal,
    )
    .expect("valid instance")
}
