pub mod bessel;
pub mod fit;
pub mod quadrature;
pub mod tridiag;

pub use bessel::bessel_j0;
pub use fit::{linear_fit, median, LinearFit};
pub use quadrature::{
    integrate, integrate_complex, integrate_complex_with_breaks, QuadratureOptions,
    QuadratureResult,
};
pub use tridiag::{symmetric_tridiagonal_eigen, TridiagEigen};
