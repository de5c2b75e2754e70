//! Differentially private empirical risk minimization under the
//! Kurdyka-Łojasiewicz condition.

pub mod linalg;
pub mod loss;
pub mod harness;
pub mod optim;
pub mod privacy;
