pub mod ci;
pub mod data;
pub mod error;
pub mod family;
pub mod glm;
pub mod highdim;
pub mod lasso;
pub mod linalg;
pub mod ols;
pub mod result;
pub mod rng;
pub mod sim;
pub mod stats;
