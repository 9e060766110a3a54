pub mod eigen;
pub mod error;
pub mod model;
pub mod numerics;
pub mod pde;
pub mod speeds;
pub mod verify;
pub mod waves;

pub use error::{Error, Result};
pub use model::{Case, ChiProfile, ChiVariant, Parameters};
