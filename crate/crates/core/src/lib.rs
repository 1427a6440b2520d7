pub mod dsl;
pub mod dynamics;
pub mod effects;
pub mod error;
pub mod nonlocality;
pub mod oracle;
pub mod state;
pub mod system;
pub mod tensor;

pub use error::{Error, Result};
