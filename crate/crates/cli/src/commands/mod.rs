pub mod diagnose;
pub mod fit;
pub mod simulate;
pub mod tecator;

pub use diagnose::cmd_diagnose;
pub use fit::{cmd_fit, cmd_predict, cmd_tune};
pub use simulate::cmd_simulate;
pub use tecator::{cmd_convert_tecator, cmd_tecator};
