pub mod algebra;
pub mod gbe;
pub mod harness;
pub mod line;
pub mod network;
pub mod pnu;
pub mod rng;
pub mod sde;
pub mod stats;
