//! Box-discretized Conley–Morse analysis of random semiflows.
//!
//! The crate builds sampled transition graphs for cocycles driven by Wiener
//! noise and extracts attractor–repeller pairs, the chain-recurrent set, Morse
//! decompositions and Lyapunov functions from them.

pub mod boxdyn;
pub mod config;
pub mod conley;
pub mod lyapunov;
pub mod morse;
pub mod noise;
pub mod pipeline;
pub mod systems;
pub mod verify;
