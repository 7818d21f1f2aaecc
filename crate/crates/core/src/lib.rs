//! Direction-of-arrival estimation restricted to time-frequency bins where the
//! direct path of the target speaker dominates.

pub mod cli;
pub mod doa;
pub mod error;
pub mod eval;
pub mod io;
pub mod masking;
pub mod room;
pub mod signal;
pub mod stft;

pub use error::{Error, Result};
pub use signal::TimeSignal;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/stft.md")]
    mod stft {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/masks.md")]
    mod masks {}
    #[doc = include_str!("../../../book/src/doa.md")]
    mod doa {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
