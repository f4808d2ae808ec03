//! Synthesizes labeled slide and mobile-UI datasets from annotated markup.

pub mod align;
pub mod assets;
pub mod cli;
pub mod dataset;
pub mod layout;
pub mod markup;
pub mod quality;
pub mod schema;
pub mod synth;
