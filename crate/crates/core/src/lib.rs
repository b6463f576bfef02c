pub mod chisq;
pub mod cli;
pub mod encoders;
pub mod eval;
pub mod forest;
pub mod par;
pub mod pipeline;
pub mod seed;
pub mod selectors;
pub mod synth;
pub mod tabular;
pub mod textio;
