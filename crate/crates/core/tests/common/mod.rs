pub mod moments;
pub mod oracles;
pub mod pipeline;
