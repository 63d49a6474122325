pub mod fit;
pub mod simulate;
pub mod snr;
pub mod tomo;
