pub mod estimate;
pub mod experiment;
pub mod gen;
pub mod readout;
pub mod sketch;
pub mod verify;
