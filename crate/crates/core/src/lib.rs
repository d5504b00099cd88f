pub mod annotations;
pub mod dsp;
pub mod features;
pub mod heart_seg;
pub mod optim;
pub mod signal_io;
pub mod synth;
pub mod train;
pub mod vitals;
