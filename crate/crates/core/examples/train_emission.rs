//! Regenerates the bundled emission artifact:
//! `cargo run -p neoscope-core --example train_emission --release > crates/core/assets/emission_v1.json`

use neoscope_core::heart_seg::emission::train_artifact;

fn main() {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20_240_601);
    println!("{}", train_artifact(seed).to_json());
}
