//! Print the default run configuration as JSON.
//!
//! `cargo run --example default_config > configs/default.json`

fn main() {
    print!("{}", solvrigid::config::RunConfig::default().to_json());
}
