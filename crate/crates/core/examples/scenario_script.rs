//! Runs a scenario script (the bundled new-ship project by default) and
//! prints its transcript.
//!
//! ```text
//! cargo run -p paperstack --example scenario_script [script.toml]
//! ```

use paperstack::hub::scenario::run_scenario;

const BUNDLED: &str = include_str!("../scenarios/new_ship_project.toml");

fn main() {
    let text = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(path).unwrap(),
        None => BUNDLED.to_owned(),
    };
    match run_scenario(&text) {
        Ok(run) => {
            print!("{}", run.transcript);
            println!("digest {}", run.hub.digest());
        }
        Err(e) => {
            if let Some(t) = e.transcript() {
                print!("{t}");
            }
            eprintln!("{e}");
            std::process::exit(1);
        }
    }
}
