use clap::Parser;

use qwsense::cli::{execute, Cli};

fn main() {
    match execute(Cli::parse()) {
        Ok(msg) => println!("{msg}"),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
