use clap::Parser;

use favar::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(message) => println!("{message}"),
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            std::process::exit(e.exit_code());
        }
    }
}
