use clap::Parser;
use sfvem::labcli::cli::{execute, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = execute(cli.command, &mut std::io::stdout()) {
        eprintln!("sfvem: {e}");
        std::process::exit(1);
    }
}
