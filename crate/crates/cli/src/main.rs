use clap::Parser;

fn main() {
    let cli = twinphoton_cli::Cli::parse();
    if let Err(e) = twinphoton_cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
