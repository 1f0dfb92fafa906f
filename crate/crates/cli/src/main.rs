use clap::Parser;
use coffeescan::args::Cli;

fn main() {
    let cli = Cli::parse();
    let code = coffeescan::run(cli, &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
