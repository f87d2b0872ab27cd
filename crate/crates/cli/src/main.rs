use clap::Parser;

fn main() {
    let cli = kgamma_cli::Cli::parse();
    let code = match kgamma_cli::run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            kgamma_cli::exit_code(&e)
        }
    };
    std::process::exit(code);
}
