use clap::Parser;

fn main() -> std::process::ExitCode {
    davies_cli::main_with(davies_cli::Cli::parse())
}
