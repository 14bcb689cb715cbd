fn main() {
    std::process::exit(certifair::cli::run_command(std::env::args_os()));
}
