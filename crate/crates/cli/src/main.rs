fn main() {
    std::process::exit(lfvqe_cli::run_cli(std::env::args_os()));
}
