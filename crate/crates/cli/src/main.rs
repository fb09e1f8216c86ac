fn main() {
    std::process::exit(vrte_cli::run_cli(std::env::args_os()));
}
