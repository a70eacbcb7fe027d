fn main() {
    std::process::exit(diffeo_commutators::cli::cli_run(std::env::args_os()));
}
