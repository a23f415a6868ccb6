fn main() {
    std::process::exit(rydberg_qubit::cli::run_from_args(std::env::args_os()));
}
