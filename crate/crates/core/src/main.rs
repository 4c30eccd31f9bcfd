fn main() {
    std::process::exit(sir_times::cli::run(std::env::args_os()));
}
