fn main() {
    std::process::exit(bellman_core::cli::run(std::env::args_os()));
}
