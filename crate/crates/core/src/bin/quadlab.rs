fn main() {
    std::process::exit(quadlab::cli::run(std::env::args_os().collect()));
}
