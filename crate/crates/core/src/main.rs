fn main() {
    std::process::exit(dirfuse::cli::main_with_args(std::env::args().collect()));
}
