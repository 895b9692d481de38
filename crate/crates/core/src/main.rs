fn main() {
    std::process::exit(dasimplex::cli::main_with_args(std::env::args_os()));
}
