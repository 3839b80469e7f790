fn main() {
    std::process::exit(qce::cli::main_with_args(std::env::args_os()));
}
