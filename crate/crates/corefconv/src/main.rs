fn main() {
    std::process::exit(corefconv::cli::main_with_args(std::env::args_os()));
}
