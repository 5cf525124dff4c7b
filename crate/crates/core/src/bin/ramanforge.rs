fn main() {
    std::process::exit(ramanforge::cli::main_with_args(std::env::args_os()));
}
