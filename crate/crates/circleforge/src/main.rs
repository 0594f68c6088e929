fn main() {
    std::process::exit(circleforge::cli::main_from_args(std::env::args_os()));
}
