fn main() {
    std::process::exit(cogradar::cli::main_with_args(std::env::args_os()));
}
