fn main() {
    std::process::exit(maxarm::cli::main_with_args(std::env::args_os()));
}
