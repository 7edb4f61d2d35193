fn main() {
    std::process::exit(zfesr::cli::main_with_args(std::env::args_os()));
}
