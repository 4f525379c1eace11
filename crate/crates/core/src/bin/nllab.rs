fn main() {
    std::process::exit(nonlocal_core::cli::main_with_args(std::env::args_os()));
}
