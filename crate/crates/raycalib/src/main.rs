fn main() {
    std::process::exit(raycalib::cli::main_with_args(std::env::args_os()));
}
