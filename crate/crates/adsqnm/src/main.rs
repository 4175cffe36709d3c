fn main() {
    std::process::exit(adsqnm::cli::main_with_args(std::env::args_os()));
}
