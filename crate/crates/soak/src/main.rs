fn main() {
    std::process::exit(soak::cli::run(std::env::args_os()));
}
