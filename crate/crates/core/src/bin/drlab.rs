fn main() {
    std::process::exit(drlab::cli::run(std::env::args_os()));
}
