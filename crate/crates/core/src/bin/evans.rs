fn main() {
    std::process::exit(evans_kam::cli::run(std::env::args_os()));
}
