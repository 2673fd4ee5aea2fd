fn main() {
    std::process::exit(evsync::cli::run(std::env::args_os()));
}
