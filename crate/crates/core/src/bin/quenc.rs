fn main() {
    std::process::exit(quenc::cli::run(std::env::args_os()));
}
