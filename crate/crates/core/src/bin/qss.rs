fn main() {
    std::process::exit(qss::cli::run(std::env::args_os()));
}
