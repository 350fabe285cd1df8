fn main() {
    std::process::exit(rolling_lab::cli::run(std::env::args_os()));
}
