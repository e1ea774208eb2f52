fn main() {
    std::process::exit(qpsense::cli::run(std::env::args_os()));
}
