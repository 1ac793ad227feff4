fn main() {
    std::process::exit(datactl::cli::run());
}
