fn main() {
    std::process::exit(whittle::cli::run());
}
