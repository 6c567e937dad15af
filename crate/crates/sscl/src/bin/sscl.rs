fn main() {
    std::process::exit(sscl::cli::run());
}
