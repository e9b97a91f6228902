fn main() {
    std::process::exit(r3svd::cli::run(std::env::args_os()));
}
