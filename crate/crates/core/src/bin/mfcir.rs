fn main() {
    std::process::exit(mfcir::cli::run(std::env::args_os()));
}
