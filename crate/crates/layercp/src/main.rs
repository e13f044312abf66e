fn main() {
    std::process::exit(layercp::cli::run(std::env::args_os()));
}
