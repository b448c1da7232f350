fn main() {
    std::process::exit(blockband_cli::run(std::env::args_os()));
}
