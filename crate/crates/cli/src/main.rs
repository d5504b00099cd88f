fn main() {
    std::process::exit(neoscope_cli::run(std::env::args_os()));
}
