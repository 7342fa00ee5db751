fn main() {
    std::process::exit(topocon::cli::cli(std::env::args_os()));
}
