fn main() {
    std::process::exit(ice_cli::run(std::env::args_os()));
}
