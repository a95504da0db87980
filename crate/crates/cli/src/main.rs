fn main() {
    std::process::exit(dkl_cli::run(std::env::args_os()));
}
