fn main() {
    std::process::exit(bmdr_cli::run(std::env::args_os()));
}
