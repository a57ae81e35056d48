fn main() {
    std::process::exit(brocot_cli::run(std::env::args_os()));
}
