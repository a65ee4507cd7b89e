fn main() {
    std::process::exit(zrp_cli::run(std::env::args_os()));
}
