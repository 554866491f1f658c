fn main() {
    std::process::exit(pigeonhole_cli::run(std::env::args_os()));
}
