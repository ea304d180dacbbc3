fn main() {
    std::process::exit(unirig_cli::run(std::env::args_os()));
}
