fn main() {
    std::process::exit(efl_cli::run(std::env::args_os()));
}
