fn main() {
    std::process::exit(braglab_cli::run(std::env::args_os()));
}
