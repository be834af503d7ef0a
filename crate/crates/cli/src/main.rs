fn main() {
    std::process::exit(weightlab_cli::run(std::env::args_os()));
}
