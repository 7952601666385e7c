fn main() {
    std::process::exit(sonnmf::cli::run(std::env::args_os()));
}
