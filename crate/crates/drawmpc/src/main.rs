fn main() {
    std::process::exit(drawmpc::cli::run(std::env::args_os()));
}
