fn main() {
    std::process::exit(bathsim::cli::run(std::env::args_os()));
}
