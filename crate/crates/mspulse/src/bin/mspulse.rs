fn main() {
    std::process::exit(mspulse::cli::run(std::env::args_os()));
}
