fn main() {
    std::process::exit(ruinprob::cli::run(std::env::args_os()));
}
