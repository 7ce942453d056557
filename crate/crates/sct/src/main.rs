fn main() {
    std::process::exit(sct::cli::dispatch(std::env::args_os()));
}
