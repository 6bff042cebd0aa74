fn main() {
    std::process::exit(numbl::cli::dispatch(std::env::args_os()));
}
