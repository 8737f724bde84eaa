fn main() {
    std::process::exit(maskrgg::cli::cli_dispatch(std::env::args_os()));
}
