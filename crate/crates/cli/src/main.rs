fn main() {
    std::process::exit(mnn_cli::dispatch(std::env::args_os()));
}
