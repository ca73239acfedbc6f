fn main() {
    std::process::exit(diax::cli::dispatch(std::env::args_os()));
}
