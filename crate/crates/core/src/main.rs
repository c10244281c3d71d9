fn main() {
    std::process::exit(consistency_lab::experiments::cli_main(std::env::args_os()));
}
