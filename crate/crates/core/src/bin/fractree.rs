fn main() {
    std::process::exit(fractree::cli::cli_main(std::env::args_os()));
}
