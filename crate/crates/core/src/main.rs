fn main() {
    std::process::exit(treegain::cli::run(std::env::args_os()));
}
