fn main() {
    std::process::exit(firecontract::cli::main_with_args(std::env::args_os()));
}
