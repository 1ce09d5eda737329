fn main() {
    std::process::exit(ellgraph_cli::main_with_args(std::env::args_os()));
}
