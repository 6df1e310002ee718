fn main() {
    let (code, text) = hecke_lab::cli::run_args(std::env::args_os());
    print!("{text}");
    std::process::exit(code);
}
