fn main() {
    let code = kwmoments::cli::run(std::env::args_os(), &mut std::io::stdout().lock());
    std::process::exit(code);
}
