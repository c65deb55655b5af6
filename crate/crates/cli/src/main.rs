fn main() {
    let code = synchrolab_cli::run(std::env::args_os(), |k| std::env::var(k).ok());
    std::process::exit(code);
}
