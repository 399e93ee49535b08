fn main() {
    let env_seed = std::env::var(asepqj_cli::SEED_ENV).ok();
    let code = asepqj_cli::run(std::env::args_os(), env_seed, &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
