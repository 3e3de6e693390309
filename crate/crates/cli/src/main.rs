use std::io::Write;

fn main() {
    let out = asrscale_cli::run_command(std::env::args().skip(1));
    print!("{}", out.stdout);
    eprint!("{}", out.stderr);
    let _ = std::io::stdout().flush();
    let _ = std::io::stderr().flush();
    std::process::exit(out.code);
}
