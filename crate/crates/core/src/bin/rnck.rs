use std::io::{self, Write};

fn main() {
    let stdin = io::stdin();
    let stdout = io::stdout();
    let code = {
        let mut input = stdin.lock();
        let mut out = io::BufWriter::new(stdout.lock());
        let mut err = io::stderr().lock();
        let code = rnck::cli::run(std::env::args_os(), &mut input, &mut out, &mut err);
        let _ = out.flush();
        code
    };
    std::process::exit(code);
}
