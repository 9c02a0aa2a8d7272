use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    let out = qspin_cli::run(std::env::args_os());
    if let Some(text) = out.stdout {
        let mut stdout = std::io::stdout().lock();
        let _ = writeln!(stdout, "{}", text.trim_end());
    }
    if let Some(text) = out.stderr {
        eprintln!("{}", text.trim_end());
    }
    ExitCode::from(out.code as u8)
}
