use std::process::ExitCode;
use std::time::Instant;

use squeezesim::{parse_spec, render_csv, run, write_atomic, LabError};

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ LabError::Usage(_)) => {
            if let LabError::Usage(inner) = &e {
                let _ = inner.print();
            }
            ExitCode::from(e.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("squeezesim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn real_main() -> Result<(), LabError> {
    let spec = parse_spec(std::env::args_os())?;
    if spec.experiment.is_none() {
        for (k, v) in spec.echo() {
            println!("{k}={v}");
        }
        return Ok(());
    }
    let start = Instant::now();
    let record = run(&spec)?;
    let text = render_csv(&record);
    match &spec.output_path {
        Some(path) => write_atomic(path, &text)?,
        None => print!("{text}"),
    }
    eprintln!(
        "squeezesim: {} finished in {:.1?}",
        spec.experiment.map_or("", |e| e.name()),
        start.elapsed()
    );
    Ok(())
}
