//! `renn run`: stream a file of frames through the engine.

use std::fs;
use std::io::{BufWriter, Write};

use anyhow::{anyhow, Context};

use crate::error::{data, usage, CliError};
use crate::stream::{header_line, StreamReader, REPORT_FORMAT};
use crate::RunArgs;
use renn_core::Engine;

pub fn run(args: &RunArgs) -> Result<(), CliError> {
    let mut reader = StreamReader::open(&args.stream).map_err(data)?;

    let mut engine = match &args.snapshot_in {
        Some(path) => {
            let bytes = fs::read(path)
                .with_context(|| format!("cannot read snapshot {}", path.display()))
                .map_err(data)?;
            let engine = Engine::restore(&bytes).map_err(data)?;
            args.config
                .check_resume(engine.config())
                .map_err(|msg| usage(anyhow!(msg)))?;
            if engine.config().dimension != reader.dimension {
                return Err(data(anyhow!(
                    "stream dimension {} does not match snapshot dimension {}",
                    reader.dimension,
                    engine.config().dimension
                )));
            }
            engine
        }
        None => {
            let config = args.config.build(reader.dimension);
            Engine::new(config).map_err(usage)?
        }
    };

    let stdout = std::io::stdout();
    let mut out: BufWriter<Box<dyn Write>> = match &args.report_out {
        Some(path) => BufWriter::new(Box::new(
            fs::File::create(path)
                .with_context(|| format!("cannot create {}", path.display()))
                .map_err(data)?,
        )),
        None => BufWriter::new(Box::new(stdout.lock())),
    };
    writeln!(out, "{}", header_line(REPORT_FORMAT, reader.dimension)).map_err(data)?;

    while let Some((line_no, frame)) = reader.next_frame().map_err(data)? {
        let report = engine
            .observe(&frame)
            .map_err(|e| data(anyhow!("line {line_no} (frame {}): {e}", frame.index)))?;
        let line = serde_json::to_string(&report).map_err(data)?;
        writeln!(out, "{line}").map_err(data)?;
    }
    out.flush().map_err(data)?;

    if let Some(path) = &args.snapshot_out {
        fs::write(path, engine.snapshot())
            .with_context(|| format!("cannot write snapshot {}", path.display()))
            .map_err(data)?;
    }
    Ok(())
}
