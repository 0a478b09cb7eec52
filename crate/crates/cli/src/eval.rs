//! `renn eval`: multipass training on subset A, precision/recall on
//! subset B after each pass.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::anyhow;

use crate::error::{data, usage, CliError};
use crate::stream::{header_line, read_frames, PR_FORMAT};
use crate::EvalArgs;
use renn_core::synth::{dominant_assigned_identity, multipass_train, pr_eval, LabeledItem};
use renn_core::{Engine, IdentityId};

/// Identity that can never be assigned; makes every prediction negative
/// when no target identity has been detected yet.
const NO_TARGET: IdentityId = IdentityId(u64::MAX);

fn load_labeled(path: &Path) -> Result<(usize, Vec<LabeledItem>), CliError> {
    let (dimension, frames) = read_frames(path).map_err(data)?;
    let mut items = Vec::with_capacity(frames.len());
    for (line_no, frame) in frames {
        let Some(labels) = frame.labels else {
            return Err(usage(anyhow!(
                "{}: line {line_no} has no labels; eval needs labelled sets",
                path.display()
            )));
        };
        items.push(LabeledItem {
            observations: frame.observations,
            labels,
        });
    }
    Ok((dimension, items))
}

pub fn run(args: &EvalArgs) -> Result<(), CliError> {
    if args.passes == 0 {
        return Err(usage(anyhow!("--passes must be >= 1")));
    }
    let (dim_a, subset_a) = load_labeled(&args.subset_a)?;
    let (dim_b, subset_b) = load_labeled(&args.subset_b)?;
    if dim_a != dim_b {
        return Err(data(anyhow!(
            "subset dimensions differ: {dim_a} vs {dim_b}"
        )));
    }
    let config = args.config.build(dim_a);
    let mut engine = Engine::new(config).map_err(usage)?;

    let stdout = std::io::stdout();
    let mut out: BufWriter<Box<dyn Write>> = match &args.out {
        Some(path) => BufWriter::new(Box::new(fs::File::create(path).map_err(data)?)),
        None => BufWriter::new(Box::new(stdout.lock())),
    };
    writeln!(out, "{}", header_line(PR_FORMAT, dim_a)).map_err(data)?;

    for pass in 1..=args.passes {
        multipass_train(&mut engine, &subset_a, 1).map_err(data)?;
        let target = match args.target_id {
            Some(id) => IdentityId(id),
            None => dominant_assigned_identity(&engine, &subset_a, &args.target_label)
                .map_err(data)?
                .unwrap_or(NO_TARGET),
        };
        let point = pr_eval(&engine, &subset_b, target, &args.target_label, pass).map_err(data)?;
        writeln!(out, "{}", serde_json::to_string(&point).map_err(data)?).map_err(data)?;
    }
    out.flush().map_err(data)?;
    Ok(())
}
