//! `renn simulate`: generate the synthetic inlier/outlier stream, run the
//! stability experiment and emit plottable summaries.

use std::fs;
use std::io::{BufWriter, Write};

use anyhow::Context;
use serde::Serialize;

use crate::error::{data, usage, CliError};
use crate::stream::{frame_line, header_line, STREAM_FORMAT};
use crate::{Preset, SimulateArgs};
use renn_core::synth::{
    gen_gaussian_stream, stability_experiment, GaussianStreamSpec, SeparationCase, StabilityReport,
};
use renn_core::{Config, IdentityId};

#[derive(Serialize)]
struct Summary<'a> {
    spec: &'a GaussianStreamSpec,
    config: &'a Config,
    learned_mode: f64,
    learned_mean: f64,
    learned_std: f64,
    histogram_bin_width: f64,
    elements_total: usize,
    elements_subject_window: usize,
    identities_total: usize,
    dominant_identity: IdentityId,
    dominant_insertions: usize,
    elements_dominant: usize,
    truth_inlier_mean: f64,
    truth_inlier_std: f64,
}

fn build_spec(args: &SimulateArgs) -> GaussianStreamSpec {
    let case = match args.preset {
        Preset::Separated => SeparationCase::Separated,
        Preset::Medium => SeparationCase::Medium,
        Preset::Overlap => SeparationCase::Overlap,
    };
    let mut spec = GaussianStreamSpec::standard(case);
    if let Some(v) = args.inlier_mean {
        spec.inlier_mean = v;
    }
    if let Some(v) = args.inlier_std {
        spec.inlier_std = v;
    }
    if let Some(v) = args.outlier_mean {
        spec.outlier_mean = v;
    }
    if let Some(v) = args.outlier_std {
        spec.outlier_std = v;
    }
    if let Some(v) = args.outlier_fraction {
        spec.outlier_fraction = v;
    }
    if let Some(v) = args.iterations {
        spec.iterations = v;
    }
    if let Some(v) = args.obs_per_frame {
        spec.observations_per_frame = v;
    }
    if let Some(v) = args.dimension {
        spec.dimension = v;
    }
    if let Some(v) = args.config.seed {
        spec.seed = v;
    }
    spec
}

pub fn run(args: &SimulateArgs) -> Result<(), CliError> {
    let spec = build_spec(args);
    spec.validate().map_err(usage)?;
    let config = args.config.build(spec.dimension);
    config.validate().map_err(usage)?;

    let report = stability_experiment(&spec, &config).map_err(data)?;

    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("cannot create {}", args.out_dir.display()))
        .map_err(data)?;

    write_summary(args, &spec, &config, &report)?;
    write_histogram(args, &report)?;
    write_scatter(args, &report)?;

    if let Some(path) = &args.stream_out {
        let frames = gen_gaussian_stream(&spec).map_err(data)?;
        let file = fs::File::create(path)
            .with_context(|| format!("cannot create {}", path.display()))
            .map_err(data)?;
        let mut out = BufWriter::new(file);
        writeln!(out, "{}", header_line(STREAM_FORMAT, spec.dimension)).map_err(data)?;
        for frame in &frames {
            writeln!(out, "{}", frame_line(frame)).map_err(data)?;
        }
        out.flush().map_err(data)?;
    }
    Ok(())
}

fn write_summary(
    args: &SimulateArgs,
    spec: &GaussianStreamSpec,
    config: &Config,
    report: &StabilityReport,
) -> Result<(), CliError> {
    let summary = Summary {
        spec,
        config,
        learned_mode: report.learned_mode,
        learned_mean: report.learned_mean,
        learned_std: report.learned_std,
        histogram_bin_width: report.histogram_bin_width,
        elements_total: report.elements_total,
        elements_subject_window: report.elements_subject_window,
        identities_total: report.identities_total,
        dominant_identity: report.dominant_identity,
        dominant_insertions: report.dominant_insertions,
        elements_dominant: report.elements_dominant,
        truth_inlier_mean: report.truth_inlier_mean,
        truth_inlier_std: report.truth_inlier_std,
    };
    let path = args.out_dir.join("summary.json");
    let mut text = serde_json::to_string_pretty(&summary).map_err(data)?;
    text.push('\n');
    fs::write(&path, text)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(data)
}

fn write_histogram(args: &SimulateArgs, report: &StabilityReport) -> Result<(), CliError> {
    let path = args.out_dir.join("histogram.jsonl");
    let mut out = String::new();
    for bucket in &report.histogram {
        out.push_str(&serde_json::to_string(bucket).map_err(data)?);
        out.push('\n');
    }
    fs::write(&path, out)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(data)
}

fn write_scatter(args: &SimulateArgs, report: &StabilityReport) -> Result<(), CliError> {
    let path = args.out_dir.join("scatter.jsonl");
    let mut out = String::new();
    for point in &report.eligibility_scatter {
        out.push_str(&serde_json::to_string(point).map_err(data)?);
        out.push('\n');
    }
    fs::write(&path, out)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(data)
}
