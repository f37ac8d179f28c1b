use rayon::prelude::*;
use serde::Serialize;

use coronal_core::maps::{save_mask, save_scalar_map, MapKind};

use super::Context;
use crate::error::Result;
use crate::layout::{write_json, Layout};
use crate::synth::{generate_day, SynthSpec};

#[derive(Serialize)]
struct Manifest<'a> {
    seed: u64,
    dates: &'a [String],
    spec: &'a SynthSpec,
}

/// Writes the synthetic dataset under `layout.data`; returns the dates written.
pub fn run(ctx: &Context) -> Result<Vec<String>> {
    let spec = &ctx.cfg.synth;
    spec.validate()?;
    let seed = ctx.cfg.seed;
    let all = spec.dates()?;
    let chosen: Vec<(usize, String)> = all.into_iter().enumerate().filter(|(_, d)| ctx.range.contains(d)).collect();
    let layout = &ctx.layout;
    chosen.par_iter().map(|(i, date)| write_day(layout, spec, seed, *i, date)).collect::<Result<Vec<()>>>()?;
    let dates: Vec<String> = chosen.into_iter().map(|(_, d)| d).collect();
    write_json(&layout.data.join("synth.json"), &Manifest { seed, dates: &dates, spec })?;
    Ok(dates)
}

fn write_day(layout: &Layout, spec: &SynthSpec, seed: u64, index: usize, date: &str) -> Result<()> {
    let day = generate_day(spec, seed, index, date)?;
    save_scalar_map(&day.euv, &layout.euv(date))?;
    save_scalar_map(&day.mag, &layout.mag(date))?;
    save_mask(&day.consensus, MapKind::Mask, &layout.consensus(date))?;
    for (name, mask) in &day.external {
        save_mask(mask, MapKind::Mask, &layout.external(date, name))?;
    }
    for (k, mask) in day.models.iter().enumerate() {
        save_mask(mask, MapKind::Model, &layout.model(date, k))?;
    }
    write_json(&layout.truth(date), &day.truth)
}
