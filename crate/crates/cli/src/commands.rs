use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use nestces::{
    aggregate_output, compute_stats, default_init, generate, grid_search, lm_fit, load_csv, render_report,
    CesParams, Dataset, FreeMask, GridOptions, LmOutcome, ParamId, ReportFormat, ReportMeta, ReportRow,
    RhoGrid, Scale, SynthSpec,
};

use crate::args::{AggregateArgs, FitArgs, GridArgs, ReportArgs, SimulateArgs};

/// Exit status for a fit that was produced but did not converge.
const UNCONVERGED: u8 = 2;

fn read_dataset(path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    load_csv(&text).with_context(|| format!("loading {}", path.display()))
}

fn print(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes()).context("writing standard output")?;
    out.flush().context("writing standard output")
}

fn report(
    data: &Dataset,
    outcome: &LmOutcome,
    free_params: usize,
    args: &ReportArgs,
    default_label: &str,
) -> Result<ExitCode> {
    if !(args.tolerance > 0.0) {
        bail!("--tolerance must be positive");
    }
    let scale: Scale = args.scale.into();
    let stats = compute_stats(&data.observations, outcome, scale, free_params, args.tolerance)
        .context("computing fit statistics")?;
    let row = ReportRow {
        meta: ReportMeta {
            industry_code: args.industry.clone(),
            rho_set_label: args.rho_set.clone().unwrap_or_else(|| default_label.to_string()),
        },
        stats,
    };
    print(&render_report(&[row], args.format.into()))?;
    Ok(if outcome.status.converged() {
        ExitCode::SUCCESS
    } else {
        eprintln!("warning: fit did not converge ({})", outcome.status);
        ExitCode::from(UNCONVERGED)
    })
}

pub fn fit(args: &FitArgs) -> Result<ExitCode> {
    let lm = args.lm.options().map_err(|e| anyhow!(e))?;
    let data = read_dataset(&args.input)?;

    let mut flags = [true; 5];
    for a in &args.fix {
        flags[a.id as usize] = false;
    }
    let mask = FreeMask::new(flags).context("--fix")?;

    let lookup = |id: ParamId| {
        args.fix
            .iter()
            .chain(&args.init)
            .rev()
            .find(|a| a.id == id)
            .map(|a| a.value)
    };
    let rho = lookup(ParamId::Rho).unwrap_or(0.5);
    let rho1 = lookup(ParamId::Rho1).unwrap_or(0.5);
    let mut init: CesParams = default_init(&data.observations, rho, rho1);
    for a in args.init.iter().chain(&args.fix) {
        init.set(a.id, a.value);
    }

    let outcome = lm_fit(&data.observations, &init, &mask, args.report.scale.into(), &lm)
        .context("fitting")?;
    report(&data, &outcome, mask.count(), &args.report, "custom")
}

pub fn grid(args: &GridArgs) -> Result<ExitCode> {
    let lm = args.lm.options().map_err(|e| anyhow!(e))?;
    let data = read_dataset(&args.input)?;

    let base = args.preset.map(|p| p.grid());
    let build = |extra: &[nestces::Segment]| {
        let mut g = base.clone().unwrap_or_else(|| RhoGrid::new(vec![]));
        g.extend(&RhoGrid::new(extra.to_vec()));
        if g.segments.is_empty() {
            g = RhoGrid::rho_vec1();
        }
        g
    };
    let rho_grid = build(&args.rho);
    let rho1_grid = build(&args.rho1);
    let label = match args.preset {
        Some(p) if args.rho.is_empty() && args.rho1.is_empty() => p.label(),
        None if args.rho.is_empty() && args.rho1.is_empty() => "rhoVec_1",
        _ => "custom",
    };

    let opts = GridOptions {
        scale: args.report.scale.into(),
        lm,
        sigma_source: args.sigma_source.into(),
        warm_start: !args.cold_start,
        parallel: args.parallel,
    };
    let result = grid_search(&data.observations, &rho_grid, &rho1_grid, &opts).context("grid search")?;

    if let Some(path) = &args.surface {
        let text = result.surface.export(args.surface_format.into());
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }

    let chosen = match &result.best_reasonable {
        Some(best) => best,
        None => {
            eprintln!("warning: no cell has sigma in [0, 1]; reporting the unconstrained best cell");
            &result.best_unconstrained
        }
    };
    eprintln!(
        "selected cell: rho1={} rho={} rss={} ({} of {} cells fitted)",
        chosen.rho1,
        chosen.rho,
        chosen.outcome.rss,
        result.surface.cells.iter().filter(|c| c.fit.is_some()).count(),
        result.surface.len()
    );
    report(&data, &chosen.outcome, FreeMask::shares().count(), &args.report, label)
}

pub fn simulate(args: &SimulateArgs) -> Result<ExitCode> {
    let spec = SynthSpec {
        true_params: CesParams::new(args.efficiency, args.delta, args.delta1, args.rho, args.rho1),
        n: args.n,
        k_range: args.k_range,
        l_range: args.l_range,
        noise_sigma: args.noise,
        noise_kind: args.noise_kind.into(),
        seed: args.seed,
    };
    let data = generate(&spec).context("generating data")?;
    let csv = data.to_csv();
    match &args.output {
        Some(path) => fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?,
        None => print(&csv)?,
    }
    Ok(ExitCode::SUCCESS)
}

pub fn aggregate(args: &AggregateArgs) -> Result<ExitCode> {
    let data = read_dataset(&args.input)?;
    let by: nestces::GroupBy = args.by.into();
    let totals = aggregate_output(&data, by).context("aggregating")?;
    let columns = by.columns();

    let text = match ReportFormat::from(args.format) {
        ReportFormat::Text => {
            let mut header: Vec<String> = columns.iter().map(|c| c.to_string()).collect();
            header.push("total_output".into());
            let rows: Vec<Vec<String>> = totals
                .iter()
                .map(|t| {
                    let mut r = t.key.clone();
                    r.push(t.total_output.to_string());
                    r
                })
                .collect();
            let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
            for r in &rows {
                for (w, c) in widths.iter_mut().zip(r) {
                    *w = (*w).max(c.chars().count());
                }
            }
            let mut out = String::new();
            for r in std::iter::once(&header).chain(&rows) {
                let line: Vec<String> = r.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
                out.push_str(line.join("  ").trim_end());
                out.push('\n');
            }
            out
        }
        ReportFormat::Csv => {
            let mut out = columns.join(",");
            out.push_str(",total_output\n");
            for t in &totals {
                let key: Vec<String> = t.key.iter().map(|k| csv_field(k)).collect();
                out.push_str(&format!("{},{}\n", key.join(","), t.total_output));
            }
            out
        }
        ReportFormat::Json => {
            let records: Vec<serde_json::Value> = totals
                .iter()
                .map(|t| {
                    let mut obj = serde_json::Map::new();
                    for (col, k) in columns.iter().zip(&t.key) {
                        obj.insert(col.to_string(), k.clone().into());
                    }
                    obj.insert("total_output".into(), t.total_output.into());
                    obj.into()
                })
                .collect();
            let mut s = serde_json::to_string_pretty(&records)?;
            s.push('\n');
            s
        }
    };
    print(&text)?;
    Ok(ExitCode::SUCCESS)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
