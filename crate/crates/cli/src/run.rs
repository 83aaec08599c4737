//! Runs one experiment and writes its artifacts.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context as _, Result};
use kss_core::dusty::{DustyRun, DEFAULT_FRONT_THRESHOLD, FRONT_BAND_CELLS};
use kss_core::output::format_sci;
use kss_core::stability::{dt_for_cfl, BLOWUP_THRESHOLD};
use kss_core::{
    convergence_table, integrate_monitored, run_dusty_gas, stability_scan, Discretization, DustyGasParams,
    DustyRunConfig, WaveState,
};
use tempfile::NamedTempFile;

use crate::config::{Experiment, RunConfig};

#[derive(Debug, Clone)]
pub struct Options {
    pub out: PathBuf,
    /// Directory that relative sample files are resolved against.
    pub base: PathBuf,
    pub fail_on_blowup: bool,
    /// Also write a gnuplot script next to the data.
    pub plot: bool,
}

/// How a completed run ended; errors before or during a run are `Err`.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Success,
    /// Some cells or steps failed; artifacts were still written.
    Failures(Vec<String>),
    /// Blow-up detected and `fail_on_blowup` was set.
    Unstable(String),
}

impl Outcome {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Success => 0,
            Self::Failures(_) => 1,
            Self::Unstable(_) => 2,
        }
    }
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = NamedTempFile::new_in(dir).with_context(|| format!("cannot create file in {}", dir.display()))?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        body(&mut w)?;
        w.flush()?;
    }
    tmp.persist(path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

/// `sol_t<time>.csv`, with the time in its shortest exact decimal form.
pub fn snapshot_name(t: f64) -> String {
    format!("sol_t{t}.csv")
}

pub fn run(config: &RunConfig, opts: &Options) -> Result<Outcome> {
    config.validate()?;
    fs::create_dir_all(&opts.out).with_context(|| format!("cannot create {}", opts.out.display()))?;
    match config.experiment {
        Experiment::Convergence => convergence(config, opts),
        Experiment::StabilityScan => stability(config, opts),
        Experiment::SingleRun => single_run(config, opts),
        Experiment::DustyGas => dusty(config, opts),
    }
}

fn convergence(config: &RunConfig, opts: &Options) -> Result<Outcome> {
    let problem = config.problem(&opts.base)?;
    let dts = config.dts()?;
    let table = convergence_table(&problem, &config.n, &dts);
    let path = opts.out.join(format!("{}_errors.csv", config.name));
    write_atomic(&path, |w| Ok(table.write_csv(w, config.error_norm)?))?;
    println!("relative errors ({} norm), rows dt, columns N = {:?}", config.error_norm.name(), config.n);
    for (i, dt) in dts.iter().enumerate() {
        let cells: Vec<String> = (0..config.n.len())
            .map(|j| table.cell(i, j, config.error_norm).map_or("failed".into(), format_sci))
            .collect();
        println!("  {} {}", format_sci(*dt), cells.join(" "));
    }
    for j in 0..config.n.len() {
        let ratios: Vec<String> = table
            .ratios(j, config.error_norm)
            .into_iter()
            .map(|r| r.map_or("-".into(), |r| format!("{r:.3}")))
            .collect();
        println!("  N={} halving ratios: {}", config.n[j], ratios.join(" "));
    }
    println!("wrote {}", path.display());
    if opts.plot {
        let script = format!(
            "set datafile separator ','\nset logscale xy\nset key autotitle columnhead\nset xlabel 'dt'\nset ylabel 'relative error'\nplot for [c=2:{}] '{}' using 1:c with linespoints\n",
            config.n.len() + 1,
            path.file_name().unwrap().to_string_lossy()
        );
        write_script(config, opts, &script)?;
    }
    let failures = table.failures();
    Ok(if failures.is_empty() {
        Outcome::Success
    } else {
        for f in &failures {
            eprintln!("cell failed: {f}");
        }
        Outcome::Failures(failures)
    })
}

fn stability(config: &RunConfig, opts: &Options) -> Result<Outcome> {
    let problem = config.problem(&opts.base)?;
    let scan = stability_scan(&problem, &config.n, &config.dts()?, config.long_run);
    let path = opts.out.join(format!("{}_stability.csv", config.name));
    write_atomic(&path, |w| Ok(scan.write_csv(w)?))?;
    for r in &scan.reports {
        println!(
            "  N={:<5} dt={} cfl={} cn_norm={}{}",
            r.n,
            format_sci(r.dt),
            format_sci(r.cfl),
            format_sci(r.cn_norm),
            if r.blowup == Some(true) { "  BLOW-UP" } else { "" }
        );
    }
    if let Some(fit) = scan.fit {
        println!(
            "fit cn_norm - 1 = a N dt + b dt: a = {}, b = {}, residual {}",
            format_sci(fit.a),
            format_sci(fit.b),
            format_sci(fit.residual)
        );
    }
    println!("wrote {}", path.display());
    if opts.plot {
        let script = format!(
            "set datafile separator ','\nset key autotitle columnhead\nset xlabel 'N dt'\nset ylabel 'cn_norm - 1'\nplot '{}' using ($1*$2):($4-1) with points\n",
            path.file_name().unwrap().to_string_lossy()
        );
        write_script(config, opts, &script)?;
    }
    let failures: Vec<String> = scan
        .failures
        .iter()
        .map(|(n, dt, e)| format!("N={n} dt={}: {e}", format_sci(*dt)))
        .collect();
    let blowups: Vec<String> = scan
        .reports
        .iter()
        .filter(|r| r.blowup == Some(true))
        .map(|r| format!("N={} dt={}", r.n, format_sci(r.dt)))
        .collect();
    if !blowups.is_empty() {
        eprintln!("instability detected in {} cell(s): {}", blowups.len(), blowups.join(", "));
    }
    Ok(if !failures.is_empty() {
        for f in &failures {
            eprintln!("cell failed: {f}");
        }
        Outcome::Failures(failures)
    } else if opts.fail_on_blowup && !blowups.is_empty() {
        Outcome::Unstable(blowups.join(", "))
    } else {
        Outcome::Success
    })
}

fn write_state(disc: &Discretization, s: &WaveState, w: &mut dyn Write) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let two_d = disc.grid().dim() == 2;
    if two_d {
        wr.write_record(["x", "y", "u", "ut"])?;
    } else {
        wr.write_record(["x", "u", "ut"])?;
    }
    for j in 0..s.len() {
        let (x, y) = disc.grid().coords(j);
        let mut rec = vec![format_sci(x)];
        if two_d {
            rec.push(format_sci(y));
        }
        rec.push(format_sci(s.u[j]));
        rec.push(format_sci(s.ut[j]));
        wr.write_record(&rec)?;
    }
    wr.flush()?;
    Ok(())
}

/// Integrates with a fixed step to `final_time` (a shorter last step lands on
/// it exactly); each snapshot is the first step state at or past its target,
/// so snapshots never perturb the trajectory.
fn single_run(config: &RunConfig, opts: &Options) -> Result<Outcome> {
    let problem = config.problem(&opts.base)?;
    let n = config.n[0];
    let disc = problem.discretization(n)?;
    let dt = match config.dts()?.first() {
        Some(&dt) => dt,
        None => dt_for_cfl(&disc, config.cfls()?[0]),
    };
    let initial = problem.initial_state(&disc)?;
    let initial_sup = initial.sup_norm();
    println!(
        "N={n} dt={} cfl={} initial sup {}",
        format_sci(dt),
        format_sci(disc.cfl(dt)),
        format_sci(initial_sup)
    );
    let mut targets = config.snapshot_times.clone();
    targets.push(config.final_time);
    targets.sort_by(f64::total_cmp);
    targets.dedup();
    let mut pending = targets.into_iter().peekable();
    let mut snapshots: Vec<(f64, WaveState)> = Vec::new();
    let run = integrate_monitored(&initial, &disc, dt, config.final_time, BLOWUP_THRESHOLD, |s| {
        while let Some(&t) = pending.peek() {
            if s.time < t - 1e-9 * dt {
                break;
            }
            snapshots.push((t, s.clone()));
            pending.next();
        }
    })?;
    let mut written = Vec::new();
    for (t, state) in &snapshots {
        let path = opts.out.join(snapshot_name(*t));
        write_atomic(&path, |w| write_state(&disc, state, w))?;
        println!(
            "  t={t} (step time {:.6}): sup {} -> {}",
            state.time,
            format_sci(state.sup_norm()),
            path.display()
        );
        written.push(path);
    }
    println!("max sup {} ({:.2}x initial)", format_sci(run.max_sup), run.max_sup / initial_sup);
    if opts.plot {
        let column = if disc.grid().dim() == 2 { 3 } else { 2 };
        let plots: Vec<String> = written
            .iter()
            .map(|p| {
                let f = p.file_name().unwrap().to_string_lossy().into_owned();
                format!("'{f}' using 1:{column} with lines title '{f}'")
            })
            .collect();
        let script = format!(
            "set datafile separator ','\nset xlabel 'x'\nset ylabel 'u'\nplot {}\n",
            plots.join(", \\\n     ")
        );
        write_script(config, opts, &script)?;
    }
    if let Some(tb) = run.blowup_time {
        let msg = format!("sup-norm exceeded {} at t = {tb:.4}", format_sci(BLOWUP_THRESHOLD));
        eprintln!("instability detected: {msg}");
        let path = opts.out.join(snapshot_name(tb));
        write_atomic(&path, |w| write_state(&disc, &run.state, w))?;
        if opts.fail_on_blowup {
            return Ok(Outcome::Unstable(msg));
        }
    }
    Ok(Outcome::Success)
}

fn dusty(config: &RunConfig, opts: &Options) -> Result<Outcome> {
    let params = config.dusty.unwrap_or_default();
    let run_config = DustyRunConfig {
        n: config.n[0],
        cfl: config.cfls()?[0],
        final_time: config.final_time,
        snapshot_times: config.snapshot_times.clone(),
        front_threshold: config.front_threshold.unwrap_or(DEFAULT_FRONT_THRESHOLD),
    };
    let run = run_dusty_gas(&params, &run_config)?;
    for s in &run.snapshots {
        let path = opts.out.join(snapshot_name(s.time));
        write_atomic(&path, |w| {
            let mut wr = csv::Writer::from_writer(w);
            wr.write_record(["z", "w"])?;
            for (z, v) in s.z.iter().zip(&s.w) {
                wr.write_record([format_sci(*z), format_sci(*v)])?;
            }
            wr.flush()?;
            Ok(())
        })?;
        println!("  t={}: {}", s.time, path.display());
    }
    let fronts = opts.out.join(format!("{}_fronts.csv", config.name));
    write_atomic(&fronts, |w| {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["time", "front", "sigma", "sup", "ahead_ratio"])?;
        for f in &run.fronts {
            wr.write_record([f.time, f.front, f.sigma, f.sup, f.ahead_ratio].map(format_sci))?;
        }
        wr.flush()?;
        Ok(())
    })?;
    report_dusty(&params, &run);
    println!("wrote {}", fronts.display());
    if opts.plot {
        let plots: Vec<String> = run
            .snapshots
            .iter()
            .map(|s| format!("'{}' using 1:2 with lines title 't = {}'", snapshot_name(s.time), s.time))
            .collect();
        let script = format!(
            "set datafile separator ','\nset xlabel 'z'\nset ylabel 'w'\nplot {}\n",
            plots.join(", \\\n     ")
        );
        write_script(config, opts, &script)?;
    }
    Ok(Outcome::Success)
}

fn report_dusty(params: &DustyGasParams, run: &DustyRun) {
    let (mut offset, mut ahead) = (0.0_f64, 0.0_f64);
    for f in run.fronts_between(0.25, f64::INFINITY) {
        offset = offset.max((f.front - f.sigma).abs() / run.dz);
        ahead = ahead.max(f.ahead_ratio);
    }
    println!(
        "dt={} cfl={} steps={} max boundary residual {}",
        format_sci(run.dt),
        format_sci(run.cfl),
        run.steps,
        format_sci(run.max_boundary_residual)
    );
    println!(
        "front vs t - t^2/(4 H1) (H1 = {}): worst offset {offset:.1} cells, worst field beyond {FRONT_BAND_CELLS} cells ahead {} of sup",
        params.h1,
        format_sci(ahead)
    );
}

fn write_script(config: &RunConfig, opts: &Options, script: &str) -> Result<()> {
    let path = opts.out.join(format!("{}.gp", config.name));
    write_atomic(&path, |w| Ok(w.write_all(script.as_bytes())?))?;
    println!("wrote {}", path.display());
    Ok(())
}
