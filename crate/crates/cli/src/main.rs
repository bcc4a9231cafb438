// Copyright 2026 The epirelax Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! `epirelax envelope|energy|recover --config <path> --out <dir>`.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 4 failed verdict (outputs are still written).

mod config;
mod svg;

use clap::{Parser, Subcommand};
use config::Loaded;
use epirelax::convergence::{self, VerifyOptions};
use epirelax::elastic::{self, DisplacementField, FilmMesh};
use epirelax::energy::{self, RegularConfiguration};
use epirelax::envelope::{self, EnvelopeTable};
use epirelax::io::{self, CsvOut, IoError};
use epirelax::profile::Part;
use epirelax::recovery::{self, RecoveryOptions};
use sha2::{Digest, Sha256};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use svg::{Plot, Scale, Series};
use thiserror::Error;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "epirelax", version, about = "Relaxed energies and recovery sequences for strained thin films")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Debug, PartialEq, Eq, Subcommand)]
enum Command {
    /// Tabulate ψ and its envelopes.
    Envelope(Args),
    /// Evaluate ℱ and 𝒢 of a configuration.
    Energy(Args),
    /// Build and verify a recovery sequence.
    Recover(Args),
}

#[derive(Clone, Debug, PartialEq, Eq, clap::Args)]
struct Args {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Recorded in output headers; the computations are deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    threads: Option<usize>,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Envelope(_) => "envelope",
            Command::Energy(_) => "energy",
            Command::Recover(_) => "recover",
        }
    }

    fn args(&self) -> &Args {
        match self {
            Command::Envelope(a) | Command::Energy(a) | Command::Recover(a) => a,
        }
    }
}

#[derive(Debug, Error)]
enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("verdict failed: {0}")]
    Verdict(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Verdict(_) => 4,
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Write(_) => CliError::Numeric(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

fn numeric<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Numeric(e.to_string())
}

fn config_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Config(e.to_string())
}

/// Output directory and the comment lines every file starts with.
struct Output {
    dir: PathBuf,
    header: Vec<String>,
}

impl Output {
    fn new(cmd: &Command, loaded: &Loaded) -> Result<Output, CliError> {
        let args = cmd.args();
        let dir = args
            .out
            .clone()
            .or_else(|| loaded.config.out.as_ref().map(|o| loaded.base.join(o)))
            .ok_or_else(|| CliError::Config("no output directory (--out)".into()))?;
        std::fs::create_dir_all(&dir).map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))?;
        let hash = Sha256::digest(loaded.text.as_bytes());
        let hex: String = hash.iter().map(|b| format!("{b:02x}")).collect();
        let header = vec![
            format!("epirelax {VERSION}"),
            format!("command {}", cmd.name()),
            format!("config_sha256 {hex}"),
            format!("seed {}", args.seed),
        ];
        Ok(Output { dir, header })
    }

    fn write<F>(&self, name: &str, f: F) -> Result<(), CliError>
    where
        F: FnOnce(BufWriter<File>, &[String]) -> Result<BufWriter<File>, IoError>,
    {
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(|e| CliError::Numeric(format!("cannot write {}: {e}", path.display())))?;
        let mut w = f(BufWriter::new(file), &self.header)?;
        w.flush().map_err(numeric)?;
        Ok(())
    }

    fn write_svg(&self, name: &str, plot: &Plot) -> Result<(), CliError> {
        let mut body = String::new();
        for h in &self.header {
            body.push_str(&format!("<!-- {} -->\n", h.replace("--", "-")));
        }
        body.push_str(&plot.render());
        let path = self.dir.join(name);
        std::fs::write(&path, body).map_err(|e| CliError::Numeric(format!("cannot write {}: {e}", path.display())))
    }
}

fn envelope_table(loaded: &Loaded) -> Result<EnvelopeTable, CliError> {
    let psi = loaded.surface()?;
    envelope::subadditive_convex_envelope(&psi, loaded.config.envelope.grid()).map_err(numeric)
}

fn cmd_envelope(cmd: &Command, loaded: &Loaded) -> Result<(), CliError> {
    let env = envelope_table(loaded)?;
    let out = Output::new(cmd, loaded)?;
    let cfg = loaded.config.envelope;
    let n = cfg.plot_points - 1;
    let s: Vec<f64> = (0..=n).map(|i| cfg.s_max * i as f64 / n as f64).collect();
    out.write("envelope.csv", |w, h| io::write_envelope_csv(w, h, &env, &s))?;
    let curve = |name: &str, f: &dyn Fn(f64) -> f64| Series { name: name.into(), points: s.iter().map(|&x| (x, f(x))).collect() };
    let plot = Plot {
        title: "surface energy density and envelopes".into(),
        x_label: "s".into(),
        y_label: "value".into(),
        x_scale: Scale::Linear,
        y_scale: Scale::Linear,
        series: vec![
            curve("psi", &|x| env.psi_at(x)),
            curve("psi_cvx", &|x| env.psi_cvx(x)),
            curve("psi_tilde", &|x| env.psi_tilde(x).unwrap_or(f64::NAN)),
            curve("psi_c", &|x| env.psi_c(x).unwrap_or(f64::NAN)),
        ],
    };
    out.write_svg("envelope.svg", &plot)?;
    println!("s0 = {}", env.threshold_s0());
    println!("theta = {}", env.recession_theta());
    Ok(())
}

fn solve_elastic(
    loaded: &Loaded,
    p: &epirelax::profile::Profile,
    out: &Output,
) -> Result<Option<(elastic::ElasticityTensor, FilmMesh, DisplacementField)>, CliError> {
    let Some((c, e)) = loaded.elasticity()? else {
        return Ok(None);
    };
    if !p.is_lipschitz() {
        eprintln!("note: profile is not Lipschitz; bulk term not evaluated");
        return Ok(None);
    }
    let d = e.d.unwrap_or_else(|| p.width());
    let mesh = elastic::mesh_film(p, d, e.nx, e.ny).map_err(numeric)?;
    let eq = elastic::equilibrium(&mesh, &c, e.bc).map_err(numeric)?;
    out.write("mesh_nodes.csv", |w, h| io::write_mesh_nodes_csv(w, h, &mesh))?;
    out.write("mesh_triangles.csv", |w, h| io::write_mesh_triangles_csv(w, h, &mesh))?;
    out.write("displacement.csv", |w, h| io::write_displacement_csv(w, h, &eq.displacement))?;
    Ok(Some((c, mesh, eq.displacement)))
}

fn cmd_energy(cmd: &Command, loaded: &Loaded) -> Result<(), CliError> {
    let psi = loaded.surface()?;
    let env = envelope::subadditive_convex_envelope(&psi, loaded.config.envelope.grid()).map_err(numeric)?;
    let p = loaded.profile()?;
    let mu = loaded.measure(&p)?;
    let out = Output::new(cmd, loaded)?;
    let el = solve_elastic(loaded, &p, &out)?;
    let c = el.as_ref().map(|e| e.0);
    let mut rows = Vec::new();
    let regular = p.is_lipschitz() && mu.atoms().is_empty() && mu.pieces().iter().all(|q| q.part == Part::Regular);
    if regular {
        let mut cfg = RegularConfiguration::new(p.clone(), mu.clone()).map_err(config_err)?;
        if let Some((_, mesh, v)) = &el {
            cfg = cfg.with_displacement(mesh.clone(), v.clone()).map_err(numeric)?;
        }
        let f = energy::total_energy_f(&cfg, Some(&psi), c.as_ref()).map_err(numeric)?;
        println!("F = {}", f.total);
        rows.push(("F", f));
    } else {
        eprintln!("note: configuration is not regular; F not evaluated");
    }
    let elastic_ref = el.as_ref().map(|(_, m, v)| (m, v));
    let g = energy::total_energy_g(&p, &mu, elastic_ref, &env, c.as_ref()).map_err(numeric)?;
    println!("G = {}", g.total);
    rows.push(("G", g));
    out.write("energy.csv", |w, h| io::write_energy_csv(w, h, &rows))
}

fn cmd_recover(cmd: &Command, loaded: &Loaded) -> Result<(), CliError> {
    let psi = loaded.surface()?;
    let rc = loaded.recovery()?;
    let p = loaded.profile()?;
    let mu = loaded.measure(&p)?;
    let env = envelope::subadditive_convex_envelope(&psi, loaded.config.envelope.grid()).map_err(numeric)?;
    let out = Output::new(cmd, loaded)?;
    let opts = RecoveryOptions {
        cell: rc.cell,
        grid_tries: rc.grid_tries,
        max_refinements: rc.max_refinements,
        oscillate: rc.oscillate,
        parallel: true,
        diagnostics: Some(rc.hausdorff_resolution),
        envelope_grid: loaded.config.envelope.grid(),
    };
    let (m, area) = (mu.total_mass(), p.area_above_zero());
    let seq = recovery::build_recovery_sequence(&p, &mu, m, area, &rc.ks, &psi, &opts).map_err(numeric)?;

    let mut configs = Vec::with_capacity(seq.len());
    for r in &seq {
        let cfg = if rc.density_scale == 1.0 {
            r.config.clone()
        } else {
            RegularConfiguration::new(r.config.profile().clone(), r.config.density().scaled(rc.density_scale))
                .map_err(numeric)?
        };
        let pts = cfg.profile().polyline_points().map_err(numeric)?;
        out.write(&format!("profile_k{}.csv", r.k), |w, h| io::write_profile_csv(w, h, &pts))?;
        out.write(&format!("density_k{}.csv", r.k), |w, h| io::write_density_csv(w, h, cfg.density()))?;
        configs.push((r.k, cfg));
    }
    let stages: Vec<_> = seq.iter().flat_map(|r| r.stages.iter().cloned()).collect();
    out.write("stages.csv", |w, h| io::write_stage_csv(w, h, &stages))?;
    out.write("bookkeeping.csv", |w, h| write_bookkeeping(w, h, &seq))?;
    let g = p.decompose();
    out.write("projection.csv", |w, h| io::write_projection_csv(w, h, &g, &mu, &seq[0].grid))?;

    let vopts = VerifyOptions { hausdorff_resolution: rc.hausdorff_resolution, bank_cell: rc.cell, bbox: None };
    let pairs: Vec<(u32, &RegularConfiguration)> = configs.iter().map(|(k, c)| (*k, c)).collect();
    let report =
        convergence::verify_sequence(&pairs, &p, &mu, &env, &psi, &rc.tolerances(), &vopts).map_err(numeric)?;
    out.write("convergence.csv", |w, h| io::write_convergence_csv(w, h, &report))?;
    let series = |name: &str, f: &dyn Fn(&convergence::ConvergenceRow) -> f64| Series {
        name: name.into(),
        points: report.rows.iter().map(|r| (r.k as f64, f(r))).collect(),
    };
    let plot = Plot {
        title: "recovery sequence convergence".into(),
        x_label: "k".into(),
        y_label: "gap".into(),
        x_scale: Scale::Log,
        y_scale: Scale::Log,
        series: vec![
            series("|F-G|/G", &|r| (r.f_total - r.g_limit).abs() / r.g_limit.abs()),
            series("hausdorff", &|r| r.hausdorff),
            series("l1", &|r| r.l1),
            series("weak-*", &|r| r.weakstar),
            series("mass error", &|r| r.mass_error),
        ],
    };
    out.write_svg("convergence.svg", &plot)?;
    let summary = report.summary_line();
    println!("{summary}");
    if report.verdict.all() {
        Ok(())
    } else {
        Err(CliError::Verdict(summary))
    }
}

fn write_bookkeeping<W: Write>(w: W, header: &[String], seq: &[recovery::Recovered]) -> Result<W, IoError> {
    let cols = [
        "k",
        "k_effective",
        "eps_k",
        "area_shift",
        "r_k",
        "final_shift",
        "gamma",
        "t",
        "oscillated",
        "wriggled",
        "wriggle_fallbacks",
    ];
    let mut out = CsvOut::new(w, header, &cols)?;
    for r in seq {
        let b = &r.book;
        out.row([
            r.k.to_string(),
            r.k_effective.to_string(),
            io::num(b.eps_k),
            io::num(b.area_shift),
            io::num(b.r_k),
            io::num(b.final_shift),
            io::num(b.gamma),
            io::num(b.t),
            b.oscillated.to_string(),
            b.wriggled.to_string(),
            b.wriggle_fallbacks.to_string(),
        ])?;
    }
    out.finish()
}

fn run(cmd: &Command) -> Result<(), CliError> {
    let args = cmd.args();
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(config_err)?;
    }
    let loaded = config::load(Path::new(&args.config))?;
    match cmd {
        Command::Envelope(_) => cmd_envelope(cmd, &loaded),
        Command::Energy(_) => cmd_energy(cmd, &loaded),
        Command::Recover(_) => cmd_recover(cmd, &loaded),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("epirelax: {e}");
            ExitCode::from(e.code())
        }
    }
}
