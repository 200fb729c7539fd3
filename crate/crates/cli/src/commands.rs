//! Command-line front end: argument parsing, artifact files and exit codes.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use dmi_core::beamform::FocusedStack;
use dmi_core::distortion::StrehlMap;
use dmi_core::Error;

use crate::cmx::{read_cmx, write_cmx, CmxArray, CmxData};
use crate::config::{parse_config, PipelineConfig};
use crate::render::{encode_pgm, encode_png, render_db, render_linear, Gray};
use crate::stages;

pub const MANIFEST: &str = "manifest.txt";

#[derive(Parser, Debug)]
#[command(name = "dmi", version, about = "Distortion-matrix reflection imaging pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Configuration file (INI); built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Overrides the phantom seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Input artifact; defaults to the previous stage's file in the output directory.
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Synthesize an acquisition.
    Simulate(Common),
    /// Focus an acquisition into R_xx(z).
    Beamform(Common),
    /// Remove specular multiples in the far field.
    FilterReverb(Common),
    /// Distortion matrix, correlation spectrum and entropy.
    Distort(Common),
    /// Isoplanatic and full-field corrected images with Strehl maps.
    Correct(Common),
    /// Entropy versus beamforming speed.
    SweepSpeed(Common),
    /// Render a CMX map or focused stack to PGM and PNG.
    Render {
        /// CMX file to render.
        file: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
        /// Linear [0, 1] scale instead of dB (Strehl maps).
        #[arg(long)]
        linear: bool,
    },
    /// All stages in sequence.
    Pipeline(Common),
}

/// Failure of a command, mapped onto an exit status.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Stage { stage: &'static str, err: Error },
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Stage { .. } => 1,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage error: {m}"),
            Failure::Stage { stage, err } => write!(f, "stage `{stage}` failed: {err}"),
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn stage<T>(name: &'static str, r: dmi_core::Result<T>) -> Outcome<T> {
    r.map_err(|err| Failure::Stage { stage: name, err })
}

struct Ctx {
    cfg: PipelineConfig,
    out: PathBuf,
}

impl Ctx {
    fn new(c: &Common) -> Outcome<Self> {
        let mut cfg = match &c.config {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", p.display())))?;
                parse_config(&text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?
            }
            None => parse_config("").expect("defaults are valid"),
        };
        if let Some(s) = c.seed {
            cfg.phantom.rng_seed = s;
        }
        fs::create_dir_all(&c.out).map_err(|e| Failure::Usage(format!("cannot create {}: {e}", c.out.display())))?;
        Ok(Self { cfg, out: c.out.clone() })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn input(&self, c: &Common, default: &str) -> Outcome<CmxArray> {
        let p = c.input.clone().unwrap_or_else(|| self.path(default));
        load(&p)
    }

    fn write(&self, stage_name: &'static str, name: &str, bytes: &[u8]) -> Outcome<()> {
        stage(stage_name, fs::write(self.path(name), bytes).map_err(Error::from))
    }

    fn write_cmx(&self, stage_name: &'static str, name: &str, a: dmi_core::Result<CmxArray>) -> Outcome<()> {
        let a = stage(stage_name, a)?;
        stage(stage_name, write_cmx(&self.path(name), &a))
    }

    fn write_gray(&self, stage_name: &'static str, stem: &str, g: &Gray) -> Outcome<()> {
        self.write(stage_name, &format!("{stem}.pgm"), &encode_pgm(g))?;
        self.write(stage_name, &format!("{stem}.png"), &stage(stage_name, encode_png(g))?)
    }

    fn image(&self, stage_name: &'static str, stem: &str, stack: &FocusedStack) -> Outcome<()> {
        let img = stages::image_of(stack);
        self.write_cmx(stage_name, &format!("{stem}.cmx"), stages::map_to_cmx(&stack.grid, &img))?;
        let (nz, nx) = img.dim();
        let v: Vec<f64> = img.iter().copied().collect();
        let (g, warn) = stage(stage_name, render_db(&v, nx, nz, self.cfg.pipeline.floor_db))?;
        if let Some(w) = warn {
            eprintln!("warning: {stem}: {w}");
        }
        self.write_gray(stage_name, stem, &g)
    }

    fn strehl(&self, stage_name: &'static str, stem: &str, stack: &FocusedStack, s: &StrehlMap) -> Outcome<()> {
        self.write_cmx(stage_name, &format!("{stem}.cmx"), stages::map_to_cmx(&stack.grid, &s.s))?;
        let (nz, nx) = s.s.dim();
        let v: Vec<f64> = s.s.iter().copied().collect();
        self.write_gray(stage_name, stem, &stage(stage_name, render_linear(&v, nx, nz))?)
    }

    fn csv(&self, stage_name: &'static str, name: &str, header: &[&str], rows: Vec<Vec<String>>) -> Outcome<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Failure::Stage {
            stage: stage_name,
            err: Error::invalid(e.to_string()),
        };
        w.write_record(header).map_err(io)?;
        for r in rows {
            w.write_record(&r).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Failure::Stage {
            stage: stage_name,
            err: Error::invalid(e.to_string()),
        })?;
        self.write(stage_name, name, &bytes)
    }
}

fn load(p: &Path) -> Outcome<CmxArray> {
    if !p.exists() {
        return Err(Failure::Usage(format!("missing input {}", p.display())));
    }
    read_cmx(p).map_err(|e| Failure::Usage(e.to_string()))
}

fn f(v: f64) -> String {
    v.to_string()
}

fn cmd_simulate(ctx: &Ctx) -> Outcome<()> {
    let acq = stage("simulate", stages::simulate(&ctx.cfg))?;
    ctx.write_cmx("simulate", "acquisition.cmx", stages::acquisition_to_cmx(&acq))
}

fn cmd_beamform(ctx: &Ctx, c: &Common) -> Outcome<()> {
    let a = ctx.input(c, "acquisition.cmx")?;
    let acq = stage("beamform", stages::acquisition_from_cmx(&ctx.cfg, &a))?;
    let stack = stage("beamform", stages::beamform(&ctx.cfg, &acq))?;
    for w in &stack.warnings {
        eprintln!("warning: {w}");
    }
    ctx.write_cmx("beamform", "focused.cmx", stages::stack_to_cmx(&stack))?;
    ctx.image("beamform", "image", &stack)
}

fn load_stack(ctx: &Ctx, c: &Common, default: &str, name: &'static str) -> Outcome<FocusedStack> {
    let a = ctx.input(c, default)?;
    stage(name, stages::stack_from_cmx(&ctx.cfg, &a))
}

fn cmd_filter(ctx: &Ctx, c: &Common) -> Outcome<()> {
    let stack = load_stack(ctx, c, "focused.cmx", "filter-reverb")?;
    let fl = stage("filter-reverb", stages::filter(&ctx.cfg, &stack))?;
    ctx.write_cmx("filter-reverb", "filtered.cmx", stages::stack_to_cmx(&fl.stack))?;
    ctx.image("filter-reverb", "image_filtered", &fl.stack)?;
    let rows = fl
        .alpha
        .iter()
        .zip(stack.grid.z.coords())
        .map(|(r, z)| vec![f(*z), f(r.alpha), f(r.in_band_mean), f(r.off_band_mean)])
        .collect();
    ctx.csv(
        "filter-reverb",
        "alpha.csv",
        &["depth_m", "alpha", "in_band_mean", "off_band_mean"],
        rows,
    )
}

fn cmd_distort(ctx: &Ctx, c: &Common) -> Outcome<()> {
    let stack = load_stack(ctx, c, "filtered.cmx", "distort")?;
    let fl = stage(
        "distort",
        stages::filter(
            &PipelineConfig {
                pipeline: no_filter(&ctx.cfg),
                ..ctx.cfg.clone()
            },
            &stack,
        ),
    )?;
    let iso = stage("distort", stages::analyse(&fl))?;
    write_analysis(ctx, &fl, &iso)
}

fn no_filter(cfg: &PipelineConfig) -> crate::config::PipelineSettings {
    crate::config::PipelineSettings {
        filter: false,
        ..cfg.pipeline.clone()
    }
}

fn write_analysis(ctx: &Ctx, fl: &stages::Filtered, iso: &stages::Isoplanatic) -> Outcome<()> {
    let s = &iso.summary;
    let rows = s.sigma_hat.iter().enumerate().map(|(i, v)| vec![i.to_string(), f(*v)]).collect();
    ctx.csv("distort", "eigenvalues.csv", &["index", "sigma_hat"], rows)?;
    ctx.csv(
        "distort",
        "entropy.csv",
        &["entropy_bits", "n_inputs", "recommended_patches", "n_images"],
        vec![vec![
            f(s.entropy),
            iso.n_inputs.to_string(),
            s.recommended_patches.to_string(),
            s.n_images.to_string(),
        ]],
    )?;
    ctx.write_cmx("distort", "eigenvectors.cmx", stages::vectors_to_cmx(fl.ff.k(), &s.vectors))
}

fn cmd_correct(ctx: &Ctx, c: &Common) -> Outcome<()> {
    let stack = load_stack(ctx, c, "filtered.cmx", "correct")?;
    let fl = stage(
        "correct",
        stages::filter(
            &PipelineConfig {
                pipeline: no_filter(&ctx.cfg),
                ..ctx.cfg.clone()
            },
            &stack,
        ),
    )?;
    correct_from(ctx, &fl)
}

fn correct_from(ctx: &Ctx, fl: &stages::Filtered) -> Outcome<()> {
    let iso = stage("correct", stages::analyse(fl))?;
    let n_images = ctx
        .cfg
        .pipeline
        .n_images
        .unwrap_or(iso.summary.n_images)
        .min(iso.summary.vectors.len());
    let mut summary = Vec::new();
    for p in 0..n_images {
        let (st, s) = stage("correct", stages::correct_patch(fl, &iso, p))?;
        ctx.image("correct", &format!("image_patch_{p}"), &st)?;
        ctx.strehl("correct", &format!("strehl_patch_{p}"), &st, &s)?;
        summary.push(vec![format!("patch_{p}"), f(s.mean()), s.flagged.len().to_string()]);
    }
    let cor = stage("correct", stages::correct_full_field(&ctx.cfg, fl, &iso))?;
    ctx.write_cmx("correct", "corrected.cmx", stages::stack_to_cmx(&cor.stack))?;
    ctx.image("correct", "image_corrected", &cor.stack)?;
    ctx.strehl("correct", "strehl_before", &fl.stack, &cor.strehl_before)?;
    ctx.strehl("correct", "strehl_after", &cor.stack, &cor.strehl_after)?;
    summary.insert(
        0,
        vec![
            "uncorrected".into(),
            f(cor.strehl_before.mean()),
            cor.strehl_before.flagged.len().to_string(),
        ],
    );
    summary.push(vec![
        "full_field".into(),
        f(cor.strehl_after.mean()),
        cor.strehl_after.flagged.len().to_string(),
    ]);
    ctx.csv("correct", "strehl.csv", &["correction", "mean_strehl", "flagged_pixels"], summary)?;
    let g = &fl.stack.grid;
    let rows = cor
        .sweep
        .nodes
        .iter()
        .map(|n| {
            vec![
                f(g.x.coords()[n.ix]),
                f(g.z.coords()[n.iz]),
                n.n_inputs.to_string(),
                if n.estimated { f(n.entropy) } else { String::new() },
                n.estimated.to_string(),
                n.clipped.to_string(),
            ]
        })
        .collect();
    ctx.csv(
        "correct",
        "windows.csv",
        &["x_m", "z_m", "n_inputs", "entropy_bits", "estimated", "clipped"],
        rows,
    )?;
    write_analysis(ctx, fl, &iso)
}

fn cmd_sweep(ctx: &Ctx, c: &Common) -> Outcome<()> {
    let a = ctx.input(c, "acquisition.cmx")?;
    let acq = stage("sweep-speed", stages::acquisition_from_cmx(&ctx.cfg, &a))?;
    let sw = stage("sweep-speed", stages::sweep_speed(&ctx.cfg, &acq))?;
    write_sweep(ctx, &sw)
}

fn write_sweep(ctx: &Ctx, sw: &dmi_core::distortion::SpeedSweep) -> Outcome<()> {
    let rows: Vec<Vec<String>> =
        sw.c.iter()
            .zip(&sw.entropy)
            .map(|(c, h)| vec![f(*c), h.map(f).unwrap_or_default(), h.is_none().to_string()])
            .collect();
    ctx.csv("sweep-speed", "speed_sweep.csv", &["c_m_per_s", "entropy_bits", "failed"], rows)?;
    ctx.csv(
        "sweep-speed",
        "speed_estimate.csv",
        &["c_grid_m_per_s", "c_star_m_per_s"],
        vec![vec![f(sw.c_grid), f(sw.c_star)]],
    )
}

fn cmd_render(ctx: &Ctx, file: &Path, linear: bool) -> Outcome<()> {
    let a = load(file)?;
    let stem = file.file_stem().and_then(|s| s.to_str()).unwrap_or("render").to_string();
    let (values, w, h) = match (&a.data, a.dims().as_slice()) {
        (CmxData::Real(v), &[h, w]) => (v.clone(), w, h),
        (CmxData::Complex(_), &[_, _, _]) => {
            let st = stage("render", stages::stack_from_cmx(&ctx.cfg, &a))?;
            let img = stages::image_of(&st);
            let (h, w) = img.dim();
            (img.iter().copied().collect(), w, h)
        }
        _ => {
            return Err(Failure::Usage(format!(
                "{} is neither a 2D map nor a focused stack",
                file.display()
            )))
        }
    };
    let g = if linear {
        stage("render", render_linear(&values, w, h))?
    } else {
        let (g, warn) = stage("render", render_db(&values, w, h, ctx.cfg.pipeline.floor_db))?;
        if let Some(m) = warn {
            eprintln!("warning: {m}");
        }
        g
    };
    ctx.write_gray("render", &format!("{stem}_render"), &g)
}

fn cmd_pipeline(ctx: &Ctx) -> Outcome<()> {
    let cfg = &ctx.cfg;
    let acq = stage("simulate", stages::simulate(cfg))?;
    ctx.write_cmx("simulate", "acquisition.cmx", stages::acquisition_to_cmx(&acq))?;
    let stack = stage("beamform", stages::beamform(cfg, &acq))?;
    ctx.write_cmx("beamform", "focused.cmx", stages::stack_to_cmx(&stack))?;
    ctx.image("beamform", "image", &stack)?;
    let fl = stage("filter-reverb", stages::filter(cfg, &stack))?;
    ctx.write_cmx("filter-reverb", "filtered.cmx", stages::stack_to_cmx(&fl.stack))?;
    ctx.image("filter-reverb", "image_filtered", &fl.stack)?;
    let rows = fl
        .alpha
        .iter()
        .zip(stack.grid.z.coords())
        .map(|(r, z)| vec![f(*z), f(r.alpha), f(r.in_band_mean), f(r.off_band_mean)])
        .collect();
    ctx.csv(
        "filter-reverb",
        "alpha.csv",
        &["depth_m", "alpha", "in_band_mean", "off_band_mean"],
        rows,
    )?;
    correct_from(ctx, &fl)?;
    let sw = stage("sweep-speed", stages::sweep_speed(cfg, &acq))?;
    write_sweep(ctx, &sw)
}

/// Hashes every file in `dir` except the manifest itself, sorted by name.
pub fn write_manifest(dir: &Path) -> std::io::Result<String> {
    let mut names: Vec<String> = fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().map(|t| t.is_file()).unwrap_or(false))
        .filter_map(|e| e.file_name().into_string().ok())
        .filter(|n| n != MANIFEST)
        .collect();
    names.sort();
    let mut text = String::new();
    for n in names {
        let digest = Sha256::digest(fs::read(dir.join(&n))?);
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        text.push_str(&format!("{hex}  {n}\n"));
    }
    fs::write(dir.join(MANIFEST), &text)?;
    Ok(text)
}

fn pool(threads: usize) -> Outcome<Option<rayon::ThreadPool>> {
    if threads == 0 {
        return Ok(None);
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map(Some)
        .map_err(|e| Failure::Usage(format!("cannot start {threads} threads: {e}")))
}

fn dispatch(cmd: &Command) -> Outcome<()> {
    let common = match cmd {
        Command::Simulate(c)
        | Command::Beamform(c)
        | Command::FilterReverb(c)
        | Command::Distort(c)
        | Command::Correct(c)
        | Command::SweepSpeed(c)
        | Command::Pipeline(c) => c,
        Command::Render { common, .. } => common,
    };
    let ctx = Ctx::new(common)?;
    let go = || match cmd {
        Command::Simulate(_) => cmd_simulate(&ctx),
        Command::Beamform(c) => cmd_beamform(&ctx, c),
        Command::FilterReverb(c) => cmd_filter(&ctx, c),
        Command::Distort(c) => cmd_distort(&ctx, c),
        Command::Correct(c) => cmd_correct(&ctx, c),
        Command::SweepSpeed(c) => cmd_sweep(&ctx, c),
        Command::Render { file, common, linear } => {
            let file = file
                .clone()
                .or_else(|| common.input.clone())
                .ok_or_else(|| Failure::Usage("render needs a CMX file".into()))?;
            cmd_render(&ctx, &file, *linear)
        }
        Command::Pipeline(_) => cmd_pipeline(&ctx),
    };
    match pool(common.threads)? {
        Some(p) => p.install(go),
        None => go(),
    }?;
    stage("manifest", write_manifest(&ctx.out).map(|_| ()).map_err(Error::from))
}

/// Runs the command line and returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli.command) {
        Ok(()) => 0,
        Err(fail) => {
            eprintln!("dmi: {fail}");
            fail.code()
        }
    }
}
