use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use leafscope::constructor::{default_deltas, fullmeasure_construct, ConstructionConfig};
use leafscope::currents::{self, AnalyticMapSpec};
use leafscope::group::{
    self, dirichlet_domain, word_ball_with, FuchsianGroupSpec, OrbitBall, PingPongDomain,
};
use leafscope::horocycles::{self, PingPongCertifier};
use leafscope::localmodel::{self, AnnulusSpec, SingularModelSpec, StripSpec};
use leafscope::shell::{self, FieldKind, Figure, GroupSpecFile, PolarGrid, Provenance, Record};
use leafscope::{BoundaryPoint, EuclideanDisk, Horocycle};

#[derive(Parser)]
#[command(
    name = "leafscope",
    version,
    about = "Leaf metrics of Fuchsian groups on the unit disk"
)]
#[command(arg_required_else_help = true)]
struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the JSON result here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Also render a figure.
    #[arg(long, global = true)]
    svg: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build or check group specs.
    #[command(subcommand)]
    Group(GroupCmd),
    /// Evaluate α, β or ρ on a polar grid (CSV).
    Field(FieldArgs),
    /// Boundary projections of deep orbit points.
    Limitset {
        #[arg(long)]
        group: PathBuf,
        #[arg(long)]
        depth: usize,
        /// Keep orbit points with |γ(0)| > 1 − eps.
        #[arg(long, default_value_t = group::DEFAULT_LIMIT_EPS)]
        eps: f64,
    },
    /// Staged constructions.
    #[command(subcommand)]
    Construct(ConstructCmd),
    /// Horocycle certificates and displacement floors.
    #[command(subcommand)]
    Horocycle(HorocycleCmd),
    /// Annulus and strip models near a singular point.
    #[command(subcommand)]
    Localmodel(LocalCmd),
    /// Mass growth and ray integrals of analytic disks.
    #[command(subcommand)]
    Current(CurrentCmd),
}

#[derive(Subcommand)]
enum GroupCmd {
    /// The cyclic group of ζ ↦ (ζ + r)/(1 + rζ).
    MakeCyclic {
        #[arg(long)]
        r: f64,
    },
    /// Word ball, Dirichlet domain and discreteness checks.
    Check {
        #[arg(long)]
        group: PathBuf,
        #[arg(long)]
        depth: usize,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
}

#[derive(Args)]
struct FieldArgs {
    #[arg(long)]
    group: PathBuf,
    #[arg(long, value_enum)]
    which: Which,
    #[arg(long)]
    depth: usize,
    /// Polar grid as `N_RxN_THETA`, for example `8x32`.
    #[arg(long)]
    grid: String,
    #[arg(long, default_value_t = 0.9)]
    rmax: f64,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    Alpha,
    Beta,
    Rho,
}

#[derive(Subcommand)]
enum ConstructCmd {
    /// Full-measure construction with injective horocycles.
    Fullmeasure {
        #[arg(long)]
        stages: usize,
        /// Comma-separated δ₂, δ₃, …; defaults to 2^{−j−2}.
        #[arg(long, value_delimiter = ',')]
        deltas: Vec<f64>,
    },
}

#[derive(Subcommand)]
enum HorocycleCmd {
    /// Injectivity of one horodisk.
    Check {
        #[arg(long)]
        group: PathBuf,
        /// Base point angle in radians.
        #[arg(long)]
        zeta: f64,
        #[arg(long)]
        radius: f64,
        #[arg(long)]
        depth: usize,
    },
    /// `m(N, n)` and `M(N, n)`.
    Floor {
        #[arg(long = "N")]
        big_n: u64,
        #[arg(long)]
        n: u64,
    },
}

#[derive(Subcommand)]
enum LocalCmd {
    /// Hyperbolic geometry of A(a, b) and a winding certificate.
    Annulus {
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
        /// Target length for the winding certificate.
        #[arg(long, default_value_t = 10.0)]
        m: f64,
    },
    /// Injectivity of the leaf parametrisation on the strip.
    Strip {
        /// Eigenvalue ratio, e.g. `0.5` or `0.3+1.2i`.
        #[arg(long)]
        lambda: String,
        #[arg(long = "N")]
        big_n: u64,
        #[arg(long, default_value_t = 0.5)]
        a: f64,
        #[arg(long, default_value_t = 2.0)]
        b: f64,
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
}

#[derive(Subcommand)]
enum CurrentCmd {
    /// `M(r)` on radii with `1 − r` geometric down to `1 − rmax`.
    Mass {
        /// `identity`, `annulus:A,B` or `poly:C0,C1,…`.
        #[arg(long)]
        map: String,
        #[arg(long)]
        rmax: f64,
        #[arg(long, default_value_t = 4)]
        points: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Partial integrals of `(1 − s)|f′(se^{iθ})|²`.
    Ray {
        #[arg(long)]
        map: String,
        #[arg(long)]
        theta: f64,
        #[arg(long, default_value_t = 0.9999)]
        smax: f64,
        #[arg(long, default_value_t = 200)]
        points: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            let io = io_kind(&e).is_some();
            let diag = json!({
                "error": if io { "io" } else { "refused" },
                "message": format!("{e:#}"),
            });
            eprintln!("{diag}");
            ExitCode::from(if io { 1 } else { 3 })
        }
    }
}

fn io_kind(e: &anyhow::Error) -> Option<io::ErrorKind> {
    e.chain().find_map(|c| {
        match (
            c.downcast_ref::<io::Error>(),
            c.downcast_ref::<shell::ShellError>(),
        ) {
            (Some(io), _) | (_, Some(shell::ShellError::Io(io))) => Some(io.kind()),
            _ => None,
        }
    })
}

/// A closed downstream pipe is not an error for a filter-style tool.
fn broken_pipe(e: &anyhow::Error) -> bool {
    io_kind(e) == Some(io::ErrorKind::BrokenPipe)
}

fn emit(cli: &Cli, value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match &cli.out {
        Some(p) => {
            std::fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display()))?
        }
        None => writeln!(io::stdout().lock(), "{text}")?,
    }
    Ok(())
}

fn emit_svg(cli: &Cli, fig: &Figure) -> Result<()> {
    if let Some(p) = &cli.svg {
        std::fs::write(p, fig.to_svg(600)).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

fn load_group(path: &Path) -> Result<FuchsianGroupSpec> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(GroupSpecFile::read(f)?.to_spec()?)
}

fn ball(spec: &FuchsianGroupSpec, depth: usize) -> Result<OrbitBall> {
    let config = shell::ball_config_from_env()?;
    Ok(word_ball_with(spec, depth, &config)?)
}

fn rng(cli: &Cli) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(cli.seed)
}

fn parse_map(s: &str) -> Result<AnalyticMapSpec> {
    let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
    let nums = |r: &str| -> Result<Vec<Complex64>> {
        r.split(',')
            .map(|t| {
                t.trim()
                    .parse::<Complex64>()
                    .with_context(|| format!("bad number {t:?}"))
            })
            .collect()
    };
    Ok(match kind {
        "identity" => AnalyticMapSpec::identity(),
        "annulus" => {
            let v = nums(rest)?;
            if v.len() != 2 || v.iter().any(|c| c.im != 0.0) {
                bail!("annulus map needs two real radii, got {rest:?}");
            }
            currents::annulus_cover(v[0].re, v[1].re)?
        }
        "poly" => AnalyticMapSpec::polynomial(nums(rest)?)?,
        _ => bail!("unknown map {s:?}; use identity, annulus:A,B or poly:C0,C1,…"),
    })
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Group(GroupCmd::MakeCyclic { r }) => {
            let spec = FuchsianGroupSpec::cyclic(*r)?;
            let mut file = GroupSpecFile::from_spec(&spec);
            file.provenance = Some(Provenance::new("group make-cyclic"));
            emit(cli, &file)?;
            let (p, m) = spec.generators()[0].half_planes()?;
            emit_svg(
                cli,
                &Figure {
                    geodesics: vec![p.geodesic(), m.geodesic()],
                    ..Figure::default()
                },
            )
        }
        Command::Group(GroupCmd::Check {
            group,
            depth,
            samples,
        }) => group_check(cli, group, *depth, *samples),
        Command::Field(args) => field(cli, args),
        Command::Limitset { group, depth, eps } => {
            let spec = load_group(group)?;
            let b = ball(&spec, *depth)?;
            let pts = group::limit_set_sample(&b, *eps);
            let prov = Provenance::new("limitset")
                .depth(*depth)
                .tolerance("eps", *eps);
            emit(
                cli,
                &Record::new(
                    prov,
                    json!({
                        "count": pts.len(),
                        "angles": pts.iter().map(|p| p.point.angle()).collect::<Vec<_>>(),
                        "warnings": b.warnings(),
                    }),
                ),
            )?;
            emit_svg(
                cli,
                &Figure {
                    points: pts.iter().map(|p| p.point.to_complex() * 0.995).collect(),
                    ..Figure::default()
                },
            )
        }
        Command::Construct(ConstructCmd::Fullmeasure { stages, deltas }) => {
            let config = ConstructionConfig::default();
            let state = fullmeasure_construct(*stages, deltas, &config)?;
            let mut file = GroupSpecFile::from_state(&state);
            let used = if deltas.is_empty() {
                default_deltas(*stages)
            } else {
                deltas.clone()
            };
            file.provenance = Some(
                Provenance::new(format!(
                    "construct fullmeasure --stages {stages} --deltas {used:?}"
                ))
                .depth(config.depth)
                .tolerance("margin", config.margin)
                .tolerance("radius_safety", config.radius_safety),
            );
            emit(cli, &file)?;
            let mut fig = Figure {
                geodesics: state
                    .domain_geodesics()
                    .into_iter()
                    .flat_map(|(p, m)| [p, m])
                    .collect(),
                ..Figure::default()
            };
            for l in &state.levels {
                fig.arcs.extend(l.arcs.arcs());
                for z in l.arcs.sample(4) {
                    fig.horocycles.push(Horocycle::new(z, l.radius)?);
                }
            }
            emit_svg(cli, &fig)
        }
        Command::Horocycle(HorocycleCmd::Check {
            group,
            zeta,
            radius,
            depth,
        }) => {
            let spec = load_group(group)?;
            let b = ball(&spec, *depth)?;
            let h = Horocycle::new(BoundaryPoint::new(*zeta), *radius)?;
            let cert = horocycles::horocycle_injectivity(&b, &h);
            let all_depths = PingPongCertifier::new(&spec)
                .ok()
                .map(|c| c.is_injective(BoundaryPoint::new(*zeta), *radius));
            let prov = Provenance::new("horocycle check").depth(*depth);
            emit(
                cli,
                &Record::new(
                    prov,
                    json!({
                        "certificate": cert,
                        "injective_at_depth": cert.is_injective(),
                        "injective_all_depths": all_depths,
                    }),
                ),
            )?;
            emit_svg(
                cli,
                &Figure {
                    horocycles: vec![h],
                    ..Figure::default()
                },
            )
        }
        Command::Horocycle(HorocycleCmd::Floor { big_n, n }) => {
            let f = horocycles::displacement_floor(*big_n, *n)?;
            let (ratio, m_exact) = horocycles::displacement_floor_exact(*big_n, *n)?;
            let prov = Provenance::new("horocycle floor");
            emit(
                cli,
                &Record::new(
                    prov,
                    json!({
                        "N": big_n,
                        "n": n,
                        "m": f.m,
                        "M": f.big_m,
                        "ratio": f.ratio,
                        "ratio_exact": ratio.to_string(),
                        "M_exact": m_exact.to_string(),
                    }),
                ),
            )
        }
        Command::Localmodel(LocalCmd::Annulus { a, b, m }) => {
            let ann = AnnulusSpec::new(*a, *b)?;
            let x0 = ann.core_radius();
            let cert = localmodel::choose_annulus_and_winding(x0, *m, (b / a).sqrt(), 256)?;
            let refined = cert.refine(2)?;
            let prov = Provenance::new("localmodel annulus").tolerance("target_length", *m);
            emit(
                cli,
                &Record::new(
                    prov,
                    json!({
                        "annulus": ann,
                        "log_modulus": ann.log_modulus(),
                        "core_radius": x0,
                        "core_circle_length": 2.0 * std::f64::consts::PI.powi(2) / ann.log_modulus(),
                        "winding": cert,
                        "refined_certified": refined.certified,
                    }),
                ),
            )
        }
        Command::Localmodel(LocalCmd::Strip {
            lambda,
            big_n,
            a,
            b,
            samples,
        }) => {
            let lambda: Complex64 = lambda
                .parse()
                .with_context(|| format!("bad λ {lambda:?}"))?;
            let one = Complex64::new(1.0, 0.0);
            let spec = SingularModelSpec::new(lambda, one, Complex64::new(0.1, 0.0))?;
            let ann = AnnulusSpec::new(*a, *b)?;
            let strip = StripSpec::new(&ann, *big_n)?;
            let verdict = localmodel::strip_injectivity(&spec, &strip)?;
            let mut r = rng(cli);
            let disk = EuclideanDisk {
                center: Complex64::new(0.0, 0.0),
                radius: *b,
            };
            let mut counts = Vec::new();
            while counts.len() < *samples {
                for w in horocycles::sample_disk(&disk, *samples, &mut r) {
                    if ann.contains(w) && counts.len() < *samples {
                        counts.push(localmodel::fiber_count(&strip, w)?);
                    }
                }
            }
            let prov = Provenance::new("localmodel strip")
                .seed(cli.seed)
                .tolerance("integer_test", 1e-12);
            emit(
                cli,
                &Record::new(
                    prov,
                    json!({
                        "lambda": lambda,
                        "N": big_n,
                        "verdict": verdict,
                        "covering_degree": localmodel::covering_projection_degree(&strip),
                        "complete_sheets": counts.iter().map(|c| c.complete_sheets).collect::<std::collections::BTreeSet<_>>(),
                        "preimage_counts": counts.iter().map(|c| c.preimages).collect::<std::collections::BTreeSet<_>>(),
                    }),
                ),
            )
        }
        Command::Current(CurrentCmd::Mass {
            map,
            rmax,
            points,
            tol,
        }) => {
            if !(*rmax > 0.0 && *rmax < 1.0) || *points == 0 {
                bail!("need 0 < rmax < 1 and at least one point");
            }
            let f = parse_map(map)?;
            let grid: Vec<f64> = (1..=*points)
                .map(|k| 1.0 - (1.0 - rmax).powf(k as f64 / *points as f64))
                .collect();
            let curve = currents::mass_curve(&f, &grid, *tol)?;
            let prov =
                Provenance::new(format!("current mass --map {map}")).tolerance("quadrature", *tol);
            emit(
                cli,
                &Record::new(
                    prov,
                    json!({
                        "map": f,
                        "curve": curve,
                        "nondecreasing": curve.is_nondecreasing(),
                        "growth": curve.growth(),
                    }),
                ),
            )
        }
        Command::Current(CurrentCmd::Ray {
            map,
            theta,
            smax,
            points,
        }) => {
            if !(*smax > 0.0 && *smax < 1.0) {
                bail!("need 0 < smax < 1");
            }
            let f = parse_map(map)?;
            let grid = currents::log_grid(0.0, -(1.0 - smax).log10(), *points);
            let ray = currents::ray_divergence(&f, *theta, &grid)?;
            let prov = Provenance::new(format!("current ray --map {map}"));
            emit(cli, &Record::new(prov, json!({ "map": f, "ray": ray })))
        }
    }
}

fn group_check(cli: &Cli, path: &Path, depth: usize, samples: usize) -> Result<()> {
    let spec = load_group(path)?;
    let b = ball(&spec, depth)?;
    let dom = dirichlet_domain(&b);
    let disk = EuclideanDisk {
        center: Complex64::new(0.0, 0.0),
        radius: 0.95,
    };
    let pts = horocycles::sample_disk(&disk, samples, &mut rng(cli));
    let violations = group::fundamental_domain_violations(&b, &dom, &pts);
    let coverage = group::coverage_fraction(&b, &dom, &pts, 1e-9);
    let ping_pong = PingPongDomain::of(&spec).ok().map(|d| {
        let v = group::fundamental_domain_violations(&b, &d, &pts);
        json!({ "half_planes": d.half_planes.len(), "violations": v.len() })
    });
    let prov = Provenance::new("group check")
        .depth(depth)
        .seed(cli.seed)
        .tolerance("coverage_slack", 1e-9);
    let result: Value = json!({
        "generators": spec.rank(),
        "ball_size": b.len(),
        "warnings": b.warnings(),
        "relation_detected": b.relation_detected(),
        "schottky": b.schottky(),
        "dirichlet_constraints": dom.constraints.len(),
        "violations": violations.len(),
        "first_violations": violations.iter().take(5).collect::<Vec<_>>(),
        "coverage": coverage,
        "ping_pong": ping_pong,
    });
    emit(cli, &Record::new(prov, result))?;
    emit_svg(
        cli,
        &Figure {
            geodesics: dom.constraints.iter().map(|c| c.bisector).collect(),
            points: b.origin_orbit(),
            ..Figure::default()
        },
    )
}

fn field(cli: &Cli, args: &FieldArgs) -> Result<()> {
    let (nr, nt) = args
        .grid
        .split_once('x')
        .and_then(|(a, b)| Some((a.parse::<usize>().ok()?, b.parse::<usize>().ok()?)))
        .with_context(|| format!("grid {:?} is not of the form N_RxN_THETA", args.grid))?;
    if !(args.rmax > 0.0 && args.rmax < 1.0) || nr == 0 || nt == 0 {
        bail!("need a nonempty grid with 0 < rmax < 1");
    }
    let spec = load_group(&args.group)?;
    let b = ball(&spec, args.depth)?;
    let grid = PolarGrid {
        n_r: nr,
        n_theta: nt,
        r_max: args.rmax,
    };
    let kind = match args.which {
        Which::Alpha => FieldKind::Alpha,
        Which::Beta => FieldKind::Beta,
        Which::Rho => FieldKind::Rho,
    };
    let rows = shell::field_rows(&b, &grid, kind, args.tol)?;
    match &args.csv {
        Some(p) => {
            let f = File::create(p).with_context(|| format!("creating {}", p.display()))?;
            shell::write_field_csv(&rows, f)?;
            let prov = Provenance::new("field")
                .depth(args.depth)
                .tolerance("alpha_tol", args.tol);
            emit(
                cli,
                &Record::new(
                    prov,
                    json!({
                        "grid": grid,
                        "which": kind,
                        "rows": rows.len(),
                        "csv": p,
                    }),
                ),
            )?;
        }
        None => {
            let mut lock = io::stdout().lock();
            shell::write_field_csv(&rows, &mut lock)?;
            lock.flush()?;
        }
    }
    emit_svg(
        cli,
        &Figure {
            points: rows
                .iter()
                .map(|r| Complex64::new(r.zeta_re, r.zeta_im))
                .collect(),
            ..Figure::default()
        },
    )
}
