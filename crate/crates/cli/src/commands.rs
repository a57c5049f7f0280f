use std::path::{Path, PathBuf};

use ecmsim::ecm::{monte_carlo_all, stationary_distribution, DEFAULT_MAX_ITER, DEFAULT_TOLERANCE};
use ecmsim::experiments::{run_experiment, PaperExperiment, SimId};
use ecmsim::io::{load_config, read_trajectories, write_atomic, write_trajectories};
use ecmsim::schedule::{format_schedule, parse_schedule};
use ecmsim::stats::{
    bonferroni, fit_lmm, pseudo_r2, scheffe_posthoc, two_sample_ttest, wald_chi2, LmmData,
    LmmReport, SampleSeries, StatReport, TTestVariant,
};
use ecmsim::Trajectory;

use crate::{Command, Failure, Input, StatsCommand, Variant};

/// Writes to stdout; a closed pipe ends the command quietly.
fn say(text: &str) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| match e.kind() {
            std::io::ErrorKind::BrokenPipe => Failure::Closed,
            _ => Failure::data(e),
        })
}

macro_rules! out {
    ($($arg:tt)*) => { say(&format!($($arg)*))? };
}

macro_rules! outln {
    ($($arg:tt)*) => { say(&format!("{}\n", format_args!($($arg)*)))? };
}

type Result<T> = std::result::Result<T, Failure>;

pub fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Validate { config } => validate(&config),
        Command::Run {
            config,
            out,
            normalize,
            jobs,
        } => run(&config, &out, normalize, jobs.jobs),
        Command::Paper {
            sim,
            out,
            bonferroni,
            jobs,
        } => paper(&sim, out.as_deref(), bonferroni, jobs.jobs),
        Command::Schedule {
            pattern,
            length,
            conditions,
        } => schedule(&pattern, length, conditions.as_deref()),
        Command::Stationary { config, condition } => stationary(&config, &condition),
        Command::Montecarlo {
            config,
            agents,
            seed,
            out,
            jobs,
        } => montecarlo(&config, agents, seed, &out, jobs.jobs),
        Command::Stats { kind } => stats(kind),
    }
}

fn jobs(j: Option<u32>) -> Option<usize> {
    j.map(|n| n as usize)
}

fn validate(path: &Path) -> Result<()> {
    let cfg = load_config(path).map_err(Failure::data)?;
    let m = &cfg.model;
    outln!(
        "{} statuses, {} conditions, {} schedules, length {}",
        m.statuses().len(),
        m.conditions().len(),
        m.schedules().len(),
        m.length()
    );
    for c in m.conditions() {
        if c.is_conservative() {
            outln!("{}: conservative", c.label());
        } else {
            let sums: Vec<String> = c.column_sums().iter().map(|s| format!("{s:.6}")).collect();
            outln!("{}: not conservative (column sums {})", c.label(), sums.join(", "));
        }
    }
    for s in m.schedules() {
        outln!("{}: {}", s.name, format_schedule(&s.schedule));
    }
    Ok(())
}

fn write_run(trajs: &[Trajectory], out: &Path) -> Result<()> {
    if trajs.is_empty() {
        return Err(Failure::Data("config declares no schedules to run".into()));
    }
    let paths = write_trajectories(trajs, out).map_err(Failure::data)?;
    outln!("wrote {} files to {}", paths.len(), out.display());
    Ok(())
}

fn run(path: &Path, out: &Path, normalize: bool, j: Option<u32>) -> Result<()> {
    let cfg = load_config(path).map_err(Failure::data)?;
    let mut trajs = cfg.model.evolve_all(jobs(j)).map_err(Failure::data)?;
    if normalize || cfg.options.normalize_output {
        trajs = trajs
            .iter()
            .map(Trajectory::normalized)
            .collect::<std::result::Result<_, _>>()
            .map_err(Failure::data)?;
    }
    write_run(&trajs, out)
}

fn paper(sim: &str, out: Option<&Path>, m: u32, j: Option<u32>) -> Result<()> {
    let id: SimId = sim.parse().map_err(Failure::Usage)?;
    let exp = PaperExperiment::build(id).with_bonferroni(m as usize);
    let report = run_experiment(&exp, jobs(j)).map_err(Failure::data)?;
    out!("{}", report.to_text());
    if let Some(dir) = out {
        let paths = report.write(dir).map_err(Failure::data)?;
        outln!("\nwrote {} files to {}", paths.len(), dir.display());
    }
    Ok(())
}

fn schedule(pattern: &str, length: usize, conditions: Option<&[String]>) -> Result<()> {
    let s = parse_schedule(pattern, length).map_err(Failure::data)?;
    if let Some(known) = conditions {
        s.check_labels(known).map_err(Failure::data)?;
    }
    outln!("{}", format_schedule(&s));
    Ok(())
}

fn stationary(path: &Path, condition: &str) -> Result<()> {
    let cfg = load_config(path).map_err(Failure::data)?;
    let m = cfg
        .model
        .condition(condition)
        .ok_or_else(|| Failure::Data(format!("UnknownConditionLabel: {condition}")))?;
    let p = stationary_distribution(m, DEFAULT_MAX_ITER, DEFAULT_TOLERANCE).map_err(Failure::data)?;
    let cells: Vec<String> = p.iter().map(|v| format!("{v:.6}")).collect();
    outln!("{}", cells.join(", "));
    Ok(())
}

fn montecarlo(path: &Path, agents: u64, seed: Option<u64>, out: &Path, j: Option<u32>) -> Result<()> {
    let cfg = load_config(path).map_err(Failure::data)?;
    let agents = usize::try_from(agents).map_err(|_| Failure::Usage("--agents is too large".into()))?;
    let seed = seed.unwrap_or(cfg.options.seed);
    let trajs = monte_carlo_all(&cfg.model, agents, seed, jobs(j)).map_err(Failure::data)?;
    write_run(&trajs, out)
}

/// Trajectories from `--input` and the validated `t` window.
fn load_input(input: &Input) -> Result<(Vec<Trajectory>, usize, usize)> {
    let trajs = read_trajectories(&input.input).map_err(Failure::data)?;
    let shortest = trajs
        .iter()
        .map(Trajectory::length)
        .min()
        .ok_or_else(|| Failure::Data(format!("{}: no trajectories", input.input.display())))?;
    let from = input.from.unwrap_or(1);
    let to = input.to.unwrap_or(shortest);
    if from > to || to > shortest {
        return Err(Failure::Data(format!(
            "window {from}..{to} does not fit trajectories of length {shortest}"
        )));
    }
    Ok((trajs, from, to))
}

fn status_index(trajs: &[Trajectory], name: Option<&str>, default: usize) -> Result<usize> {
    let names = trajs[0].status_names();
    match name {
        None if default < names.len() => Ok(default),
        None => Err(Failure::Data(format!(
            "need at least {} status columns",
            default + 1
        ))),
        Some(n) => names.iter().position(|s| s == n).ok_or_else(|| {
            Failure::Data(format!("unknown status {n} (known: {})", names.join(",")))
        }),
    }
}

fn find_schedule<'a>(trajs: &'a [Trajectory], name: &str) -> Result<&'a Trajectory> {
    trajs
        .iter()
        .find(|t| t.schedule_label == name)
        .ok_or_else(|| Failure::Data(format!("unknown schedule {name}")))
}

fn sample(tr: &Trajectory, status: usize, from: usize, to: usize) -> Result<SampleSeries> {
    SampleSeries::new(tr.schedule_label.clone(), tr.series(status, from..=to)).map_err(Failure::data)
}

fn sidecar(input: &Input, kind: &str) -> PathBuf {
    input.csv.clone().unwrap_or_else(|| {
        let stem = input
            .input
            .file_stem()
            .map_or("results".into(), |s| s.to_string_lossy().into_owned());
        input.input.with_file_name(format!("{stem}.{kind}.csv"))
    })
}

fn emit(report: &StatReport, input: &Input, kind: &str, extra: &str) -> Result<()> {
    out!("{}{extra}", report.to_text());
    let path = sidecar(input, kind);
    write_atomic(&path, report.to_csv(kind).as_bytes()).map_err(Failure::data)?;
    outln!("results written to {}", path.display());
    Ok(())
}

fn stats(kind: StatsCommand) -> Result<()> {
    match kind {
        StatsCommand::Ttest {
            input,
            schedule,
            status,
            other_status,
            against,
            variant,
            bonferroni: m,
        } => {
            let (trajs, from, to) = load_input(&input)?;
            let tr = match &schedule {
                Some(name) => find_schedule(&trajs, name)?,
                None => &trajs[0],
            };
            let s = status_index(&trajs, status.as_deref(), 0)?;
            let (a, b) = match &against {
                Some(other) => (
                    sample(tr, s, from, to)?,
                    sample(find_schedule(&trajs, other)?, s, from, to)?,
                ),
                None => {
                    let o = status_index(&trajs, other_status.as_deref(), 1)?;
                    (sample(tr, s, from, to)?, sample(tr, o, from, to)?)
                }
            };
            let variant = match variant {
                Variant::Pooled => TTestVariant::Pooled,
                Variant::Welch => TTestVariant::Welch,
                Variant::Paired => TTestVariant::Paired,
            };
            let r = two_sample_ttest(&a, &b, variant).map_err(Failure::data)?;
            let extra = if m > 1 {
                format!("Bonferroni (m = {m}): p = {:.6}\n", bonferroni(r.p, m as usize))
            } else {
                String::new()
            };
            emit(&StatReport::TTest(r), &input, "ttest", &extra)
        }
        StatsCommand::Anova {
            input,
            status,
            schedules,
            alpha,
        } => {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Failure::Usage(format!("--alpha must be in (0, 1), got {alpha}")));
            }
            let (trajs, from, to) = load_input(&input)?;
            let s = status_index(&trajs, status.as_deref(), 0)?;
            let chosen: Vec<&Trajectory> = match &schedules {
                Some(names) => names
                    .iter()
                    .map(|n| find_schedule(&trajs, n))
                    .collect::<Result<_>>()?,
                None => trajs.iter().collect(),
            };
            let groups = chosen
                .iter()
                .map(|tr| sample(tr, s, from, to))
                .collect::<Result<Vec<_>>>()?;
            let post = scheffe_posthoc(&groups, alpha).map_err(Failure::data)?;
            let report = StatReport::Anova {
                anova: post.anova.clone(),
                posthoc: Some(post),
            };
            emit(&report, &input, "anova", "")
        }
        StatsCommand::Lmm {
            input,
            y,
            x,
            categorical,
            reference,
            cluster,
        } => {
            let (trajs, from, to) = load_input(&input)?;
            let yi = status_index(&trajs, y.as_deref(), 0)?;
            let x_status = if x == "schedule" {
                None
            } else {
                Some(status_index(&trajs, Some(&x), 0)?)
            };
            if categorical && x_status.is_some() {
                return Err(Failure::Usage("--categorical needs --x schedule".into()));
            }
            let (mut ys, mut xs, mut levels, mut clusters) =
                (Vec::new(), Vec::new(), Vec::new(), Vec::new());
            for (i, tr) in trajs.iter().enumerate() {
                for t in from..=to {
                    let counts = tr.states[t].counts();
                    ys.push(counts[yi]);
                    xs.push(x_status.map_or((i + 1) as f64, |xi| counts[xi]));
                    levels.push(tr.schedule_label.clone());
                    clusters.push(if cluster == "t" {
                        t.to_string()
                    } else {
                        tr.schedule_label.clone()
                    });
                }
            }
            let full = if categorical {
                let reference = match reference {
                    Some(r) => find_schedule(&trajs, &r)?.schedule_label.clone(),
                    None => trajs.last().expect("nonempty").schedule_label.clone(),
                };
                LmmData::categorical(ys.clone(), &levels, &reference, &clusters)
            } else {
                LmmData::numeric(ys.clone(), x.clone(), xs, &clusters)
            }
            .map_err(Failure::data)?;
            let null = LmmData::intercept_only(ys, &clusters).map_err(Failure::data)?;
            let fit = fit_lmm(&full).map_err(Failure::data)?;
            let null_fit = fit_lmm(&null).map_err(Failure::data)?;
            let wald = wald_chi2(&fit, &fit.slope_indices()).ok();
            let r2 = pseudo_r2(&null_fit, &fit).ok();
            emit(&StatReport::Lmm(LmmReport { fit, wald, r2 }), &input, "lmm", "")
        }
    }
}
