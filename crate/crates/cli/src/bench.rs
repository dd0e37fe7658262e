use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::Args;
use ctxnav_core::bridge::{
    load_provider_profiles, run_protocol, ChatProvider, ChatSession, HttpProvider, ProtocolTranscript, ProviderProfile,
    RecordingProvider, ReplayProvider,
};
use ctxnav_core::eval::synth::SyntheticProvider;
use ctxnav_core::eval::{appendix_scenario, generate_scenario, judge, parse_overrides, EvalReport, Scenario};

use crate::error::{input, write, CliError};

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// JSON array of provider profiles.
    #[arg(long)]
    pub providers: PathBuf,
    /// `appendix`, `seed:W:H:N` (generated with --seed), or `fixture:DIR/NAME`.
    #[arg(long, default_value = "appendix")]
    pub scenario: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Play back recorded turns from DIR/<provider id>.jsonl.
    #[arg(long, conflicts_with = "record")]
    pub replay: Option<PathBuf>,
    /// Record every turn to DIR/<provider id>.jsonl. Required for live endpoints.
    #[arg(long)]
    pub record: Option<PathBuf>,
    /// Where report.md, report.json and transcripts/ are written.
    #[arg(long, default_value = "bench-out")]
    pub out: PathBuf,
    /// JSON array of manual verdict overrides.
    #[arg(long)]
    pub overrides: Option<PathBuf>,
    /// Providers run concurrently, at most this many at once.
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u16).range(1..))]
    pub parallel: u16,
}

pub fn parse_scenario(spec: &str, seed: u64) -> Result<Scenario, CliError> {
    if spec == "appendix" {
        return Ok(appendix_scenario());
    }
    if let Some(rest) = spec.strip_prefix("seed:") {
        let parts: Vec<&str> = rest.split(':').collect();
        let bad = || CliError::Usage(format!("scenario '{spec}' must look like seed:W:H:N"));
        let [w, h, n] = parts[..] else { return Err(bad()) };
        let (w, h, n) = (
            w.parse::<i32>().map_err(|_| bad())?,
            h.parse::<i32>().map_err(|_| bad())?,
            n.parse::<usize>().map_err(|_| bad())?,
        );
        return generate_scenario(seed, w, h, n).map_err(|e| CliError::Usage(e.to_string()));
    }
    if let Some(stem) = spec.strip_prefix("fixture:") {
        let map = PathBuf::from(format!("{stem}.map.json"));
        let sidecar = PathBuf::from(format!("{stem}.scenario.json"));
        return Scenario::read_fixture(&map, &sidecar).map_err(|e| input(&map, e));
    }
    Err(CliError::Usage(format!(
        "unknown scenario '{spec}' (expected appendix, seed:W:H:N or fixture:PATH)"
    )))
}

fn safe_id(id: &str) -> bool {
    !id.is_empty() && !id.starts_with('.') && id.chars().all(|c| c.is_ascii_alphanumeric() || "._-".contains(c))
}

/// Live endpoints are opt-in: they need `--record` and their key variable.
fn check_access(profile: &ProviderProfile, args: &BenchArgs) -> Result<(), CliError> {
    if args.replay.is_some() || !profile.is_live() {
        return Ok(());
    }
    if args.record.is_none() {
        return Err(CliError::Usage(format!(
            "provider {} is a live endpoint; network access needs --record DIR (or use --replay DIR)",
            profile.id
        )));
    }
    if !profile.auth_env_var.is_empty() && std::env::var_os(&profile.auth_env_var).is_none() {
        return Err(CliError::Provider(format!(
            "provider {}: environment variable {} is not set",
            profile.id, profile.auth_env_var
        )));
    }
    Ok(())
}

fn provider_for(profile: &ProviderProfile, scenario: &Scenario, args: &BenchArgs) -> Result<Arc<dyn ChatProvider>, CliError> {
    let file = format!("{}.jsonl", profile.id);
    if let Some(dir) = &args.replay {
        let path = dir.join(&file);
        return Ok(Arc::new(ReplayProvider::from_file(&path).map_err(|e| input(&path, e))?));
    }
    let inner: Box<dyn ChatProvider> = if let Some(name) = profile.mock_name() {
        Box::new(
            SyntheticProvider::from_mock_name(name, scenario)
                .ok_or_else(|| CliError::Input(format!("provider {}: unknown mock '{name}'", profile.id)))?,
        )
    } else {
        Box::new(HttpProvider::new(profile))
    };
    match &args.record {
        Some(dir) => {
            let path = dir.join(&file);
            let rec = RecordingProvider::create(inner, profile.model_id.clone(), &path)
                .map_err(|e| CliError::Internal(format!("{}: {e}", path.display())))?;
            Ok(Arc::new(rec))
        }
        None => Ok(Arc::from(inner)),
    }
}

/// Runs every provider, at most `parallel` at a time; results come back in
/// profile order.
fn run_all(jobs: Vec<(ProviderProfile, Arc<dyn ChatProvider>)>, scenario: &Scenario, parallel: usize) -> Vec<ProtocolTranscript> {
    let mut out = Vec::with_capacity(jobs.len());
    for chunk in jobs.chunks(parallel) {
        std::thread::scope(|s| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|(profile, provider)| {
                    s.spawn(move || {
                        tracing::info!(provider = %profile.id, "running protocol");
                        let mut session = ChatSession::new(profile, provider.clone());
                        run_protocol(&mut session, scenario)
                    })
                })
                .collect();
            out.extend(handles.into_iter().map(|h| h.join().expect("protocol thread panicked")));
        });
    }
    out
}

pub fn run(args: &BenchArgs) -> Result<(), CliError> {
    let scenario = parse_scenario(&args.scenario, args.seed)?;
    let profiles = load_provider_profiles(&args.providers).map_err(|e| input(&args.providers, e))?;
    if profiles.is_empty() {
        return Err(input(&args.providers, "no providers configured"));
    }
    if let Some(p) = profiles.iter().find(|p| !safe_id(&p.id)) {
        return Err(input(&args.providers, format!("provider id '{}' is not a safe file name", p.id)));
    }
    let overrides = match &args.overrides {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| input(path, e))?;
            parse_overrides(&text).map_err(|e| input(path, e))?
        }
        None => Vec::new(),
    };
    for p in &profiles {
        check_access(p, args)?;
    }
    if let Some(dir) = &args.record {
        create_dir(dir)?;
    }

    let mut jobs = Vec::with_capacity(profiles.len());
    for p in &profiles {
        jobs.push((p.clone(), provider_for(p, &scenario, args)?));
    }
    let transcripts = run_all(jobs, &scenario, args.parallel as usize);

    let mut report = EvalReport::new(
        &scenario,
        transcripts.iter().map(|t| (t.provider_id.clone(), judge(t, &scenario))),
    );
    for o in report.apply_overrides(&overrides) {
        tracing::warn!(model = %o.model_id, criterion = o.criterion, "override matched no result");
    }

    let tdir = args.out.join("transcripts");
    create_dir(&tdir)?;
    for t in &transcripts {
        let text = serde_json::to_string_pretty(t).map_err(|e| CliError::Internal(e.to_string()))?;
        write(&tdir.join(format!("{}.json", t.provider_id)), &(text + "\n"))?;
    }
    let md = report.to_markdown();
    write(&args.out.join("report.md"), &md)?;
    write(&args.out.join("report.json"), &(report.to_json() + "\n"))?;
    print!("{md}");
    eprintln!("wrote {}", args.out.join("report.md").display());
    Ok(())
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Internal(format!("creating {}: {e}", dir.display())))
}
