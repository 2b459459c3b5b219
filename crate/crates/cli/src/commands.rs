use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use jawprint_core::attack::{
    load_landmark_trace, run_attack_suite, trace_file_name, AttackConfig, QualityLevel, Victim,
};
use jawprint_core::evaluation::{
    evaluate_population, model_file_name, read_thresholds, write_thresholds, Dataset, EvalConfig, EvalReport,
    SplitConfig, UserThreshold, THRESHOLD_FILE,
};
use jawprint_core::features::{
    compute_many, fuse, io::ranking_table, io::save_feature_matrix, io::write_ranking, relieff_rank, window_columns,
    FeatureDescriptor, FeatureVector, SelectionConfig,
};
use jawprint_core::signal::{session_dir, window_means, Activity, RecordingSession, SensorLocation};
use jawprint_core::synthgen::{video_dir, write_dataset, CohortSpec, SynthConfig};
use jawprint_core::verifiers::{load_model, save_model, ClassifierKind, Scope, TrainConfig};
use jawprint_service::{http, Registry, ServiceConfig, SessionManager};
use tracing_subscriber::EnvFilter;

use crate::{
    ActivityArg, AttackArgs, Cli, CliError, Command, EvaluateArgs, ExtractArgs, Format, InspectArgs, ModelArg,
    ScopeArg, SelectArgs, SelectMode, ServeArgs, SimulateArgs, TrainArgs, TrainingArgs,
};

type Result<T> = std::result::Result<T, CliError>;

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate(a) => simulate(cli, a),
        Command::Extract(a) => extract(cli, a),
        Command::Select(a) => select(cli, a),
        Command::Train(a) => train(cli, a),
        Command::Evaluate(a) => evaluate(cli, a),
        Command::Attack(a) => attack(cli, a),
        Command::Inspect(a) => inspect(cli, a),
        Command::Serve(a) => serve(cli, a),
    }
}

fn activities(args: &[ActivityArg]) -> Vec<Activity> {
    if args.is_empty() {
        Activity::ALL.to_vec()
    } else {
        let mut v: Vec<Activity> = args.iter().map(|&a| a.into()).collect();
        v.sort();
        v.dedup();
        v
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn require_dir(path: &Path, what: &str) -> Result<()> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(CliError::Data(format!("{what} {} does not exist (run `jawprint simulate` first?)", path.display())))
    }
}

fn check_window(window: usize, hop: usize) -> Result<()> {
    if window < 2 || hop == 0 {
        return Err(CliError::Usage("--window must be at least 2 and --hop at least 1".into()));
    }
    Ok(())
}

/// Users are the subdirectories of the data root, sorted.
fn list_users(root: &Path) -> Result<Vec<String>> {
    require_dir(root, "data root")?;
    let mut users: Vec<String> = std::fs::read_dir(root)
        .map_err(CliError::data)?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_dir())
        .filter_map(|e| e.file_name().to_str().map(str::to_string))
        .collect();
    users.sort();
    Ok(users)
}

fn simulate(cli: &Cli, a: &SimulateArgs) -> Result<()> {
    if a.sessions != 2 {
        return Err(CliError::Usage("--sessions must be 2 (session 1 trains, session 2 tests)".into()));
    }
    if a.users < 2 {
        return Err(CliError::Usage("--users must be at least 2".into()));
    }
    if !(a.duration > 0.0) || a.video_duration < 0.0 {
        return Err(CliError::Usage("--duration must be positive and --video-duration non-negative".into()));
    }
    let spec = CohortSpec {
        users: a.users,
        seed: cli.seed,
        duration: a.duration,
        activities: activities(&a.activities),
        video_duration: a.video_duration,
    };
    let profiles = write_dataset(&cli.data_root, &spec, &SynthConfig::default()).map_err(CliError::data)?;
    println!("wrote {} users to {}", profiles.len(), cli.data_root.display());
    Ok(())
}

fn load_session(root: &Path, user: &str, activity: Activity, k: u8) -> Result<Option<RecordingSession>> {
    let dir = session_dir(root, user, activity, k);
    if !dir.is_dir() {
        return Ok(None);
    }
    RecordingSession::load(&dir, user, activity, k).map(Some).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))
}

/// Feature rows of every session under the root, per location, in
/// user/activity/session/window order.
fn session_features(
    root: &Path,
    acts: &[Activity],
    sessions: &[u8],
    window: usize,
    hop: usize,
) -> Result<BTreeMap<SensorLocation, Vec<FeatureVector>>> {
    let mut out: BTreeMap<SensorLocation, Vec<FeatureVector>> = BTreeMap::new();
    for user in list_users(root)? {
        for &activity in acts {
            for &k in sessions {
                let Some(session) = load_session(root, &user, activity, k)? else { continue };
                for loc in SensorLocation::ALL {
                    let windows = session.windows(loc, window, hop).map_err(CliError::data)?;
                    out.entry(loc).or_default().extend(compute_many(&windows).map_err(CliError::data)?);
                }
            }
        }
    }
    if out.is_empty() {
        return Err(CliError::Data(format!("no sessions found under {}", root.display())));
    }
    Ok(out)
}

fn extract(cli: &Cli, a: &ExtractArgs) -> Result<()> {
    let hop = a.windows.hop();
    check_window(a.windows.window, hop)?;
    let features = session_features(&cli.data_root, &activities(&a.activities), &[1, 2], a.windows.window, hop)?;
    let dir = cli.out.join("features");
    std::fs::create_dir_all(&dir).map_err(CliError::data)?;
    for (loc, rows) in &features {
        let path = dir.join(format!("{}.csv", loc.file_stem()));
        save_feature_matrix(&path, rows).map_err(CliError::data)?;
        println!("{}: {} rows -> {}", loc, rows.len(), path.display());
    }
    Ok(())
}

fn select(cli: &Cli, a: &SelectArgs) -> Result<()> {
    let hop = a.windows.hop();
    check_window(a.windows.window, hop)?;
    let activity: Activity = a.activity.into();
    let features = session_features(&cli.data_root, &[activity], &[a.session], a.windows.window, hop)?;
    let chin = &features[&SensorLocation::BelowChin];
    let mut ids: BTreeMap<String, usize> = BTreeMap::new();
    for f in chin {
        let next = ids.len();
        ids.entry(f.origin.user_id.clone()).or_insert(next);
    }
    let labels: Vec<usize> = chin.iter().map(|f| ids[&f.origin.user_id]).collect();
    let cfg = SelectionConfig { k_top: a.top, relieff_neighbors: a.neighbors, relieff_iterations: a.iterations, seed: cli.seed };

    let mut jobs: Vec<(String, Vec<Vec<f64>>, Vec<FeatureDescriptor>)> = Vec::new();
    match a.mode {
        SelectMode::Fused => {
            let rows = (0..chin.len())
                .map(|i| {
                    let parts: BTreeMap<SensorLocation, FeatureVector> =
                        features.iter().map(|(&l, v)| (l, v[i].clone())).collect();
                    fuse(&parts).map(|f| f.values)
                })
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(CliError::data)?;
            let columns = SensorLocation::ALL.iter().flat_map(|&l| window_columns(l)).collect();
            jobs.push(("fused".into(), rows, columns));
        }
        SelectMode::PerLocation => {
            for (loc, rows) in &features {
                jobs.push((loc.file_stem().into(), rows.iter().map(|f| f.values.clone()).collect(), window_columns(*loc)));
            }
        }
    }
    for (name, rows, columns) in jobs {
        if a.top == 0 || a.top > columns.len() {
            return Err(CliError::Usage(format!("--top must be between 1 and {}", columns.len())));
        }
        let ranked = relieff_rank(&rows, &labels, &columns, &cfg).map_err(CliError::data)?;
        let path = cli.out.join(format!("ranking_{name}.csv"));
        let mut f = create(&path)?;
        write_ranking(&mut f, &ranked, Some(a.top)).map_err(CliError::data)?;
        f.flush().map_err(CliError::data)?;
        match cli.format {
            Format::Table => print!("{name}\n{}", ranking_table(&ranked, a.top)),
            Format::Csv => write_ranking(&mut std::io::stdout().lock(), &ranked, Some(a.top)).map_err(CliError::data)?,
        }
    }
    Ok(())
}

fn classifiers(m: ModelArg) -> Vec<ClassifierKind> {
    match m {
        ModelArg::Svm => vec![ClassifierKind::Svm],
        ModelArg::Lstm => vec![ClassifierKind::Lstm],
        ModelArg::All => ClassifierKind::ALL.to_vec(),
    }
}

fn scopes(s: ScopeArg) -> Vec<Scope> {
    match s {
        ScopeArg::Fused => vec![Scope::Fused],
        ScopeArg::Chin => vec![Scope::Location(SensorLocation::BelowChin)],
        ScopeArg::UpperLeftCheek => vec![Scope::Location(SensorLocation::UpperLeftCheek)],
        ScopeArg::LowerRightCheek => vec![Scope::Location(SensorLocation::LowerRightCheek)],
        ScopeArg::PerLocation => SensorLocation::ALL.map(Scope::Location).to_vec(),
        ScopeArg::All => Scope::ALL.to_vec(),
    }
}

fn eval_config(cli: &Cli, t: &TrainingArgs, kinds: Vec<ClassifierKind>, scopes: Vec<Scope>) -> Result<EvalConfig> {
    check_window(t.windows.window, t.windows.hop())?;
    if !(t.impostor_ratio > 0.0) {
        return Err(CliError::Usage("--impostor-ratio must be positive".into()));
    }
    let mut train = TrainConfig::default();
    train.selection.k_top = t.top;
    train.selection.seed = cli.seed;
    train.lstm.seed = cli.seed;
    if let Some(v) = t.lstm_epochs {
        train.lstm.max_epochs = v;
    }
    if let Some(v) = t.lstm_batch {
        train.lstm.batch_size = v;
    }
    if let Some(v) = t.lstm_lr {
        train.lstm.learning_rate = v;
    }
    if let Some(v) = t.lstm_units {
        train.lstm.units_per_layer = v;
    }
    Ok(EvalConfig {
        classifiers: kinds,
        scopes,
        activities: vec![t.activity.into()],
        split: SplitConfig { impostor_ratio: t.impostor_ratio, seed: cli.seed },
        train,
        users: t.users.clone(),
    })
}

fn load_dataset(cli: &Cli, t: &TrainingArgs) -> Result<Dataset> {
    require_dir(&cli.data_root, "data root")?;
    Dataset::load(&cli.data_root, &[t.activity.into()], t.windows.window, t.windows.hop()).map_err(CliError::data)
}

fn print_report(cli: &Cli, report: &EvalReport) -> Result<()> {
    match cli.format {
        Format::Table => print!("{}", report.render_tables()),
        Format::Csv => report.write_summary_csv(&mut std::io::stdout().lock()).map_err(CliError::data)?,
    }
    Ok(())
}

fn train(cli: &Cli, a: &TrainArgs) -> Result<()> {
    if a.model == ModelArg::All {
        return Err(CliError::Usage("train needs one --model (svm or lstm)".into()));
    }
    let scope = match scopes(a.scope).as_slice() {
        [s] => *s,
        _ => return Err(CliError::Usage("train needs one --scope (fused, chin, upper-left-cheek, lower-right-cheek)".into())),
    };
    let cfg = eval_config(cli, &a.training, classifiers(a.model), vec![scope])?;
    let ds = load_dataset(cli, &a.training)?;
    let (report, trained) = evaluate_population(&ds, &cfg).map_err(CliError::data)?;

    let dir = a.models.clone().unwrap_or_else(|| cli.out.join("models"));
    std::fs::create_dir_all(&dir).map_err(CliError::data)?;
    let threshold_path = dir.join(THRESHOLD_FILE);
    let mut thresholds: BTreeMap<String, UserThreshold> = if threshold_path.exists() {
        read_thresholds(&threshold_path).map_err(CliError::data)?.into_iter().map(|t| (t.user_id.clone(), t)).collect()
    } else {
        BTreeMap::new()
    };
    for t in &trained {
        save_model(&t.verifier, &dir.join(model_file_name(&t.result.user_id))).map_err(CliError::data)?;
        thresholds.insert(t.result.user_id.clone(), t.result.user_threshold());
    }
    write_thresholds(&threshold_path, &thresholds.into_values().collect::<Vec<_>>()).map_err(CliError::data)?;
    let mut f = create(&dir.join("train_users.csv"))?;
    report.write_users_csv(&mut f).and_then(|_| f.flush()).map_err(CliError::data)?;
    println!("trained {} models -> {}", trained.len(), dir.display());
    print_report(cli, &report)
}

fn evaluate(cli: &Cli, a: &EvaluateArgs) -> Result<()> {
    let cfg = eval_config(cli, &a.training, classifiers(a.model), scopes(a.mode))?;
    let ds = load_dataset(cli, &a.training)?;
    let (report, _) = evaluate_population(&ds, &cfg).map_err(CliError::data)?;
    let mut f = create(&cli.out.join("eval_users.csv"))?;
    report.write_users_csv(&mut f).and_then(|_| f.flush()).map_err(CliError::data)?;
    let mut f = create(&cli.out.join("eval_summary.csv"))?;
    report.write_summary_csv(&mut f).and_then(|_| f.flush()).map_err(CliError::data)?;
    print_report(cli, &report)
}

fn qualities(a: &AttackArgs) -> Vec<QualityLevel> {
    QualityLevel::ALL
        .into_iter()
        .filter(|q| a.fps.as_deref().is_none_or(|f| f == q.fps.to_string()))
        .filter(|q| a.resolution.as_deref().is_none_or(|r| r == q.resolution.label()))
        .collect()
}

fn attack(cli: &Cli, a: &AttackArgs) -> Result<()> {
    let landmarks = a.landmarks.clone().unwrap_or_else(|| cli.data_root.clone());
    let models = a.models.clone().unwrap_or_else(|| cli.out.join("models"));
    require_dir(&landmarks, "landmark root")?;
    require_dir(&models, "model directory")?;
    let thresholds = read_thresholds(&models.join(THRESHOLD_FILE)).map_err(CliError::data)?;
    let mut victims = Vec::new();
    for th in thresholds {
        let video = video_dir(&landmarks, &th.user_id);
        if !video.is_dir() {
            continue;
        }
        let load = |loc: SensorLocation| load_landmark_trace(&video.join(trace_file_name(loc)), loc).map_err(CliError::data);
        let masters = [load(SensorLocation::BelowChin)?, load(SensorLocation::UpperLeftCheek)?, load(SensorLocation::LowerRightCheek)?];
        let verifier = load_model(&models.join(model_file_name(&th.user_id))).map_err(CliError::data)?;
        victims.push(Victim { masters, verifiers: vec![(verifier, th)] });
    }
    if victims.is_empty() {
        return Err(CliError::Data(format!("no enrolled user has landmark traces under {}", landmarks.display())));
    }
    let report = run_attack_suite(&victims, &qualities(a), &AttackConfig::default()).map_err(CliError::data)?;
    let mut f = create(&cli.out.join("attack.csv"))?;
    report.write_csv(&mut f).and_then(|_| f.flush()).map_err(CliError::data)?;
    match cli.format {
        Format::Table => print!("{}", report.render_table()),
        Format::Csv => report.write_csv(&mut std::io::stdout().lock()).map_err(CliError::data)?,
    }
    Ok(())
}

fn inspect(cli: &Cli, a: &InspectArgs) -> Result<()> {
    if !(a.span > 0.0) {
        return Err(CliError::Usage("--span must be positive".into()));
    }
    let user = match &a.user {
        Some(u) => u.clone(),
        None => list_users(&cli.data_root)?.into_iter().next().ok_or_else(|| CliError::Data("data root has no users".into()))?,
    };
    let activity: Activity = a.activity.into();
    let session = load_session(&cli.data_root, &user, activity, a.session)?
        .ok_or_else(|| CliError::Data(format!("{}: no such session", session_dir(&cli.data_root, &user, activity, a.session).display())))?;
    let path: PathBuf = cli.out.join(format!("inspect_{user}_{}_session{}.csv", activity.dir_name(), a.session));
    let mut f = create(&path)?;
    let mut text = String::from("location,block,t_start,mean_x,mean_y,mean_z\n");
    for loc in SensorLocation::ALL {
        let means = window_means(session.stream(loc), a.span).map_err(CliError::data)?;
        for (i, m) in means.iter().enumerate() {
            text.push_str(&format!("{},{},{},{},{},{}\n", loc, i, i as f64 * a.span, m[0], m[1], m[2]));
        }
    }
    f.write_all(text.as_bytes()).and_then(|_| f.flush()).map_err(CliError::data)?;
    match cli.format {
        Format::Csv => print!("{text}"),
        Format::Table => println!("{} blocks of {} s per location -> {}", text.lines().count().saturating_sub(1) / 3, a.span, path.display()),
    }
    Ok(())
}

fn serve(cli: &Cli, a: &ServeArgs) -> Result<()> {
    let mut cfg = ServiceConfig::load(a.config.as_deref()).map_err(|e| CliError::Usage(e.to_string()))?;
    if let Some(p) = a.port {
        cfg.port = p;
    }
    cfg.model_dir = a.models.clone().unwrap_or_else(|| if a.config.is_some() { cfg.model_dir.clone() } else { cli.out.join("models") });
    let registry = Registry::load(&cfg.model_dir).map_err(CliError::data)?;
    let users = registry.users().count();
    let manager = Arc::new(SessionManager::new(registry, cfg.policy.clone()).map_err(|e| CliError::Usage(e.to_string()))?);
    let rt = tokio::runtime::Runtime::new().map_err(CliError::data)?;
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();
    tracing::info!(users, model_dir = %cfg.model_dir.display(), "registry loaded");
    rt.block_on(http::serve(&cfg, manager)).map_err(CliError::data)
}

