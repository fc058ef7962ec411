use std::cmp::Ordering;
use std::path::Path;

use anyhow::{bail, Result};
use pclab_core::attractors::{attractor_set, direct_attractor_oracle, BasinConfig, OracleVerdict};
use pclab_core::campaign::{run_campaign, CampaignConfig, FlatRecord};
use pclab_core::ergodic::{density_gap_records, ulam_model};
use pclab_core::orbits::{detect_g_connection, forward_orbit, g_orbit, itinerary, orbit_records};
use pclab_core::presets::{preset, presets, SystemSpec};
use pclab_core::quasi_partition::{build_quasi_partition, default_gap_budget, gap_hits};
use pclab_core::{Backend, ExpandingMap, Float, PiecewiseContraction, Rational, Scalar};
use serde_json::{json, Map, Value};

use crate::emit::{write_rows, Report, Table};
use crate::{load_system, Cli, Command, MapArgs};

/// Probe window for direct iteration on general-mode systems.
const ORACLE_PROBE: usize = 64;
const ORACLE_TOL: f64 = 1e-10;

pub fn run(cli: &Cli) -> Result<Report> {
    match &cli.command {
        Command::Presets => Ok(list_presets()),
        Command::Validate { file } => {
            let spec = load_system(file)?;
            match backend(cli, &spec) {
                Backend::Rational => validate::<Rational>(&spec),
                Backend::Float => validate::<Float>(&spec),
            }
        }
        Command::DensityGap {
            map,
            steps,
            seeds,
            threshold,
        } => density_gap(
            &map.resolve()?,
            cli.seed.unwrap_or(0),
            *seeds,
            *steps,
            *threshold,
        ),
        Command::Campaign {
            config,
            trials,
            records,
            summary,
            flat,
        } => {
            let mut config = CampaignConfig::load(config)?;
            if let Some(seed) = cli.seed {
                config.seed = seed;
            }
            if cli.backend.is_some() {
                config.backend = cli.backend;
            }
            if let Some(t) = trials {
                config.trials = *t;
            }
            if records.is_some() {
                config.output.records = records.clone();
            }
            if summary.is_some() {
                config.output.summary = summary.clone();
            }
            campaign(&config, flat.as_deref())
        }
        other => {
            let spec = map_args(other).resolve()?;
            match backend(cli, &spec) {
                Backend::Rational => on_map::<Rational>(other, &spec),
                Backend::Float => on_map::<Float>(other, &spec),
            }
        }
    }
}

fn backend(cli: &Cli, spec: &SystemSpec) -> Backend {
    cli.backend.unwrap_or_else(|| spec.default_backend())
}

fn map_args(command: &Command) -> &MapArgs {
    match command {
        Command::Orbit { map, .. }
        | Command::Itinerary { map, .. }
        | Command::Gaps { map, .. }
        | Command::Qpartition { map, .. }
        | Command::Attractors { map, .. }
        | Command::Gconnect { map, .. }
        | Command::Ulam { map, .. }
        | Command::DensityGap { map, .. } => map,
        Command::Presets | Command::Validate { .. } | Command::Campaign { .. } => {
            unreachable!("handled before map resolution")
        }
    }
}

fn on_map<S: Scalar>(command: &Command, spec: &SystemSpec) -> Result<Report> {
    match command {
        Command::Orbit {
            x, steps, inverse, ..
        } => orbit::<S>(spec, x, *steps, *inverse),
        Command::Itinerary { x, steps, .. } => itinerary_report::<S>(spec, x, *steps),
        Command::Gaps { budget, .. } => gaps::<S>(spec, *budget),
        Command::Qpartition { budget, .. } => qpartition::<S>(spec, *budget),
        Command::Attractors {
            samples,
            budget,
            basins,
            burn_in,
            ..
        } => attractors::<S>(spec, *samples, *budget, basins.as_deref(), *burn_in),
        Command::Gconnect { k_max, .. } => gconnect::<S>(spec, *k_max),
        Command::Ulam { bins, .. } => ulam::<S>(spec, *bins),
        _ => unreachable!("not a map command"),
    }
}

fn strings<S: Scalar>(xs: &[S]) -> Vec<String> {
    xs.iter().map(|x| x.to_string()).collect()
}

fn joined<T: ToString>(xs: &[T]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Array(items) => items.iter().map(cell).collect::<Vec<_>>().join(" "),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn kv_table(obj: &Map<String, Value>) -> Table {
    Table::key_values(obj.iter().map(|(k, v)| (k.clone(), cell(v))).collect())
}

fn list_presets() -> Report {
    let mut table = Table::new(&["name", "n", "general_mode", "description"]);
    let mut entries = Vec::new();
    for info in presets() {
        let spec = preset(info.name).expect("shipped presets resolve");
        table.push([
            info.name.to_string(),
            spec.n().to_string(),
            spec.general_mode.to_string(),
            info.description.to_string(),
        ]);
        entries.push(json!({
            "name": info.name,
            "description": info.description,
            "system": spec,
        }));
    }
    Report::new(&entries, table)
}

fn validate<S: Scalar>(spec: &SystemSpec) -> Result<Report> {
    let system = spec.system::<S>()?;
    let mut info = Map::new();
    info.insert("name".into(), json!(spec.name));
    info.insert("n".into(), json!(system.n()));
    info.insert("general_mode".into(), json!(system.is_general()));
    info.insert("affine".into(), json!(system.is_affine()));
    info.insert("kappa".into(), json!(system.kappa().to_string()));
    info.insert(
        "contraction_constants".into(),
        json!(strings(system.contraction_constants())),
    );
    let show = |ivs: &[pclab_core::interval::Interval<S>]| {
        ivs.iter().map(|i| i.to_string()).collect::<Vec<_>>()
    };
    info.insert("images".into(), json!(show(system.images())));
    info.insert("gaps".into(), json!(show(system.gaps())));
    if !system.is_general() {
        let g = ExpandingMap::build(&system)?;
        info.insert("expansion".into(), json!(g.expansion().to_string()));
        info.insert("expanding_pieces".into(), json!(g.pieces().len()));
    }
    if spec.cuts.is_some() {
        let f = spec.map::<S>()?;
        info.insert("cuts".into(), json!(strings(f.cuts())));
        info.insert("assignment".into(), json!(f.assignment().to_string()));
        info.insert(
            "continuity_intervals".into(),
            json!(show(f.continuity_intervals())),
        );
    }
    let table = kv_table(&info);
    Ok(Report::new(&info, table))
}

fn orbit<S: Scalar>(spec: &SystemSpec, x: &str, steps: usize, inverse: bool) -> Result<Report> {
    let f = spec.map::<S>()?;
    let x0 = S::parse(x)?;
    let records = if inverse {
        let g = ExpandingMap::build(f.system())?;
        g_orbit(&g, &x0, steps)?
            .into_iter()
            .enumerate()
            .map(|(k, x)| (k, x, None))
            .collect::<Vec<_>>()
    } else {
        let orbit = forward_orbit(&f, &x0, steps)?;
        orbit_records(&f, &orbit)
            .into_iter()
            .map(|r| (r.k, r.x, r.d))
            .collect()
    };
    let mut table = Table::new(&["k", "x", "d"]);
    let mut points = Vec::new();
    for (k, x, d) in &records {
        table.push([
            k.to_string(),
            x.to_string(),
            d.map(|d| d.to_string()).unwrap_or_default(),
        ]);
        points.push(json!({ "k": k, "x": x.to_string(), "d": d }));
    }
    let json = json!({
        "map": if inverse { "g" } else { "f" },
        "x0": x0.to_string(),
        "steps": steps,
        "orbit": points,
    });
    Ok(Report::new(&json, table))
}

fn itinerary_report<S: Scalar>(spec: &SystemSpec, x: &str, steps: usize) -> Result<Report> {
    let f = spec.map::<S>()?;
    let x0 = S::parse(x)?;
    let word = itinerary(&f, &x0, steps)?;
    let mut table = Table::new(&["k", "digit"]);
    for (k, d) in word.digits.iter().enumerate() {
        table.push([k, *d]);
    }
    let json = json!({
        "x0": x0.to_string(),
        "steps": steps,
        "digits": word.digits,
        "classification": word.classification,
        "preperiod": word.preperiod_word(),
        "period": word.period_word(),
    });
    Ok(Report::new(&json, table))
}

fn expanding<S: Scalar>(f: &PiecewiseContraction<S>) -> Result<ExpandingMap<S>> {
    Ok(ExpandingMap::build(f.system())?)
}

fn gaps<S: Scalar>(spec: &SystemSpec, budget: Option<usize>) -> Result<Report> {
    let f = spec.map::<S>()?;
    let g = expanding(&f)?;
    let budget = budget.unwrap_or_else(|| default_gap_budget(&f, &g));
    let hits = gap_hits(&f, &g, budget)?;
    let mut table = Table::new(&["cut", "q", "verdict", "trail"]);
    for h in &hits {
        table.push([
            h.cut.to_string(),
            h.q.to_string(),
            cell(&serde_json::to_value(h.verdict)?),
            joined(&h.trail),
        ]);
    }
    Ok(Report::new(
        &json!({ "budget": budget, "hits": hits }),
        table,
    ))
}

fn qpartition<S: Scalar>(spec: &SystemSpec, budget: Option<usize>) -> Result<Report> {
    let f = spec.map::<S>()?;
    let g = expanding(&f)?;
    let budget = budget.unwrap_or_else(|| default_gap_budget(&f, &g));
    let qp = build_quasi_partition(&f, &g, budget)?;
    let verification = pclab_core::quasi_partition::verify_quasi_partition(&f, &qp);
    let report = qp.report();
    let mut table = Table::new(&["component", "lo", "hi", "eta", "tau"]);
    for (j, c) in report.components.iter().enumerate() {
        table.push([
            (j + 1).to_string(),
            c.lo.to_string(),
            c.hi.to_string(),
            c.eta.to_string(),
            report.tau[j].to_string(),
        ]);
    }
    let json = json!({
        "budget": budget,
        "m": qp.m(),
        "partition": report,
        "verification": verification,
    });
    let out = Report::new(&json, table);
    if verification.all_passed() {
        Ok(out)
    } else {
        let failed: Vec<String> = verification
            .failed()
            .map(|c| format!("{}: {}", c.name, c.detail))
            .collect();
        Ok(out.violation(failed.join("; ")))
    }
}

fn grid<S: Scalar>(samples: usize) -> Vec<S> {
    let n = samples as i64;
    (0..n).map(|k| S::from_ratio(2 * k + 1, 2 * n)).collect()
}

fn attractors<S: Scalar>(
    spec: &SystemSpec,
    samples: usize,
    budget: Option<usize>,
    basins: Option<&Path>,
    burn_in: usize,
) -> Result<Report> {
    if samples == 0 {
        bail!("--samples must be at least 1");
    }
    let f = spec.map::<S>()?;
    let points = grid::<S>(samples);
    if f.is_general() {
        return attractors_by_iteration(&f, &points, burn_in, basins);
    }
    let g = expanding(&f)?;
    let budget = budget.unwrap_or_else(|| default_gap_budget(&f, &g));
    let qp = build_quasi_partition(&f, &g, budget)?;
    let verification = pclab_core::quasi_partition::verify_quasi_partition(&f, &qp);
    if !verification.all_passed() {
        let failed: Vec<&str> = verification.failed().map(|c| c.name.as_str()).collect();
        return Ok(
            Report::new(&json!({ "verification": verification }), Table::default()).violation(
                format!("quasi-partition checks failed: {}", failed.join(", ")),
            ),
        );
    }
    let set = attractor_set(&f, &qp, &points, &BasinConfig::default())?;
    let record = set.record();
    let mut table = Table::new(&["orbit", "period", "word", "stable", "points", "basin_count"]);
    for (k, o) in record.orbits.iter().enumerate() {
        table.push([
            (k + 1).to_string(),
            o.period.to_string(),
            joined(&o.word),
            o.stable.to_string(),
            joined(&o.points),
            record.basin_histogram[k].to_string(),
        ]);
    }
    if record.unattributed > 0 {
        table.push([
            "unattributed",
            "",
            "",
            "",
            "",
            &record.unattributed.to_string(),
        ]);
    }
    if let Some(path) = basins {
        let rows: Vec<(String, String, usize)> = set
            .basins
            .iter()
            .map(|b| {
                (
                    b.x.to_string(),
                    b.orbit.map(|o| (o + 1).to_string()).unwrap_or_default(),
                    b.iterations,
                )
            })
            .collect();
        write_basins(path, &rows)?;
    }
    let json = json!({ "mode": "quasi-partition", "samples": samples, "attractors": record });
    Ok(Report::new(&json, table))
}

fn write_basins(path: &Path, rows: &[(String, String, usize)]) -> Result<()> {
    #[derive(serde::Serialize)]
    struct Row<'a> {
        x: &'a str,
        orbit: &'a str,
        iterations: usize,
    }
    let rows: Vec<Row> = rows
        .iter()
        .map(|(x, orbit, iterations)| Row {
            x,
            orbit,
            iterations: *iterations,
        })
        .collect();
    write_rows(path, &rows)
}

/// One class of limiting behaviour found by direct iteration.
struct Limit<S> {
    kind: &'static str,
    points: Vec<S>,
    word: Vec<usize>,
    actual: Option<usize>,
    count: usize,
}

fn same_points<S: Scalar>(a: &[S], b: &[S], tol: &S) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| (x.clone() - y.clone()).abs() <= *tol)
}

fn attractors_by_iteration<S: Scalar>(
    f: &PiecewiseContraction<S>,
    points: &[S],
    burn_in: usize,
    basins: Option<&Path>,
) -> Result<Report> {
    let tol = S::from_f64(ORACLE_TOL);
    let mut limits: Vec<Limit<S>> = Vec::new();
    let mut undetermined = 0;
    let mut labels = Vec::with_capacity(points.len());
    for x in points {
        let (kind, mut pts, word, actual) =
            match direct_attractor_oracle(f, x, burn_in, ORACLE_PROBE, &tol)? {
                OracleVerdict::Orbit { points, word, .. } => ("orbit", points, word, None),
                OracleVerdict::Phantom(p) => ("phantom", vec![p.point], p.word, p.actual),
                OracleVerdict::Undetermined => {
                    undetermined += 1;
                    labels.push((x.to_string(), String::new(), burn_in + ORACLE_PROBE));
                    continue;
                }
            };
        pts.sort_by(|a, b| a.total_cmp(b));
        let idx = match limits
            .iter()
            .position(|l| l.kind == kind && same_points(&l.points, &pts, &tol))
        {
            Some(i) => i,
            None => {
                limits.push(Limit {
                    kind,
                    points: pts,
                    word,
                    actual,
                    count: 0,
                });
                limits.len() - 1
            }
        };
        limits[idx].count += 1;
        labels.push((
            x.to_string(),
            format!("{kind}-{}", idx + 1),
            burn_in + ORACLE_PROBE,
        ));
    }
    if let Some(path) = basins {
        write_basins(path, &labels)?;
    }
    let mut table = Table::new(&["class", "kind", "period", "word", "points", "count"]);
    let mut classes = Vec::new();
    for (k, l) in limits.iter().enumerate() {
        table.push([
            (k + 1).to_string(),
            l.kind.to_string(),
            l.word.len().to_string(),
            joined(&l.word),
            joined(&l.points),
            l.count.to_string(),
        ]);
        classes.push(json!({
            "kind": l.kind,
            "points": strings(&l.points),
            "word": l.word,
            "actual_branch": l.actual,
            "count": l.count,
        }));
    }
    if undetermined > 0 {
        table.push(["", "undetermined", "", "", "", &undetermined.to_string()]);
    }
    let orbits = limits.iter().filter(|l| l.kind == "orbit").count();
    let json = json!({
        "mode": "direct-iteration",
        "samples": points.len(),
        "burn_in": burn_in,
        "r": orbits,
        "classes": classes,
        "undetermined": undetermined,
    });
    Ok(Report::new(&json, table))
}

fn gconnect<S: Scalar>(spec: &SystemSpec, k_max: usize) -> Result<Report> {
    let f = spec.map::<S>()?;
    let g = expanding(&f)?;
    let found = detect_g_connection(&f, &g, k_max)?;
    let mut table = Table::new(&["cut", "endpoint", "k"]);
    if let Some(c) = &found {
        table.push([c.cut, c.endpoint, c.k]);
    }
    Ok(Report::new(
        &json!({ "k_max": k_max, "connection": found }),
        table,
    ))
}

fn ulam<S: Scalar>(spec: &SystemSpec, bins: usize) -> Result<Report> {
    let system = spec.system::<S>()?;
    let g = ExpandingMap::build(&system)?;
    let model = ulam_model(&g, bins)?;
    let dump = model.dump();
    let mut table = Table::new(&["lo", "hi", "mass", "density"]);
    for (b, d) in dump.iter().zip(model.density()) {
        table.push([b.lo, b.hi, b.mass, d]);
    }
    let json = json!({
        "bins": bins,
        "residual": model.residual,
        "sweeps": model.sweeps,
        "min_mass": model.mass.iter().cloned().fold(f64::INFINITY, f64::min),
        "density": dump,
    });
    Ok(Report::new(&json, table))
}

fn density_gap(
    spec: &SystemSpec,
    first_seed: u64,
    seeds: u64,
    steps: usize,
    threshold: f64,
) -> Result<Report> {
    let g = ExpandingMap::build(&spec.system::<Float>()?)?;
    let records = density_gap_records(&g, first_seed..first_seed + seeds, steps)?;
    let mut table = Table::new(&["seed", "M", "max_gap"]);
    for r in &records {
        table.push([
            r.seed.to_string(),
            r.steps.to_string(),
            r.max_gap.to_string(),
        ]);
    }
    let dense = records.iter().filter(|r| r.max_gap <= threshold).count();
    let worst = records
        .iter()
        .map(|r| r.max_gap)
        .max_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let json = json!({
        "steps": steps,
        "threshold": threshold,
        "dense": dense,
        "seeds": records.len(),
        "worst_gap": worst,
        "records": records,
    });
    Ok(Report::new(&json, table))
}

fn campaign(config: &CampaignConfig, flat: Option<&Path>) -> Result<Report> {
    let result = run_campaign(config)?;
    if let Some(path) = flat {
        let rows: Vec<FlatRecord> = result.records.iter().map(|r| r.flat()).collect();
        write_rows(path, &rows)?;
    }
    let summary = &result.summary;
    let report = Report::new(summary, Table::key_values(summary.rows()));
    if summary.invariant_violations > 0 {
        let first = result
            .records
            .iter()
            .find(|r| r.flat().outcome == "invariant-violation")
            .map(|r| r.flat().detail)
            .unwrap_or_default();
        Ok(report.violation(format!(
            "{} trial(s), first: {first}",
            summary.invariant_violations
        )))
    } else {
        Ok(report)
    }
}
