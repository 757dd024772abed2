mod args;
mod output;

use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::Parser;
use serde_json::json;

use args::*;
use output::{Header, Sink};
use tilepile_core::greens::{classify, discrete_derivative, greens_infinite, greens_torus, FunctionOnTiling};
use tilepile_core::mixing::{
    cutoff_scan, gap_observables, l2_profile, mc_mixing, Boundary, CutoffOptions, DualGroup, McOptions,
};
use tilepile_core::reference;
use tilepile_core::spectral::{
    default_ladder, gamma_j_search, spectral_factors, spectral_params, Evaluator, Prevector, SearchOptions,
};
use tilepile_core::tiling::{build_open, build_torus, condition_a, reflection_symmetry};
use tilepile_core::{Configuration, ReflectionFamily, Sandpile, Tiling, TilingSpec, Vertex};

/// Tolerance failure, mapped to exit code 2.
#[derive(Debug)]
struct ToleranceFailure;

impl std::fmt::Display for ToleranceFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "one or more values outside tolerance")
    }
}

impl std::error::Error for ToleranceFailure {}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = std::env::var("TILEPILE_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<ToleranceFailure>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Tiling(c) => tiling_cmd(c),
        Command::Sandpile(c) => sandpile_cmd(c),
        Command::Greens(a) => greens_cmd(a),
        Command::Gamma(a) => gamma_cmd(a),
        Command::Mixing(c) => mixing_cmd(c),
        Command::Reproduce(c) => reproduce_cmd(c),
    }
}

fn load_tiling(spec: &str) -> Result<Tiling> {
    let path = std::path::Path::new(spec);
    if path.exists() {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {spec}"))?;
        return Ok(Tiling::new(TilingSpec::from_json(&text)?)?);
    }
    Tiling::builtin(spec).map_err(|_| anyhow!("`{spec}` is neither a spec file nor a built-in tiling"))
}

struct GraphSel {
    tiling: Tiling,
    boundary: Boundary,
    ms: Vec<usize>,
}

fn parse_graph(s: &str) -> Result<GraphSel> {
    let mut parts = s.rsplitn(3, ':');
    let (ms, kind, spec) = match (parts.next(), parts.next(), parts.next()) {
        (Some(m), Some(k), Some(sp)) => (m, k, sp),
        _ => bail!("--graph must look like <spec>:<torus|open>:<m>"),
    };
    let boundary = match kind {
        "torus" => Boundary::Torus,
        "open" => Boundary::Open,
        other => bail!("unknown boundary `{other}`"),
    };
    let ms = ms.split(',').map(|x| x.trim().parse::<usize>().with_context(|| format!("bad size `{x}`"))).collect::<Result<Vec<_>>>()?;
    Ok(GraphSel { tiling: load_tiling(spec)?, boundary, ms })
}

fn build(tiling: &Tiling, boundary: Boundary, m: usize) -> Result<Sandpile> {
    let g = match boundary {
        Boundary::Torus => build_torus(tiling, m)?,
        Boundary::Open => {
            let fam = tiling.family().ok_or_else(|| anyhow!("tiling `{}` has no reflection family", tiling.name()))?;
            build_open(tiling, fam, m)?
        }
    };
    Ok(Sandpile::new(g))
}

fn single_graph(g: &GraphArg) -> Result<(GraphSel, Sandpile)> {
    let sel = parse_graph(&g.graph)?;
    let [m] = sel.ms[..] else { bail!("expected a single graph size") };
    let sp = build(&sel.tiling, sel.boundary, m)?;
    Ok((sel, sp))
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>> {
    s.split(',').map(|x| x.trim().parse::<T>().map_err(|_| anyhow!("bad list entry `{x}`"))).collect()
}

fn parse_steps(s: &str) -> Result<Vec<usize>> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts[..] {
        [a, b, c] => {
            let (a, b, c): (usize, usize, usize) = (a.parse()?, b.parse()?, c.parse()?);
            if c == 0 {
                bail!("step must be positive");
            }
            Ok((a..=b).step_by(c).collect())
        }
        _ => parse_list(s),
    }
}

fn parse_function(s: &str) -> Result<Vec<(Vertex, f64)>> {
    let text = match s.strip_prefix('@') {
        Some(p) => std::fs::read_to_string(p)?,
        None => s.to_string(),
    };
    let raw: Vec<(usize, Vec<i64>, f64)> = serde_json::from_str(&text).context("expected [[cell, [lat], value], ...]")?;
    Ok(raw.into_iter().map(|(c, l, v)| (Vertex::new(c, l), v)).collect())
}

fn parse_prevector(tiling: &Tiling, s: &str) -> Result<Prevector> {
    let f = parse_function(s)?;
    let coeffs = f
        .into_iter()
        .map(|(v, c)| {
            if c.fract() != 0.0 {
                bail!("prevector coefficients must be integers");
            }
            Ok((v, c as i64))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Prevector::new(tiling, coeffs)?)
}

fn tiling_cmd(c: TilingCmd) -> Result<()> {
    match c {
        TilingCmd::Validate { spec } => {
            let t = load_tiling(&spec)?;
            let mut report = json!({
                "name": t.name(),
                "dim": t.dim(),
                "cells": t.cells(),
                "degrees": t.degree,
                "exact": t.is_exact(),
                "spec_hash": t.spec.hash(),
            });
            if let Some(f) = t.family() {
                condition_a(&t, f)?;
                reflection_symmetry(&t, f)?;
                report["reflection_family"] = json!("ok");
            }
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
        TilingCmd::Build { spec, torus, open, out } => {
            let t = load_tiling(&spec)?;
            let (boundary, m) = match (torus, open) {
                (Some(m), None) => (Boundary::Torus, m),
                (None, Some(m)) => (Boundary::Open, m),
                _ => bail!("give exactly one of --torus and --open"),
            };
            let sp = build(&t, boundary, m)?;
            let g = &sp.graph;
            let summary = json!({
                "spec_hash": t.spec.hash(),
                "boundary": format!("{boundary:?}").to_lowercase(),
                "m": m,
                "vertices": g.n(),
                "edges": g.edge_count(),
                "sink": g.sink,
                "graph_hash": g.hash(),
            });
            println!("{}", serde_json::to_string_pretty(&summary)?);
            if let Some(path) = out {
                let mut w = csv::Writer::from_path(path)?;
                w.write_record(["a", "b", "multiplicity"])?;
                for (a, adj) in g.adjacency.iter().enumerate() {
                    for &(b, mult) in adj {
                        if a < b {
                            w.write_record([a.to_string(), b.to_string(), mult.to_string()])?;
                        }
                    }
                }
                w.flush()?;
            }
            Ok(())
        }
    }
}

fn print_config(sp: &Sandpile, c: &Configuration) -> Result<()> {
    println!("# graph {}", sp.graph.hash());
    println!("{}", serde_json::to_string(&c.chips)?);
    Ok(())
}

fn sandpile_cmd(c: SandpileCmd) -> Result<()> {
    match c {
        SandpileCmd::Identity(g) => {
            let (_, sp) = single_graph(&g)?;
            print_config(&sp, &sp.identity())
        }
        SandpileCmd::Stabilize { graph, config } => {
            let (_, sp) = single_graph(&graph)?;
            let text = match config.strip_prefix('@') {
                Some(p) => std::fs::read_to_string(p)?,
                None => config,
            };
            let chips: Vec<i64> = serde_json::from_str(&text).context("expected a flat JSON array")?;
            let (s, odo) = sp.stabilize(&Configuration::new(chips))?;
            print_config(&sp, &s)?;
            println!("# topplings {}", odo.iter().sum::<u64>());
            Ok(())
        }
        SandpileCmd::Order(g) => {
            let (_, sp) = single_graph(&g)?;
            println!("# graph {}", sp.graph.hash());
            println!("{}", sp.group_order());
            Ok(())
        }
    }
}

fn greens_cmd(a: GreensArgs) -> Result<()> {
    let t = load_tiling(&a.spec)?;
    let eta = FunctionOnTiling::from_pairs(parse_function(&a.eta)?);
    let deriv: Vec<usize> = match &a.deriv {
        Some(s) => parse_list(s)?,
        None => vec![],
    };
    let mut table = match (a.m, a.radius) {
        (Some(m), None) => greens_torus(&t, m, &eta)?,
        (None, Some(r)) => greens_infinite(&t, &eta, r)?,
        _ => bail!("give exactly one of --m and --radius"),
    };
    if !deriv.is_empty() {
        table = discrete_derivative(&table, &deriv);
    }
    let class = classify(&t, &eta)?.class;
    let header = Header::new(Some(t.spec.hash()), json!({"m": a.m, "radius": a.radius, "deriv": deriv, "class": class.to_string()}), None);
    let sink = Sink::new(a.out.as_deref(), a.format);
    let tag = deriv.iter().sum::<usize>().to_string();
    let d = t.dim();
    let mut cols = vec!["cell".to_string()];
    cols.extend((0..d).map(|k| format!("x{k}")));
    cols.extend(["value".into(), "deriv".into()]);
    let rows: Vec<Vec<String>> = table
        .rows()
        .into_iter()
        .map(|(v, x)| {
            let mut r = vec![v.cell.to_string()];
            r.extend(v.lat.iter().map(|l| l.to_string()));
            r.push(format!("{x:.15e}"));
            r.push(tag.clone());
            r
        })
        .collect();
    sink.emit(&header, &table, &cols, &rows)
}

fn search_options(t: &Tiling, a: &GammaArgs) -> Result<SearchOptions> {
    let mut o = SearchOptions::new(t.dim());
    o.b = a.b;
    o.r0 = a.r0;
    o.precision = a.precision;
    if let Some(l) = &a.levels {
        o.levels = parse_list(l)?;
    }
    Ok(o)
}

fn gamma_cmd(a: GammaArgs) -> Result<()> {
    let t = load_tiling(&a.spec)?;
    let family: Option<ReflectionFamily> = match &a.family {
        Some(p) => Some(serde_json::from_str(&std::fs::read_to_string(p)?).context("reading family")?),
        None => t.family().cloned(),
    };
    let opts = search_options(&t, &a)?;
    let ev = Evaluator::new(&t, &opts.levels)?;
    let js: Vec<usize> = match a.j.as_deref() {
        None => vec![0],
        Some("all") => (0..=t.dim()).collect(),
        Some(s) => parse_list(s)?,
    };
    let result = if js.iter().any(|&j| j > 0) && !js.contains(&0) {
        let fam = family.as_ref().ok_or_else(|| anyhow!("γ_j for j ≥ 1 needs a reflection family"))?;
        let entries = js.iter().map(|&j| gamma_j_search(&ev, fam, j, &opts)).collect::<tilepile_core::Result<Vec<_>>>()?;
        json!({ "gamma_j": entries })
    } else {
        let p = spectral_params(&ev, family.as_ref(), &js, &opts)?;
        let factors = if family.is_some() && js.len() > 1 { spectral_factors(&p).ok() } else { None };
        json!({ "params": p, "factors": factors })
    };
    let header = Header::new(
        Some(t.spec.hash()),
        json!({"B": opts.b, "R0": opts.r0, "levels": opts.levels, "precision": opts.precision, "j": js, "top_k": opts.top_k}),
        None,
    );
    for (label, v) in summary_lines(&result) {
        eprintln!("{label} = {v}");
    }
    Sink::new(a.out.as_deref(), Format::Json).emit(&header, &result, &[], &[])
}

fn summary_lines(v: &serde_json::Value) -> Vec<(String, String)> {
    let entries = v.pointer("/params/gamma_j").or_else(|| v.get("gamma_j"));
    entries
        .and_then(|e| e.as_array())
        .map(|a| {
            a.iter()
                .map(|e| (e["label"].as_str().unwrap_or("?").to_string(), format!("{} ± {:.1e}", e["value"], e["error"].as_f64().unwrap_or(f64::NAN))))
                .collect()
        })
        .unwrap_or_default()
}

fn default_prevector(t: &Tiling) -> Result<(Prevector, f64)> {
    let opts = SearchOptions::new(t.dim());
    let ev = Evaluator::new(t, &default_ladder(t.dim()))?;
    let p = spectral_params(&ev, None, &[0], &opts)?;
    let g0 = &p.gamma_j[0];
    Ok((g0.argmin.clone(), t.dim() as f64 / g0.value))
}

fn mixing_cmd(c: MixingCmd) -> Result<()> {
    match c {
        MixingCmd::L2 { common, steps, cap } => {
            let (sel, sp) = single_graph(&common.graph)?;
            let steps = parse_steps(&steps)?;
            let prof = l2_profile(&sp, &steps, cap)?;
            let header = Header::new(Some(sel.tiling.spec.hash()), json!({"graph": common.graph.graph, "steps": steps, "cap": cap}), Some(common.seed));
            emit_profile(&common, &header, &prof)
        }
        MixingCmd::Mc { common, steps, chains, nu } => {
            let (sel, sp) = single_graph(&common.graph)?;
            let steps = parse_steps(&steps)?;
            let obs = match &nu {
                Some(s) => gap_observables(&sp, &parse_prevector(&sel.tiling, s)?, &[vec![0; sel.tiling.dim()]])?,
                None => match DualGroup::new(&sp, 1_000_000) {
                    Ok(d) => d.gap_minimizer().into_iter().collect(),
                    Err(_) => {
                        let (p, _) = default_prevector(&sel.tiling)?;
                        gap_observables(&sp, &p, &[vec![0; sel.tiling.dim()]])?
                    }
                },
            };
            let prof = mc_mixing(&sp, &obs, &McOptions { chains, steps: steps.clone(), seed: common.seed })?;
            let header = Header::new(
                Some(sel.tiling.spec.hash()),
                json!({"graph": common.graph.graph, "steps": steps, "chains": chains, "nu": nu}),
                Some(common.seed),
            );
            emit_profile(&common, &header, &prof)
        }
        MixingCmd::Cutoff { common, chains, nu, big_gamma } => {
            let sel = parse_graph(&common.graph.graph)?;
            let t = &sel.tiling;
            let (p, g) = match &nu {
                Some(s) => {
                    let p = parse_prevector(t, s)?;
                    let g = big_gamma.ok_or_else(|| anyhow!("--nu needs --big-gamma"))?;
                    (p, g)
                }
                None => {
                    let (p, g) = default_prevector(t)?;
                    (p, big_gamma.unwrap_or(g))
                }
            };
            let opts = CutoffOptions { chains, seed: common.seed, ..Default::default() };
            let rows = cutoff_scan(t, sel.boundary, &sel.ms, &p, g, &opts)?;
            let header = Header::new(
                Some(t.spec.hash()),
                json!({"graph": common.graph.graph, "chains": chains, "big_gamma": g, "nu": p.coeffs, "checkpoints": opts.checkpoints, "horizon": opts.horizon}),
                Some(common.seed),
            );
            let cols: Vec<String> =
                ["m", "vertices", "translates", "predicted", "t_mix", "width", "ratio", "t_mix_exact", "width_exact", "ratio_exact"]
                    .map(String::from)
                    .to_vec();
            let f = |x: Option<f64>| x.map(|v| format!("{v:.6}")).unwrap_or_default();
            let csv_rows: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.m.to_string(),
                        r.vertices.to_string(),
                        r.translates.to_string(),
                        format!("{:.6}", r.predicted),
                        f(r.t_mix),
                        f(r.width),
                        f(r.ratio()),
                        f(r.t_mix_exact),
                        f(r.width_exact),
                        f(r.ratio_exact()),
                    ]
                })
                .collect();
            Sink::new(common.out.as_deref(), common.format).emit(&header, &rows, &cols, &csv_rows)
        }
    }
}

fn emit_profile(common: &MixingCommon, header: &Header, prof: &tilepile_core::mixing::MixingProfile) -> Result<()> {
    let cols: Vec<String> = tilepile_core::mixing::MixingProfile::CSV_HEADER.map(String::from).to_vec();
    let rows: Vec<Vec<String>> = prof.csv_rows().into_iter().map(|r| r.to_vec()).collect();
    Sink::new(common.out.as_deref(), common.format).emit(header, prof, &cols, &rows)
}

fn reproduce_cmd(c: ReproduceCmd) -> Result<()> {
    let mut ok = true;
    match c {
        ReproduceCmd::Periodic { precision } => {
            println!("{:<12} {:>12} {:>10} {:>12} {:>9}  result", "tiling", "computed", "error", "published", "tol");
            for (name, want, tol) in reference::PERIODIC_GAMMA {
                let tol = precision.unwrap_or(tol);
                let t = Tiling::builtin(name)?;
                let opts = SearchOptions::new(t.dim());
                let ev = Evaluator::new(&t, &opts.levels)?;
                let p = spectral_params(&ev, None, &[0], &opts)?;
                let e = &p.gamma_j[0];
                let pass = (e.value - want).abs() <= tol;
                ok &= pass;
                println!(
                    "{name:<12} {:>12.6} {:>10.1e} {want:>12.6} {tol:>9.1e}  {}",
                    e.value,
                    e.error,
                    if pass { "pass" } else { "FAIL" }
                );
            }
        }
        ReproduceCmd::D4 => {
            let t = Tiling::builtin("d4")?;
            let opts = SearchOptions::new(4);
            let ev = Evaluator::new(&t, &opts.levels)?;
            let p = spectral_params(&ev, t.family(), &[0, 1, 2, 3, 4], &opts)?;
            let f = spectral_factors(&p)?;
            println!("{:<4} {:>12} {:>12} {:>8}  result", "j", "gamma", "published", "rel");
            for (e, (want, _)) in p.gamma_j.iter().zip(reference::D4_GAMMA) {
                let rel = (e.value - want).abs() / want;
                let pass = rel <= reference::D4_REL_TOL;
                ok &= pass;
                println!("{:<4} {:>12.7} {want:>12.7} {rel:>8.4}  {}", e.j.unwrap_or(0), e.value, if pass { "pass" } else { "FAIL" });
            }
            println!("{:<4} {:>12} {:>10} {:>12} {:>8}  result", "j", "Gamma", "error", "published", "bar");
            for (fe, (want, bar)) in f.factors.iter().zip(reference::D4_BIG_GAMMA) {
                let pass = (fe.value - want).abs() <= bar + fe.error;
                ok &= pass;
                println!("{:<4} {:>12.4} {:>10.1e} {want:>12.4} {bar:>8.3}  {}", fe.j, fe.value, fe.error, if pass { "pass" } else { "FAIL" });
            }
            let g: Vec<f64> = f.factors.iter().map(|x| x.value).collect();
            let order = g.len() == 4 && g[1] > g[0] && g[0] > g[2] && g[2] > g[3];
            ok &= order;
            println!("ordering Gamma_1 > Gamma_0 > Gamma_2 > Gamma_3: {}", if order { "pass" } else { "FAIL" });
        }
    }
    if ok {
        Ok(())
    } else {
        Err(ToleranceFailure.into())
    }
}
