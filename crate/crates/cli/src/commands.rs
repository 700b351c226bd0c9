//! Subcommand dispatch: builds a sweep table per command and emits it.

use crate::config::{self, fmt, Cli, Command, CommonArgs, FileValues, ResolvedCommon, SliceKind};
use crate::output;
use anyhow::{anyhow, Result};
use lgsf::dynamics::{self, Section};
use lgsf::equilibria::{self, CaseSubcase};
use lgsf::geometry;
use lgsf::model::State;
use lgsf::stability::{self, Classification, HopfBranch};
use lgsf::sweep::{Cell, SweepTable};
use lgsf::{blowup, criticality, loci};

/// Failures that indicate bad input rather than a numerical breakdown.
struct InvalidInput(anyhow::Error);

pub fn run(cli: Cli) -> i32 {
    let outcome = match &cli.command {
        Command::Equilibria { common } => with_common(common, "equilibria", cmd_equilibria),
        Command::Stability { common } => with_common(common, "stability", cmd_stability),
        Command::SigmaGrid {
            common,
            slice,
            range1_min,
            range1_max,
            range2_min,
            range2_max,
            n1,
            n2,
        } => with_common(common, "sigma-grid", |rc, echo| {
            let file = FileValues::load(common.config.as_ref()).map_err(InvalidInput)?;
            let slice = slice.unwrap_or(SliceKind::FixedM);
            let defaults = match slice {
                SliceKind::FixedM => ((0.1, 0.9), (0.0, 0.3)),
                SliceKind::FixedA => ((0.0, 0.3), (-0.9, -0.05)),
            };
            let r1 = (
                pick(*range1_min, &file, "range1_min", defaults.0 .0)?,
                pick(*range1_max, &file, "range1_max", defaults.0 .1)?,
            );
            let r2 = (
                pick(*range2_min, &file, "range2_min", defaults.1 .0)?,
                pick(*range2_max, &file, "range2_max", defaults.1 .1)?,
            );
            let n1 = pick_usize(*n1, &file, "n1", 41)?;
            let n2 = pick_usize(*n2, &file, "n2", 41)?;
            let kind = match slice {
                SliceKind::FixedM => criticality::SigmaSlice::FixedM { m: rc.params.m },
                SliceKind::FixedA => criticality::SigmaSlice::FixedA { a: rc.params.a },
            };
            echo.push((
                "slice".into(),
                match slice {
                    SliceKind::FixedM => "fixed-m".into(),
                    SliceKind::FixedA => "fixed-a".into(),
                },
            ));
            for (k, v) in [
                ("range1_min", r1.0),
                ("range1_max", r1.1),
                ("range2_min", r2.0),
                ("range2_max", r2.1),
            ] {
                echo.push((k.into(), fmt(v)));
            }
            echo.push(("n1".into(), n1.to_string()));
            echo.push(("n2".into(), n2.to_string()));
            Ok(criticality::sigma_grid(kind, r1, r2, n1, n2))
        }),
        Command::Sweep {
            common,
            delta_min,
            delta_max,
            n_deltas,
        } => with_common(common, "sweep", |rc, echo| {
            let file = FileValues::load(common.config.as_ref()).map_err(InvalidInput)?;
            let lo = pick(*delta_min, &file, "delta_min", 1e-3)?;
            let hi = pick(*delta_max, &file, "delta_max", 0.08)?;
            let n = pick_usize(*n_deltas, &file, "n_deltas", 13)?;
            if !(lo > 0.0 && hi > lo && n >= 2) {
                return Err(InvalidInput(anyhow!("need 0 < delta_min < delta_max and n >= 2")).into());
            }
            echo.push(("delta_min".into(), fmt(lo)));
            echo.push(("delta_max".into(), fmt(hi)));
            echo.push(("n_deltas".into(), n.to_string()));
            let deltas: Vec<f64> = (0..n)
                .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
                .collect();
            let recs = dynamics::canard_sweep(rc.params.a, rc.params.m, rc.params.eps, &deltas)
                .map_err(|e| anyhow!("{e}"))?;
            let mut t = SweepTable::new(
                ["delta", "Q", "amplitude_u", "period", "passes_through_TC", "status"]
                    .iter()
                    .map(|s| s.to_string())
                    .collect(),
            );
            for r in recs {
                match r.result {
                    Ok(c) => t.push_row(vec![
                        Cell::Num(r.delta),
                        Cell::Num(r.q),
                        Cell::Num(c.amplitude_u),
                        Cell::Num(c.period),
                        Cell::Bool(c.passes_through_tc),
                        Cell::Text("ok".into()),
                    ]),
                    Err(e) => t.push_row(vec![
                        Cell::Num(r.delta),
                        Cell::Num(r.q),
                        Cell::Missing,
                        Cell::Missing,
                        Cell::Missing,
                        Cell::Text(e),
                    ]),
                }
            }
            Ok(t)
        }),
        Command::Simulate { common, u0, v0, t_end } => with_common(common, "simulate", |rc, echo| {
            let file = FileValues::load(common.config.as_ref()).map_err(InvalidInput)?;
            let u0 = pick(*u0, &file, "u0", 0.5)?;
            let v0 = pick(*v0, &file, "v0", 0.3)?;
            let t_end = pick(*t_end, &file, "t_end", 100.0)?;
            echo.push(("u0".into(), fmt(u0)));
            echo.push(("v0".into(), fmt(v0)));
            echo.push(("t_end".into(), fmt(t_end)));
            let traj = dynamics::integrate(&rc.params, State::new(u0, v0), t_end, rc.tol)
                .map_err(|e| anyhow!("{e}"))?;
            let mut t = SweepTable::new(vec!["t".into(), "u".into(), "v".into()]);
            for (time, s) in traj.times.iter().zip(&traj.states) {
                t.push_row(vec![Cell::Num(*time), Cell::Num(s.u), Cell::Num(s.v)]);
            }
            Ok(t)
        }),
        Command::Cycle {
            common,
            u0,
            v0,
            max_returns,
        } => with_common(common, "cycle", |rc, echo| {
            let file = FileValues::load(common.config.as_ref()).map_err(InvalidInput)?;
            let e1 = equilibria::solve_positive_equilibria(&rc.params)
                .last()
                .copied()
                .ok_or_else(|| anyhow!("no positive equilibrium to anchor the section"))?;
            let u0 = pick(*u0, &file, "u0", e1.u + 0.05)?;
            let v0 = pick(*v0, &file, "v0", e1.v)?;
            let max_returns = pick_usize(*max_returns, &file, "max_returns", 400)?;
            echo.push(("u0".into(), fmt(u0)));
            echo.push(("v0".into(), fmt(v0)));
            echo.push(("section_u".into(), fmt(e1.u)));
            echo.push(("max_returns".into(), max_returns.to_string()));
            let cycle = dynamics::find_limit_cycle(
                &rc.params,
                Section::UConst(e1.u),
                State::new(u0, v0),
                max_returns,
            )
            .map_err(|e| anyhow!("{e}"))?;
            echo.push(("period".into(), fmt(cycle.period)));
            echo.push(("amplitude_u".into(), fmt(cycle.amplitude_u)));
            echo.push(("floquet_proxy".into(), fmt(cycle.floquet_proxy)));
            echo.push((
                "stability".into(),
                format!("{:?}", cycle.stability).to_lowercase(),
            ));
            let mut t = SweepTable::new(vec!["u".into(), "v".into()]);
            for s in &cycle.points {
                t.push_row(vec![Cell::Num(s.u), Cell::Num(s.v)]);
            }
            Ok(t)
        }),
        Command::EntryExit { common, n } => with_common(common, "entry-exit", |rc, echo| {
            let file = FileValues::load(common.config.as_ref()).map_err(InvalidInput)?;
            let n = pick_usize(*n, &file, "n", 200)?;
            let p = &rc.params;
            let fp = geometry::fold_point(p);
            let exit = geometry::solve_exit_point(p, fp.v_p).map_err(|e| anyhow!("{e}"))?;
            echo.push(("v_p".into(), fmt(fp.v_p)));
            echo.push(("v_exit".into(), fmt(exit.v0)));
            echo.push(("i_residual".into(), fmt(exit.i_residual)));
            let mut t = SweepTable::new(vec!["kind".into(), "v0".into(), "I".into()]);
            let (lo, hi) = (p.c / p.q, -p.a * p.m);
            for i in 1..n {
                let v0 = lo + (hi - lo) * i as f64 / n as f64;
                match geometry::entry_exit_i(p, fp.v_p, v0) {
                    Ok(val) => t.push_row(vec![
                        Cell::Text("sample".into()),
                        Cell::Num(v0),
                        Cell::Num(val),
                    ]),
                    Err(_) => t.push_row(vec![Cell::Text("sample".into()), Cell::Num(v0), Cell::Missing]),
                }
            }
            t.push_row(vec![
                Cell::Text("root".into()),
                Cell::Num(exit.v0),
                Cell::Num(exit.i_residual),
            ]);
            Ok(t)
        }),
        Command::BlowupVerify { common } => with_common(common, "blowup-verify", |rc, _echo| {
            let rep = blowup::verify_propositions(&rc.params).map_err(|e| anyhow!("{e}"))?;
            let mut t = SweepTable::new(vec![
                "check".into(),
                "passed".into(),
                "measured".into(),
                "expected".into(),
            ]);
            for c in rep.checks {
                t.push_row(vec![
                    Cell::Text(c.name.to_string()),
                    Cell::Bool(c.passed),
                    Cell::Num(c.measured),
                    Cell::Num(c.expected),
                ]);
            }
            Ok(t)
        }),
        Command::Loci { common, c_min, c_max, n } => with_common(common, "loci", |rc, echo| {
            let file = FileValues::load(common.config.as_ref()).map_err(InvalidInput)?;
            let c_min = pick(*c_min, &file, "c_min", 0.0)?;
            let c_max = pick(*c_max, &file, "c_max", 0.25)?;
            let n = pick_usize(*n, &file, "n", 200)?;
            if n < 2 {
                return Err(InvalidInput(anyhow!("need n >= 2")).into());
            }
            echo.push(("c_min".into(), fmt(c_min)));
            echo.push(("c_max".into(), fmt(c_max)));
            echo.push(("n".into(), n.to_string()));
            let (a, m, eps) = (rc.params.a, rc.params.m, rc.params.eps);
            let hopf = loci::hopf_curve(a, m, eps, (c_min, c_max), n);
            let fold = loci::fold_curve(a, m, (c_min.max(1e-6), c_max), n);
            let mut t = SweepTable::new(vec![
                "curve".into(),
                "C".into(),
                "Q".into(),
                "u".into(),
                "v".into(),
                "det_sign".into(),
                "status".into(),
            ]);
            for (idx, row) in hopf.rows.iter().enumerate() {
                let _ = idx;
                let mut cells = vec![Cell::Text("hopf".into())];
                cells.extend(row.iter().cloned());
                t.push_row(cells);
            }
            for row in &fold.rows {
                let mut cells = vec![Cell::Text("fold".into())];
                cells.extend(row[..4].iter().cloned());
                cells.push(Cell::Missing);
                cells.push(row[4].clone());
                t.push_row(cells);
            }
            if let Ok(cp) = loci::cusp_point(a, m) {
                t.push_row(vec![
                    Cell::Text("cusp".into()),
                    Cell::Num(cp.c),
                    Cell::Num(cp.q),
                    Cell::Num(cp.u),
                    Cell::Num(cp.v),
                    Cell::Missing,
                    Cell::Text("ok".into()),
                ]);
            }
            if let Some((u, c, q)) = loci::bt_point_forward(a, m, eps) {
                let p0 = lgsf::ModelParams::new(a, m, c, q, eps).map_err(|e| anyhow!("{e}"))?;
                t.push_row(vec![
                    Cell::Text("takens-bogdanov".into()),
                    Cell::Num(c),
                    Cell::Num(q),
                    Cell::Num(u),
                    Cell::Num(geometry::h(&p0, u)),
                    Cell::Missing,
                    Cell::Text("ok".into()),
                ]);
            }
            Ok(t)
        }),
        Command::TbCheck { common, u1 } => with_common(common, "tb-check", |rc, echo| {
            let file = FileValues::load(common.config.as_ref()).map_err(InvalidInput)?;
            let u1 = match pick_opt(*u1, &file, "u1")? {
                Some(u) => u,
                None => return Err(InvalidInput(anyhow!("missing --u1")).into()),
            };
            echo.push(("u1".into(), fmt(u1)));
            let tb = loci::tb_point(rc.params.c, rc.params.q, rc.params.eps, u1)
                .map_err(|e| anyhow!("{e}"))?;
            let (tr, det) = tb.back_substitution();
            let pass = tr.abs() <= 1e-8 && det.abs() <= 1e-8;
            let mut t = SweepTable::new(vec!["name".into(), "value".into()]);
            t.push_row(vec![Cell::Text("A_star".into()), Cell::Num(tb.a_star)]);
            t.push_row(vec![Cell::Text("M_star".into()), Cell::Num(tb.m_star)]);
            t.push_row(vec![Cell::Text("trace_defect".into()), Cell::Num(tr)]);
            t.push_row(vec![Cell::Text("det_defect".into()), Cell::Num(det)]);
            t.push_row(vec![
                Cell::Text("status".into()),
                Cell::Text(if pass { "PASS".into() } else { "FAIL".into() }),
            ]);
            Ok(t)
        }),
    };

    match outcome {
        Ok(()) => 0,
        Err(RunError::Invalid(e)) => {
            eprintln!("error: {e:#}");
            2
        }
        Err(RunError::Numerical(e)) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

enum RunError {
    Invalid(anyhow::Error),
    Numerical(anyhow::Error),
}

impl From<anyhow::Error> for RunError {
    fn from(e: anyhow::Error) -> Self {
        RunError::Numerical(e)
    }
}

impl From<InvalidInput> for RunError {
    fn from(e: InvalidInput) -> Self {
        RunError::Invalid(e.0)
    }
}

fn with_common<F>(common: &CommonArgs, name: &str, body: F) -> Result<(), RunError>
where
    F: FnOnce(&ResolvedCommon, &mut Vec<(String, String)>) -> Result<SweepTable, RunError>,
{
    let rc = config::resolve_common(common).map_err(RunError::Invalid)?;
    if let Some(t) = rc.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let mut echo = rc.echo.clone();
    let table = body(&rc, &mut echo)?;
    output::emit(name, rc.format, &echo, &table, rc.out.as_deref())
        .map_err(RunError::Numerical)?;
    Ok(())
}

fn pick(flag: Option<f64>, file: &FileValues, key: &str, default: f64) -> Result<f64, RunError> {
    Ok(flag
        .or(file.f64(key).map_err(InvalidInput)?)
        .unwrap_or(default))
}

fn pick_opt(flag: Option<f64>, file: &FileValues, key: &str) -> Result<Option<f64>, RunError> {
    Ok(flag.or(file.f64(key).map_err(InvalidInput)?))
}

fn pick_usize(
    flag: Option<usize>,
    file: &FileValues,
    key: &str,
    default: usize,
) -> Result<usize, RunError> {
    Ok(flag
        .or(file.usize(key).map_err(InvalidInput)?)
        .unwrap_or(default))
}

fn cmd_equilibria(rc: &ResolvedCommon, echo: &mut Vec<(String, String)>) -> Result<SweepTable, RunError> {
    let p = &rc.params;
    let label = equilibria::classify_case(p);
    echo.push(("case".into(), subcase_name(label.subcase).into()));
    echo.push(("max_count".into(), label.max_count.to_string()));
    let branch = if p.is_degenerate() {
        HopfBranch::Degenerate
    } else {
        HopfBranch::Generic
    };
    if let Ok(hp) = stability::hopf_threshold(p.a, p.m, p.c, p.eps, branch) {
        echo.push(("Q_H".into(), fmt(hp.q)));
    }
    let degenerate_cols = p.is_degenerate();
    let mut columns = vec![
        "kind".to_string(),
        "u".to_string(),
        "v".to_string(),
        "residual".to_string(),
        "multiplicity".to_string(),
        "classification".to_string(),
    ];
    if degenerate_cols {
        columns.push("U1_closed_form".into());
        columns.push("U2_closed_form".into());
    }
    let mut t = SweepTable::new(columns);
    let pair = if degenerate_cols {
        equilibria::degenerate_pair(p).ok()
    } else {
        None
    };
    for e in equilibria::solve_positive_equilibria(p) {
        let rep = stability::classify_equilibrium(p, &e);
        let mut row = vec![
            Cell::Text(format!("{:?}", e.kind)),
            Cell::Num(e.u),
            Cell::Num(e.v),
            Cell::Num(e.residual),
            Cell::Num(e.multiplicity as f64),
            Cell::Text(classification_name(rep.classification).into()),
        ];
        if degenerate_cols {
            match pair {
                Some((u1, u2)) => {
                    row.push(Cell::Num(u1));
                    row.push(Cell::Num(u2));
                }
                None => {
                    row.push(Cell::Missing);
                    row.push(Cell::Missing);
                }
            }
        }
        t.push_row(row);
    }
    Ok(t)
}

fn cmd_stability(rc: &ResolvedCommon, _echo: &mut Vec<(String, String)>) -> Result<SweepTable, RunError> {
    let p = &rc.params;
    let mut t = SweepTable::new(vec![
        "kind".into(),
        "u".into(),
        "v".into(),
        "trace".into(),
        "det".into(),
        "J11".into(),
        "classification".into(),
        "Q_H".into(),
    ]);
    for e in equilibria::solve_positive_equilibria(p) {
        let rep = stability::classify_equilibrium(p, &e);
        t.push_row(vec![
            Cell::Text(format!("{:?}", e.kind)),
            Cell::Num(e.u),
            Cell::Num(e.v),
            Cell::Num(rep.trace),
            Cell::Num(rep.det),
            Cell::Num(rep.j11),
            Cell::Text(classification_name(rep.classification).into()),
            match rep.q_hopf {
                Some(q) => Cell::Num(q),
                None => Cell::Missing,
            },
        ]);
    }
    Ok(t)
}

fn subcase_name(s: CaseSubcase) -> &'static str {
    match s {
        CaseSubcase::Case1a => "1a",
        CaseSubcase::Case1b => "1b",
        CaseSubcase::Case2a => "2a",
        CaseSubcase::Case2b => "2b",
        CaseSubcase::Case2c => "2c",
        CaseSubcase::Case3a => "3a",
        CaseSubcase::Case3b => "3b",
    }
}

fn classification_name(c: Classification) -> &'static str {
    match c {
        Classification::StableNode => "stable_node",
        Classification::UnstableNode => "unstable_node",
        Classification::LinearCenter => "linear_center",
        Classification::Saddle => "saddle",
    }
}
