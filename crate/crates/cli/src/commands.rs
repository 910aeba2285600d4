use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use maviscid::analysis::{
    coercivity_probe, error_norms, format_sci, rate_table_raw, table_csv, table_markdown, verify_discrete_sobolev,
    verify_h1_bound, verify_miranda_talenti, BoundEstimate, CoercivityEstimate, RateRow,
};
use maviscid::assembly::{CofactorField, PenaltyParams};
use maviscid::cases::{Gaussian, Sweep};
use maviscid::experiment::{build_space, run_sweep, solve_point};
use maviscid::solve::NewtonConfig;
use maviscid::space::{interpolate, AnalyticFunction, FeFunction};

use crate::{settings, CliError, Format, RunArgs, VerifyArgs};

/// Points per axis of the sampling grids.
const GRID: usize = 101;
const SLICES: [f64; 3] = [0.25, 0.5, 0.75];

fn prepare_out(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Usage(format!("cannot create {}: {e}", dir.display())))
}

fn write(path: PathBuf, text: &str) -> Result<PathBuf, CliError> {
    fs::write(&path, text).map_err(|e| CliError::Failure(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

fn rate_rows(rows: &[(f64, [f64; 3])]) -> Result<Vec<RateRow>, CliError> {
    if rows.len() >= 2 {
        return Ok(rate_table_raw(rows)?);
    }
    Ok(rows.iter().map(|&(parameter, errors)| RateRow { parameter, errors, orders: [None; 3] }).collect())
}

fn write_tables(out: &Path, stem: &str, label: &str, rows: &[RateRow], formats: &[Format]) -> Result<(), CliError> {
    for f in formats {
        match f {
            Format::Csv => write(out.join(format!("{stem}.csv")), &table_csv(label, rows))?,
            Format::Md => write(out.join(format!("{stem}.md")), &table_markdown(label, rows))?,
        };
    }
    Ok(())
}

pub fn convergence(a: &RunArgs) -> Result<(), CliError> {
    let spec = settings::experiment(a)?;
    if spec.case.exact().is_none() {
        return Err(CliError::Usage(format!("case {} has no exact solution; use `solve`", spec.id())));
    }
    let label = match spec.sweep {
        Sweep::MeshSize => {
            if spec.n_list.windows(2).any(|w| w[1] <= w[0]) {
                return Err(CliError::Usage("mesh sizes must be strictly decreasing".into()));
            }
            "h"
        }
        Sweep::Epsilon => "eps",
    };
    prepare_out(&a.out)?;
    for &k in &spec.degrees {
        let stem = format!("convergence_{}_k{k}", spec.id());
        let mut raw = Vec::new();
        let mut write_error = None;
        let result = run_sweep(&spec, k, &NewtonConfig::default(), |r| {
            let e = r.norms.expect("case has an exact solution");
            raw.push((r.parameter, [e.l2, e.h1, e.h2_broken]));
            eprintln!("k = {k}, n = {}, eps = {:e}: {} Newton steps", r.n, r.epsilon, r.report.iterations);
            // flushed per row so a failing sweep leaves its partial table
            let flushed = rate_rows(&raw).and_then(|t| write_tables(&a.out, &stem, label, &t, &a.format));
            if let Err(e) = flushed {
                write_error.get_or_insert(e);
            }
        });
        if let Some(e) = write_error {
            return Err(e);
        }
        if !raw.is_empty() {
            println!("case {}, degree {k}\n\n{}", spec.id(), table_markdown(label, &rate_rows(&raw)?));
        }
        result?;
    }
    Ok(())
}

fn sample_line(u: &FeFunction, x: &[f64; 3]) -> f64 {
    u.value_at(x).unwrap_or(f64::NAN)
}

/// `a,b,u` rows over the unit square, `point(a, b)` giving the sample
/// location. A blank line ends each scanline for gnuplot.
fn grid_csv(u: &FeFunction, names: [&str; 2], point: impl Fn(f64, f64) -> [f64; 3]) -> String {
    let mut s = format!("{},{},u\n", names[0], names[1]);
    for i in 0..GRID {
        let a = i as f64 / (GRID - 1) as f64;
        for j in 0..GRID {
            let b = j as f64 / (GRID - 1) as f64;
            let _ = writeln!(s, "{a},{b},{:e}", sample_line(u, &point(a, b)));
        }
        s.push('\n');
    }
    s
}

fn dof_dump(u: &FeFunction) -> String {
    let dim = u.space().dim();
    let mut s = String::new();
    for (x, v) in u.space().dof_coords().iter().zip(u.coefficients()) {
        for c in &x[..dim] {
            let _ = write!(s, "{c} ");
        }
        let _ = writeln!(s, "{v:e}");
    }
    s
}

pub fn solve(a: &RunArgs) -> Result<(), CliError> {
    let spec = settings::experiment(a)?;
    let ([k], [n], [eps]) = (&spec.degrees[..], &spec.n_list[..], &spec.eps_list[..]) else {
        return Err(CliError::Usage("solve needs exactly one degree, one mesh size and one epsilon".into()));
    };
    prepare_out(&a.out)?;
    let (u, report) = solve_point(&spec, *k, *n, *eps, &NewtonConfig::default())?;
    let c = u.coefficients();
    let min = c.iter().copied().fold(f64::INFINITY, f64::min);
    let max = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    println!("case {}, dim {}, degree {k}, n = {n}, eps = {eps:e}", spec.id(), spec.dim());
    let residual = report.residual_history.last().copied().unwrap_or(0.0);
    println!("dofs {}, Newton steps {}, final residual {}", u.space().num_dofs(), report.iterations, format_sci(residual));
    println!("u_h in [{}, {}]", format_sci(min), format_sci(max));
    if let Some(exact) = spec.case.exact() {
        let e = error_norms(exact.as_ref(), &u)?;
        println!("errors L2 {} H1 {} H2(T_h) {}", format_sci(e.l2), format_sci(e.h1), format_sci(e.h2_broken));
    }
    let id = spec.id();
    let mut written = vec![write(a.out.join(format!("solution_{id}.txt")), &dof_dump(&u))?];
    if spec.dim() == 2 {
        written.push(write(a.out.join(format!("grid_{id}.csv")), &grid_csv(&u, ["x", "y"], |x, y| [x, y, 0.0]))?);
    } else {
        for p in SLICES {
            let sx = grid_csv(&u, ["y", "z"], |y, z| [p, y, z]);
            written.push(write(a.out.join(format!("slice_{id}_x{p}.csv")), &sx)?);
            let sy = grid_csv(&u, ["x", "z"], |x, z| [x, p, z]);
            written.push(write(a.out.join(format!("slice_{id}_y{p}.csv")), &sy)?);
        }
    }
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

struct Level {
    n: usize,
    mt: BoundEstimate,
    sobolev: BoundEstimate,
    h1: BoundEstimate,
    coercivity: Vec<(f64, CoercivityEstimate)>,
}

fn growth_failures(levels: &[Level], name: &str, get: impl Fn(&Level) -> BoundEstimate) -> Vec<String> {
    levels
        .windows(2)
        .filter_map(|w| {
            let (a, b) = (get(&w[0]), get(&w[1]));
            let r = b.max_ratio / a.max_ratio;
            (!(r <= 1.5)).then(|| {
                format!(
                    "{name} constant grew {r:.2}x from level n = {} to n = {} (limit 1.5x, worst seed {})",
                    w[0].n, w[1].n, b.worst_seed
                )
            })
        })
        .collect()
}

fn verify_tables(levels: &[Level], eps_list: &[f64]) -> (String, String) {
    let mut head = vec!["level".to_string()];
    for c in ["miranda_talenti", "sobolev", "h1"] {
        head.push(c.into());
        head.push(format!("{c}_seed"));
    }
    for e in eps_list {
        head.push(format!("coercivity_min_eps{e}"));
        head.push(format!("nonpositive_eps{e}"));
    }
    let mut csv = head.join(",") + "\n";
    let mut md = format!("| {} |\n|{}\n", head.join(" | "), "---|".repeat(head.len()));
    for l in levels {
        let mut cells = vec![format!("1/{}", l.n)];
        for b in [l.mt, l.sobolev, l.h1] {
            cells.push(format_sci(b.max_ratio));
            cells.push(b.worst_seed.to_string());
        }
        for (_, c) in &l.coercivity {
            cells.push(format_sci(c.min_ratio));
            cells.push(c.negative.to_string());
        }
        csv += &(cells.join(",") + "\n");
        md += &format!("| {} |\n", cells.join(" | "));
    }
    (csv, md)
}

pub fn verify(v: &VerifyArgs) -> Result<(), CliError> {
    let s = settings::verify(&v.run)?;
    if v.samples == 0 {
        return Err(CliError::Usage("--samples must be positive".into()));
    }
    let seed = v.run.seed;
    let gauss = Gaussian { dim: s.dim };
    let mut levels = Vec::new();
    for &n in &s.levels {
        let space = build_space(s.dim, n, s.degree)?;
        let ui = interpolate(&space, &|x: &[f64]| gauss.value(x));
        let mut coercivity = Vec::new();
        for &eps in &s.eps_list {
            let params = PenaltyParams::new(s.sigma, eps, &s.weight_mode)?;
            coercivity.push((eps, coercivity_probe(&space, &CofactorField { u: &ui }, &params, v.samples, seed)?));
        }
        levels.push(Level {
            n,
            mt: verify_miranda_talenti(&space, v.samples, seed)?,
            sobolev: verify_discrete_sobolev(&space, v.samples, seed)?,
            h1: verify_h1_bound(&space, v.samples, seed)?,
            coercivity,
        });
    }

    let mut failures = Vec::new();
    for l in &levels {
        if l.mt.violations > 0 {
            failures.push(format!(
                "Miranda-Talenti inequality ||D2 v|| <= ||lap v|| broken by {} jump-free samples at level n = {} (worst seed {})",
                l.mt.violations, l.n, l.mt.worst_seed
            ));
        }
        for (eps, c) in &l.coercivity {
            if c.negative > 0 {
                failures.push(format!(
                    "coercivity A(v,v) > 0 broken by {} of {} samples at level n = {}, eps = {eps} (min A(v,v) = {}, worst seed {})",
                    c.negative, c.samples, l.n, format_sci(c.min_value), c.worst_seed
                ));
            }
        }
    }
    failures.extend(growth_failures(&levels, "discrete Miranda-Talenti", |l| l.mt));
    failures.extend(growth_failures(&levels, "discrete Sobolev", |l| l.sobolev));
    failures.extend(growth_failures(&levels, "H1 bound", |l| l.h1));

    let (csv, md) = verify_tables(&levels, &s.eps_list);
    println!(
        "dim {}, degree {}, sigma {}, weight mode {}, {} samples, seed {seed}\n\n{md}",
        s.dim, s.degree, s.sigma, s.weight_mode, v.samples
    );
    prepare_out(&v.run.out)?;
    for f in &v.run.format {
        match f {
            Format::Csv => write(v.run.out.join("verify.csv"), &csv)?,
            Format::Md => write(v.run.out.join("verify.md"), &md)?,
        };
    }
    if failures.is_empty() {
        println!("all checks passed");
        return Ok(());
    }
    for f in &failures {
        println!("FAIL {f}");
    }
    Err(CliError::Failure(format!("{} verification checks failed", failures.len())))
}
