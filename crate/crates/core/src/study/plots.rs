//! Gnuplot scripts for log-log error plots. The script is written, never
//! executed; output is a pure function of the CSV contents.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::norms::least_squares_slope;
use crate::study::run::CSV_HEADER;
use crate::{Error, Result};

/// Norm columns plotted, with their CSV column (1-based for gnuplot).
const NORMS: [(&str, usize); 4] = [("l2", 9), ("h1_broken", 10), ("normA", 11), ("normB", 12)];

struct Series {
    h: Vec<f64>,
    errors: [Vec<Option<f64>>; 4],
}

fn parse(path: &Path) -> Result<BTreeMap<usize, Series>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).context(format!("reading {}", path.display())))?;
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::InvalidArgument(format!("{} does not have the study CSV header", path.display())));
    }
    let mut by_p: BTreeMap<usize, Series> = BTreeMap::new();
    for (ln, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        let bad = || Error::InvalidArgument(format!("{}:{}: malformed row", path.display(), ln + 2));
        if f.len() != 15 {
            return Err(bad());
        }
        let p: usize = f[2].parse().map_err(|_| bad())?;
        let h: f64 = f[4].parse().map_err(|_| bad())?;
        let s = by_p.entry(p).or_insert_with(|| Series { h: Vec::new(), errors: Default::default() });
        s.h.push(h);
        for (k, (_, col)) in NORMS.iter().enumerate() {
            s.errors[k].push(f[col - 1].parse().ok());
        }
    }
    Ok(by_p)
}

fn finest_slope(h: &[f64], e: &[Option<f64>]) -> Option<f64> {
    let mut pts: Vec<(f64, f64)> = h.iter().zip(e).filter_map(|(h, e)| e.filter(|v| *v > 0.0).map(|e| (*h, e))).collect();
    pts.sort_by(|a, b| b.0.total_cmp(&a.0));
    if pts.len() < 3 {
        return None;
    }
    let fine = &pts[pts.len() - 3..];
    let (hs, es): (Vec<f64>, Vec<f64>) = fine.iter().copied().unzip();
    Some(least_squares_slope(&hs, &es))
}

/// Builds the script text: one figure per CSV and norm, one curve per
/// degree, with a reference slope triangle and the fitted slope as label.
pub fn plot_script(csv_paths: &[PathBuf]) -> Result<String> {
    let mut s = String::new();
    writeln!(s, "# log-log error plots").unwrap();
    writeln!(s, "set datafile separator ','").unwrap();
    writeln!(s, "set logscale xy").unwrap();
    writeln!(s, "set format xy '%.0e'").unwrap();
    writeln!(s, "set key left top").unwrap();
    writeln!(s, "set terminal pngcairo size 800,600").unwrap();
    for path in csv_paths {
        let series = parse(path)?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("study");
        let file = path.display().to_string().replace('\'', "''");
        for (k, (norm, col)) in NORMS.iter().enumerate() {
            writeln!(s, "\nreset session").unwrap();
            writeln!(s, "set datafile separator ','\nset logscale xy\nset key left top\nset terminal pngcairo size 800,600").unwrap();
            writeln!(s, "set output '{stem}_{norm}.png'").unwrap();
            writeln!(s, "set title '{stem}: {norm} error'").unwrap();
            writeln!(s, "set xlabel 'h'\nset ylabel '{norm}'").unwrap();
            let mut plots = Vec::new();
            let mut label = 1;
            for (p, ser) in &series {
                if let Some(slope) = finest_slope(&ser.h, &ser.errors[k]) {
                    let (hmin, i) = ser.h.iter().enumerate().fold((f64::INFINITY, 0), |a, (i, h)| if *h < a.0 { (*h, i) } else { a });
                    if let Some(e) = ser.errors[k][i] {
                        let (h0, h1) = (hmin, 2.0 * hmin);
                        let (e0, e1) = (0.5 * e, 0.5 * e * 2f64.powf(slope.round()));
                        writeln!(s, "set arrow from {h0:e},{e0:e} to {h1:e},{e0:e} nohead").unwrap();
                        writeln!(s, "set arrow from {h1:e},{e0:e} to {h1:e},{e1:e} nohead").unwrap();
                        writeln!(s, "set arrow from {h0:e},{e0:e} to {h1:e},{e1:e} nohead dt 2").unwrap();
                        writeln!(s, "set label {label} 'p={p}: slope {slope:.2}' at {h1:e},{e1:e} offset 1,0").unwrap();
                        label += 1;
                    }
                }
                plots.push(format!("'{file}' skip 1 using ($3=={p} ? $5 : 1/0):{col} with linespoints title 'p={p}'"));
            }
            if plots.is_empty() {
                writeln!(s, "# no data").unwrap();
            } else {
                writeln!(s, "plot {}", plots.join(", \\\n     ")).unwrap();
            }
            writeln!(s, "unset output").unwrap();
        }
    }
    Ok(s)
}

pub fn emit_plots(csv_paths: &[PathBuf], script: &Path) -> Result<()> {
    if csv_paths.is_empty() {
        return Err(Error::InsufficientData("no CSV files given".into()));
    }
    std::fs::write(script, plot_script(csv_paths)?)?;
    Ok(())
}
