//! CSV and JSON output with reproducibility metadata.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::problem::{
    ProblemSpec, COMPATIBILITY_TOLERANCE, FEATURE_TOLERANCE, ZERO_SET_TOLERANCE,
};
use crate::solver::{SolutionField, CURVE_THRESHOLD, SINGULAR_THRESHOLD};

/// Comment line written above every CSV header.
pub fn metadata_line(spec: &ProblemSpec, extra: &[(&str, String)]) -> String {
    let mut line = format!(
        "# spec_sha256={} n_alpha={} singular_threshold={SINGULAR_THRESHOLD:e} curve_threshold={CURVE_THRESHOLD:e} \
         compatibility_tol={COMPATIBILITY_TOLERANCE:e} zero_tol={ZERO_SET_TOLERANCE:e} feature_tol={FEATURE_TOLERANCE:e}",
        spec.hash(),
        spec.n_alpha
    );
    for (k, v) in extra {
        line.push(' ');
        line.push_str(k);
        line.push('=');
        line.push_str(v);
    }
    line
}

/// Creates `path` and writes the metadata line followed by whatever `body` emits.
pub fn write_csv_file(
    path: &Path,
    spec: &ProblemSpec,
    extra: &[(&str, String)],
    body: impl FnOnce(&mut dyn Write) -> io::Result<()>,
) -> io::Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{}", metadata_line(spec, extra))?;
    body(&mut w)?;
    w.flush()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    fs::write(path, text + "\n")
}

/// Gnuplot script drawing `field.csv` as a surface with masked samples left out.
pub fn gnuplot_surface_script(csv_name: &str, title: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set title '{title}'\n\
         set xlabel 'alpha'\n\
         set ylabel 't'\n\
         set zlabel 'u'\n\
         set hidden3d\n\
         set ticslevel 0\n\
         splot '{csv_name}' every ::2 using 1:2:($4 == 0 ? $3 : NaN) with lines notitle\n"
    )
}

/// Field CSV plus, when requested, a gnuplot script next to it.
pub fn write_field(
    dir: &Path,
    stem: &str,
    spec: &ProblemSpec,
    field: &SolutionField,
    plot: bool,
) -> io::Result<()> {
    let csv = format!("{stem}.csv");
    let extra = [
        ("n_t", field.n_t().to_string()),
        ("grid_alpha", field.n_alpha().to_string()),
    ];
    write_csv_file(&dir.join(&csv), spec, &extra, |w| field.write_csv(w))?;
    if plot {
        fs::write(dir.join(format!("{stem}.gp")), gnuplot_surface_script(&csv, stem))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn metadata_names_hash_and_tolerances() {
        let s = catalog::example2(65);
        let line = metadata_line(&s, &[("dt", "0.001".into())]);
        assert!(line.starts_with("# spec_sha256="));
        assert!(line.contains(&s.hash()));
        assert!(line.contains("singular_threshold=1e-8"));
        assert!(line.ends_with("dt=0.001"));
    }
}
