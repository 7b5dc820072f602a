//! CSV output with a stable schema.
//!
//! All floating-point values are written in scientific notation with 17
//! significant digits, enough to round-trip an IEEE double exactly, so a
//! rerun with identical inputs produces byte-identical files.

use std::io::Write;

use recbayes::sim::{RunReport, Trajectory};

use crate::CliError;

/// 17-significant-digit rendering of a double.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Trajectory table: one row per step `0..=horizon`; controls and
/// measurements are attached to the step they produced (blank on row 0).
pub fn write_trajectory(out: &mut impl Write, t: &Trajectory) -> Result<(), CliError> {
    let n = t.truth[0].len();
    let m = t.controls.first().map_or(0, |u| u.len());
    let k = t.measurements.first().map_or(0, |z| z.len());
    let mut header = vec!["step".to_string()];
    header.extend((0..n).map(|i| format!("truth_{i}")));
    header.extend((0..m).map(|i| format!("u_{i}")));
    header.extend((0..k).map(|i| format!("z_{i}")));
    writeln!(out, "{}", header.join(","))?;
    for (step, x) in t.truth.iter().enumerate() {
        let mut row = vec![step.to_string()];
        row.extend(x.iter().map(|v| fmt_f64(*v)));
        if step == 0 {
            row.extend(std::iter::repeat_n(String::new(), m + k));
        } else {
            row.extend(t.controls[step - 1].iter().map(|v| fmt_f64(*v)));
            row.extend(t.measurements[step - 1].iter().map(|v| fmt_f64(*v)));
        }
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Report table: `step,filter,x_hat_0..,P_diag_0..,nees,iterations,
/// innovation_norm`, one row per (filter, step), followed by one summary
/// comment line per filter (RMSE, mean NEES, mean iterations).
pub fn write_reports(out: &mut impl Write, reports: &[RunReport]) -> Result<(), CliError> {
    let n = reports
        .first()
        .and_then(|r| r.steps.first())
        .map_or(0, |s| s.x_hat.len());
    let mut header = vec!["step".to_string(), "filter".to_string()];
    header.extend((0..n).map(|i| format!("x_hat_{i}")));
    header.extend((0..n).map(|i| format!("P_diag_{i}")));
    header.extend(["nees", "iterations", "innovation_norm"].map(str::to_string));
    writeln!(out, "{}", header.join(","))?;
    for r in reports {
        for s in &r.steps {
            let mut row = vec![s.step.to_string(), r.filter.name().to_string()];
            row.extend(s.x_hat.iter().map(|v| fmt_f64(*v)));
            row.extend(s.p_diag.iter().map(|v| fmt_f64(*v)));
            row.push(fmt_f64(s.nees));
            row.push(s.iterations.to_string());
            row.push(fmt_f64(s.innovation_norm));
            writeln!(out, "{}", row.join(","))?;
        }
    }
    for r in reports {
        let rmse: Vec<String> =
            r.rmse.iter().enumerate().map(|(i, v)| format!("rmse_{i}={}", fmt_f64(*v))).collect();
        writeln!(
            out,
            "# summary filter={} {} rmse_norm={} mean_nees={} mean_iterations={}",
            r.filter.name(),
            rmse.join(" "),
            fmt_f64(r.rmse_norm()),
            fmt_f64(r.mean_nees),
            fmt_f64(r.mean_iterations),
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;
    use recbayes::filters::IterationConfig;
    use recbayes::models::{BuiltinModelId, ModelParams};
    use recbayes::sim::{compare_filters, simulate, FilterKind, Scenario};

    #[test]
    fn f64_formatting_round_trips() {
        for x in [0.1, -3.25e-17, 1.0 / 3.0, 12345.6789, f64::MIN_POSITIVE] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
    }

    #[test]
    fn trajectory_and_report_shapes() {
        let s = Scenario::with_constant_control(
            BuiltinModelId::Linear1D,
            ModelParams::default(),
            5,
            dvector![0.1],
            1,
        )
        .unwrap();
        let t = simulate(&s).unwrap();
        let mut buf = Vec::new();
        write_trajectory(&mut buf, &t).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 7); // header + 6 rows
        assert_eq!(lines[0], "step,truth_0,u_0,z_0");
        assert!(lines[1].starts_with("0,") && lines[1].ends_with(",,"));

        let reports =
            compare_filters(&[FilterKind::Kf, FilterKind::Ekf], &s, &IterationConfig::default())
                .unwrap();
        let mut buf = Vec::new();
        write_reports(&mut buf, &reports).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "step,filter,x_hat_0,P_diag_0,nees,iterations,innovation_norm");
        assert_eq!(lines.iter().filter(|l| l.starts_with("# summary")).count(), 2);
        assert_eq!(lines.len(), 1 + 10 + 2);
    }
}
