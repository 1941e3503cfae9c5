use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::plots::{acf_svg, wavelet_svg};
use super::{Analysis, AnalysisReport};
use crate::error::{Error, Result};

fn write(path: PathBuf, contents: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))?;
    }
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(())
}

fn smoothed_wolf_csv(analysis: &Analysis) -> String {
    let mut s = String::from("month,smoothed_wolf\n");
    for (i, v) in analysis.smoothed_wolf.values.iter().enumerate() {
        let _ = writeln!(
            s,
            "{},{}",
            analysis.smoothed_wolf.month(i),
            v.map(|v| v.to_string()).unwrap_or_default()
        );
    }
    s
}

/// Writes `report.json`, `summary.md`, CSV sidecars and (optionally) SVG
/// plots under `out`. Returns the written paths in write order.
pub fn write_outputs(analysis: &Analysis, out: &Path, plots: bool) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out).map_err(|e| Error::Config(format!("output directory {}: {e}", out.display())))?;
    let mut written = Vec::new();
    let json = serde_json::to_string_pretty(&analysis.report)?;
    write(out.join("report.json"), &(json + "\n"), &mut written)?;
    write(out.join("summary.md"), &render_summary(&analysis.report), &mut written)?;
    write(out.join("csv/mask.csv"), &analysis.mask.to_csv(), &mut written)?;
    write(out.join("csv/smoothed_wolf.csv"), &smoothed_wolf_csv(analysis), &mut written)?;

    for (hp, hr) in analysis.hemispheres.iter().zip(&analysis.report.hemispheres) {
        let h = hp.hemisphere.name();
        let dir = out.join("csv").join(h);
        write(dir.join("mean.csv"), &hp.means.series.to_csv(), &mut written)?;
        write(dir.join("smoothed.csv"), &hp.smoothed.to_csv(), &mut written)?;
        for (family, series) in &hp.families {
            write(dir.join(format!("series_{}.csv", family.slug())), &series.to_csv(), &mut written)?;
        }
        write(dir.join("stationarity.csv"), &hr.stationarity.to_csv(), &mut written)?;
        for c in &hp.cycles {
            let stem = format!("cycle{}_{}", c.cycle, c.family.slug());
            write(dir.join(format!("{stem}_acf.csv")), &c.acf.to_csv(), &mut written)?;
            write(dir.join(format!("{stem}_wavelet.csv")), &c.spectrum.to_csv(), &mut written)?;
            write(dir.join(format!("{stem}_global.csv")), &c.global.to_csv(), &mut written)?;
            let meta = serde_json::to_string_pretty(&c.spectrum.metadata())?;
            write(dir.join(format!("{stem}_wavelet.json")), &meta, &mut written)?;
            if plots {
                let title = format!("{h} cycle {} {}", c.cycle, c.family.label());
                let pdir = out.join("plots").join(h);
                write(pdir.join(format!("{stem}_acf.svg")), &acf_svg(&c.acf, &title), &mut written)?;
                write(
                    pdir.join(format!("{stem}_wavelet.svg")),
                    &wavelet_svg(&c.spectrum, &c.global, &title),
                    &mut written,
                )?;
            }
        }
        for (family, spectrum, global) in &hp.full_span {
            let stem = format!("full_{}", family.slug());
            write(dir.join(format!("{stem}_wavelet.csv")), &spectrum.to_csv(), &mut written)?;
            write(dir.join(format!("{stem}_global.csv")), &global.to_csv(), &mut written)?;
            if plots {
                let title = format!("{h} full span {}", family.label());
                write(
                    out.join("plots").join(h).join(format!("{stem}_wavelet.svg")),
                    &wavelet_svg(spectrum, global, &title),
                    &mut written,
                )?;
            }
        }
    }
    Ok(written)
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.2}")).unwrap_or_else(|| "n/a".into())
}

/// Human-readable digest of a report.
pub fn render_summary(report: &AnalysisReport) -> String {
    let mut s = String::new();
    let seg = &report.segmentation;
    let _ = writeln!(s, "# Sunspot-area periodicity analysis\n");
    let _ = writeln!(s, "{} {}\n", report.tool, report.version);
    let _ = writeln!(s, "## Inputs\n");
    for f in &report.inputs {
        let _ = writeln!(
            s,
            "- {}: `{}` ({} records, {} missing, {} malformed), sha256 `{}`",
            f.role, f.path, f.records, f.dropped_missing, f.dropped_malformed, f.sha256
        );
    }
    let _ = writeln!(s, "\n## Span and segmentation\n");
    let _ = writeln!(
        s,
        "- cycles {}–{}: rotations {}–{} (N = {})",
        seg.first_cycle,
        seg.first_cycle as usize + seg.cycle_boundaries.len().saturating_sub(2),
        seg.first_rotation,
        seg.last_rotation,
        seg.n_rotations
    );
    let minima: Vec<String> = seg.span_minima.iter().map(ToString::to_string).collect();
    let _ = writeln!(s, "- minima: {}", minima.join(", "));
    let _ = writeln!(
        s,
        "- activity threshold {:.2} (full record {:.2}, {} rotations relabeled); high {} / low {} rotations",
        seg.threshold, seg.threshold_full_record, seg.relabeled_with_full_record, seg.n_high, seg.n_low
    );

    for h in &report.hemispheres {
        let name = h.hemisphere.name();
        let _ = writeln!(s, "\n## {} hemisphere\n", name[..1].to_uppercase() + &name[1..]);
        let _ = writeln!(
            s,
            "- rotations {} ({} low coverage, {} missing)",
            h.n_rotations, h.low_coverage_rotations, h.missing_rotations
        );
        let f = &h.fit;
        let _ = writeln!(
            s,
            "- stabilization: u = {}, k = {:.3} ± {:.3}, log A = {:.3}, F = {:.1}, p = {:.3e}",
            f.u, f.k, f.k_stderr, f.log_a, f.f_statistic, f.p_value
        );
        let st = &h.stationarity;
        let _ = writeln!(
            s,
            "- stationarity: {:.0}% of windowed means within 1σ̂, {:.0}% of windowed stds within 2σ̂ ({} windows)",
            100.0 * st.frac_means_in_1sigma,
            100.0 * st.frac_stds_in_2sigma,
            st.windowed_means.len()
        );
        let _ = writeln!(s, "\n| family | M high | M low | 2σ shortest | lags > 2σ | seam-free |");
        let _ = writeln!(s, "|---|---|---|---|---|---|");
        for hl in &h.high_low {
            let _ = writeln!(
                s,
                "| {} | {} | {} | {:.3} | {:?} | {:?} |",
                hl.family.label(),
                hl.n_high,
                hl.n_low,
                hl.shortest_two_sigma,
                hl.exceed_lags,
                hl.exceed_lags_without_seams
            );
        }
        let _ = writeln!(s, "\n| cycle | family | ACF max (lag, c) | 2σ | band peaks | global argmax | r |");
        let _ = writeln!(s, "|---|---|---|---|---|---|---|");
        for c in &h.cycles {
            for fc in &c.families {
                let max = fc
                    .acf_global_max
                    .map(|m| format!("{}, {:.3}", m.lag, m.value))
                    .unwrap_or_else(|| "n/a".into());
                let peaks: Vec<String> = fc.acf_peaks.iter().map(|p| p.lag.to_string()).collect();
                let _ = writeln!(
                    s,
                    "| {} | {} | {} | {:.3} | {} | {:.1} | {} |",
                    c.cycle,
                    fc.family.label(),
                    max,
                    2.0 * fc.sigma_bound,
                    peaks.join(" "),
                    fc.global_argmax_period,
                    opt(fc.agreement)
                );
            }
        }
        for fs in &h.full_span {
            let low: Vec<String> = fs
                .low_activity_extents
                .iter()
                .map(|e| format!("{}–{}", e.start_rotation, e.end_rotation))
                .collect();
            let _ = writeln!(
                s,
                "\n- full-span {}: {} significant 7–13 rotation intervals, {} entirely in low activity: {}",
                fs.family.label(),
                fs.extents.len(),
                low.len(),
                low.join(", ")
            );
        }
    }

    let a = &report.aggregates;
    let _ = writeln!(s, "\n## Aggregates over {} cases\n", a.n_cases);
    for f in a.decrease.iter().map(|f| ("ACF decrease", f)).chain(a.agreement.iter().map(|f| ("agreement", f))) {
        let _ = writeln!(s, "- {} {}: {}/{} ({})", f.0, f.1.label, f.1.count, f.1.total, opt(f.1.fraction));
    }
    let _ = writeln!(s, "\n## Method notes\n");
    for n in &report.notes {
        let _ = writeln!(s, "- {n}");
    }
    s
}
