use std::fmt::Write;

use super::Evaluation;

/// Infinite scores are written as this many dB so tables stay numeric.
pub const REPORT_CLAMP_DB: f64 = 300.0;

pub fn clamp_db(v: f64) -> f64 {
    if v.is_nan() {
        v
    } else {
        v.clamp(-REPORT_CLAMP_DB, REPORT_CLAMP_DB)
    }
}

/// `source_index,sdr_db,sir_db,sar_db`, one row per source and a final `mean` row.
pub fn format_score_csv(ev: &Evaluation) -> String {
    let mut out = String::from("source_index,sdr_db,sir_db,sar_db\n");
    for (j, s) in ev.per_source.iter().enumerate() {
        let _ = writeln!(
            out,
            "{j},{:.6},{:.6},{:.6}",
            clamp_db(s.sdr_db),
            clamp_db(s.sir_db),
            clamp_db(s.sar_db)
        );
    }
    let a = &ev.average;
    let _ = writeln!(
        out,
        "mean,{:.6},{:.6},{:.6}",
        clamp_db(a.sdr_db),
        clamp_db(a.sir_db),
        clamp_db(a.sar_db)
    );
    out
}

/// Aligned plain-text table with the same content as the CSV.
pub fn format_score_summary(ev: &Evaluation) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<8} {:>10} {:>10} {:>10}", "source", "SDR dB", "SIR dB", "SAR dB");
    for (j, s) in ev.per_source.iter().enumerate() {
        let _ = writeln!(
            out,
            "{:<8} {:>10.3} {:>10.3} {:>10.3}",
            j,
            clamp_db(s.sdr_db),
            clamp_db(s.sir_db),
            clamp_db(s.sar_db)
        );
    }
    let a = &ev.average;
    let _ = writeln!(
        out,
        "{:<8} {:>10.3} {:>10.3} {:>10.3}",
        "mean",
        clamp_db(a.sdr_db),
        clamp_db(a.sir_db),
        clamp_db(a.sar_db)
    );
    out
}
