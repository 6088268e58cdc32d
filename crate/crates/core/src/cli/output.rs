//! CSV persistence with `# meta:` header lines and fixed float formatting.

use std::io::Write;

use super::config::Tolerances;

/// Version string recorded in output metadata.
pub fn version() -> &'static str {
    match option_env!("BATHSIM_GIT_DESCRIBE") {
        Some(v) if !v.is_empty() => v,
        _ => env!("CARGO_PKG_VERSION"),
    }
}

/// C-style `%.12e`: two-digit minimum exponent, `nan`, `inf`, `-inf`.
pub fn fmt_e(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    // Drop the sign of negative zero.
    let x = if x == 0.0 { 0.0 } else { x };
    let s = format!("{x:.12e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

/// Optional time: `inf` when the event never happened.
pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_e).unwrap_or_else(|| "inf".into())
}

/// Metadata recorded at the top of every CSV.
#[derive(Clone, Debug)]
pub struct Meta {
    pub command: String,
    pub config_hash: String,
    pub fock: usize,
    pub tolerances: Tolerances,
    pub extra: Vec<(String, String)>,
}

impl Meta {
    pub fn lines(&self) -> Vec<String> {
        let t = &self.tolerances;
        let mut out = vec![
            format!("# meta: version={}", version()),
            format!("# meta: command={}", self.command),
            format!("# meta: config_sha256={}", self.config_hash),
            format!("# meta: fock={}", self.fock),
            format!(
                "# meta: tolerances trace={} hermiticity={} min_eigenvalue={} kernel_pivot={} fock_drift={} rwa_margin={}",
                fmt_e(t.hygiene.trace),
                fmt_e(t.hygiene.hermiticity),
                fmt_e(t.hygiene.min_eigenvalue),
                fmt_e(t.kernel_pivot),
                fmt_e(t.fock_drift),
                fmt_e(t.rwa_margin)
            ),
        ];
        out.extend(self.extra.iter().map(|(k, v)| format!("# meta: {k}={v}")));
        out
    }
}

/// Column table of pre-formatted cells.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

pub fn write_csv<W: Write>(mut out: W, meta: &Meta, table: &Table) -> std::io::Result<()> {
    for line in meta.lines() {
        writeln!(out, "{line}")?;
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c_style_exponent() {
        assert_eq!(fmt_e(1e-7), "1.000000000000e-07");
        assert_eq!(fmt_e(0.0), "0.000000000000e+00");
        assert_eq!(fmt_e(-0.0), "0.000000000000e+00");
        assert_eq!(fmt_e(-123.5), "-1.235000000000e+02");
        assert_eq!(fmt_e(6.02e123), "6.020000000000e+123");
        assert_eq!(fmt_e(f64::NAN), "nan");
        assert_eq!(fmt_e(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn csv_has_meta_then_header() {
        let meta = Meta {
            command: "steady".into(),
            config_hash: "abc".into(),
            fock: 8,
            tolerances: Tolerances::default(),
            extra: vec![],
        };
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![fmt_e(1.0), fmt_e(2.0)]);
        let mut buf = Vec::new();
        write_csv(&mut buf, &meta, &t).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# meta: version="));
        assert_eq!(lines[lines.len() - 2], "a,b");
        assert_eq!(lines[lines.len() - 1], "1.000000000000e+00,2.000000000000e+00");
    }
}
