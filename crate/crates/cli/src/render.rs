//! Human-readable formatting. JSON goes through serde_json, which writes the
//! shortest decimal that round-trips.

use ssli::matlog::Mat;

/// Six significant digits, fixed notation for moderate magnitudes and
/// scientific otherwise (like C's `%g`).
pub fn g6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let e = x.abs().log10().floor() as i32;
    if (-5..6).contains(&e) {
        let s = format!("{:.*}", (5 - e).max(0) as usize, x);
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{x:.5e}")
    }
}

pub fn g6_list(v: &[f64]) -> String {
    format!("[{}]", v.iter().map(|x| g6(*x)).collect::<Vec<_>>().join(", "))
}

/// Two-column table with aligned keys.
#[derive(Default)]
pub struct Table {
    rows: Vec<(String, String)>,
}

impl Table {
    pub fn row(&mut self, key: impl Into<String>, value: impl Into<String>) -> &mut Self {
        self.rows.push((key.into(), value.into()));
        self
    }

    pub fn num(&mut self, key: impl Into<String>, value: f64) -> &mut Self {
        self.row(key, g6(value))
    }

    pub fn matrix(&mut self, key: impl Into<String>, m: &Mat) -> &mut Self {
        let key = key.into();
        for (i, r) in m.rows().iter().enumerate() {
            let k = if i == 0 { key.clone() } else { String::new() };
            let cells: Vec<String> = r.iter().map(|x| format!("{:>13}", g6(*x))).collect();
            self.row(k, cells.join(" "));
        }
        self
    }

    pub fn render(&self) -> String {
        let w = self.rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        self.rows.iter().map(|(k, v)| format!("{k:<w$}  {v}\n")).collect()
    }
}
