//! CSV emission: comment header carrying the command and configuration,
//! a mandatory column header, and numbers in positional decimal notation
//! with 17 significant digits.

use std::fmt::Write as _;

/// Formats `x` in positional notation with 17 significant digits
/// (`1.2500000000000000`, `0.00012345678901234568`). Non-finite values
/// print as `NaN`, `inf`, `-inf`.
pub fn num(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return format!("{:.16}", 0.0);
    }
    // round first so the exponent reflects the printed value
    let sci = format!("{:.16e}", x);
    let exp: i32 = sci[sci.find('e').expect("exponent") + 1..]
        .parse()
        .expect("integer exponent");
    let decimals = (16 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}

pub fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

/// Builds a CSV document in memory.
#[derive(Debug, Clone, Default)]
pub struct CsvDoc {
    text: String,
    columns: usize,
}

impl CsvDoc {
    /// Starts a document whose first lines are `# sepstat <command>` and
    /// `# config: <json>`.
    pub fn new(command: &str, config_json: &str, columns: &[&str]) -> Self {
        let mut text = String::new();
        writeln!(text, "# sepstat {command}").unwrap();
        writeln!(text, "# config: {config_json}").unwrap();
        writeln!(text, "{}", columns.join(",")).unwrap();
        Self {
            text,
            columns: columns.len(),
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        assert_eq!(cells.len(), self.columns, "row width must match header");
        writeln!(self.text, "{}", cells.join(",")).unwrap();
    }

    /// Appends `# footer: <json>`.
    pub fn footer(&mut self, json: &str) {
        writeln!(self.text, "# footer: {json}").unwrap();
    }

    pub fn finish(self) -> String {
        self.text
    }
}

/// Data rows (skipping `#` comments and the column header) as cells.
pub fn parse_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty());
    let header = lines
        .next()
        .map(|h| h.split(',').map(str::to_owned).collect())
        .unwrap_or_default();
    let rows = lines
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect();
    (header, rows)
}

/// JSON payload of the `# footer:` line, if any.
pub fn footer(text: &str) -> Option<&str> {
    text.lines()
        .rev()
        .find_map(|l| l.strip_prefix("# footer: "))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(num(1.25), "1.2500000000000000");
        assert_eq!(num(0.1), "0.10000000000000001");
        assert_eq!(num(-2.5e-5), "-0.000025000000000000001");
        assert_eq!(num(1e6), "1000000.0000000000");
        assert_eq!(num(0.0), "0.0000000000000000");
        assert_eq!(num(f64::NAN), "NaN");
        for x in [
            0.89,
            1.0 / 3.0,
            6.02e23,
            1e-300,
            -7.0,
            9.999_999_999_999_999_9,
        ] {
            let s = num(x);
            assert!(!s.contains('e'), "{s}");
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
            let digits = s
                .trim_start_matches('-')
                .replace('.', "")
                .trim_start_matches('0')
                .len();
            assert!(digits >= 17, "{s}");
        }
    }

    #[test]
    fn document_layout() {
        let mut doc = CsvDoc::new("scan", "{\"seed\":1}", &["p", "residual"]);
        doc.row(&[num(0.5), num(1e-3)]);
        doc.footer("{\"region_start\":null}");
        let text = doc.finish();
        let (header, rows) = parse_rows(&text);
        assert_eq!(header, ["p", "residual"]);
        assert_eq!(rows.len(), 1);
        assert_eq!(footer(&text), Some("{\"region_start\":null}"));
        assert!(text.starts_with("# sepstat scan\n# config: {\"seed\":1}\n"));
    }
}
