use crate::optimizer::HistoryRow;
use std::fmt::Write as _;
use std::path::Path;

pub const HISTORY_HEADER: &str = "iter,gamma,j_delta,grad_norm,newton_iters,tau";

/// One row per outer iteration; floats carry 17 significant digits.
pub fn format_history(history: &[HistoryRow]) -> String {
    let mut s = String::new();
    s.push_str(HISTORY_HEADER);
    s.push('\n');
    for r in history {
        writeln!(
            s,
            "{},{:.16e},{:.16e},{:.16e},{},{:.16e}",
            r.iter, r.gamma, r.j_delta, r.grad_norm, r.newton_iters, r.tau
        )
        .unwrap();
    }
    s
}

pub fn write_history_csv(history: &[HistoryRow], path: &Path) -> std::io::Result<()> {
    super::atomic_write(path, format_history(history).as_bytes())
}

pub fn parse_history(text: &str) -> Result<Vec<HistoryRow>, String> {
    let mut lines = text.lines();
    if lines.next() != Some(HISTORY_HEADER) {
        return Err("missing history header".into());
    }
    lines
        .enumerate()
        .map(|(i, l)| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 6 {
                return Err(format!("row {}: expected 6 fields", i + 1));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| format!("row {}: {e}", i + 1));
            let int = |s: &str| s.parse::<usize>().map_err(|e| format!("row {}: {e}", i + 1));
            Ok(HistoryRow {
                iter: int(f[0])?,
                gamma: num(f[1])?,
                j_delta: num(f[2])?,
                grad_norm: num(f[3])?,
                newton_iters: int(f[4])?,
                tau: num(f[5])?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_full_precision() {
        let h = vec![
            HistoryRow { iter: 0, gamma: 10.0, j_delta: 0.1 + 0.2, grad_norm: 1.0 / 3.0, newton_iters: 7, tau: 1.0 },
            HistoryRow { iter: 1, gamma: 1e4, j_delta: -2.5e-300, grad_norm: std::f64::consts::PI, newton_iters: 0, tau: 0.6 },
        ];
        assert_eq!(parse_history(&format_history(&h)).unwrap(), h);
    }

    #[test]
    fn empty_history_is_header_only() {
        assert_eq!(format_history(&[]), format!("{HISTORY_HEADER}\n"));
    }
}
