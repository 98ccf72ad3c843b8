//! Text formats written and read by the CLI.
//!
//! Channel dump:
//!
//! ```text
//! # any comment lines
//! channel <n_rf> <n_u>
//! gamma <gamma_1> ... <gamma_n_u>
//! <re> <im> ... (n_u pairs per row, n_rf rows)
//! ```
//!
//! Numbers are written with 17 significant digits, which reproduces every
//! `f64` exactly.

use std::fmt::Write as _;

use anyhow::{anyhow, bail, Context, Result};
use hybrid_ba::channel::BeamspaceChannel;
use hybrid_ba::link::SweepResult;
use hybrid_ba::switching::TrainingPoint;
use hybrid_ba::PswFit;
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Effective channel as stored in a dump: `H_b` and the large-scale gains.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDump {
    pub h_b: DMatrix<Complex64>,
    pub gamma: Vec<f64>,
}

impl From<&BeamspaceChannel> for ChannelDump {
    fn from(ch: &BeamspaceChannel) -> Self {
        Self {
            h_b: ch.h_b.clone(),
            gamma: ch.gamma.clone(),
        }
    }
}

impl ChannelDump {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "channel {} {}", self.h_b.nrows(), self.h_b.ncols()).unwrap();
        out.push_str("gamma");
        for g in &self.gamma {
            write!(out, " {g:.16e}").unwrap();
        }
        out.push('\n');
        for row in self.h_b.row_iter() {
            let fields: Vec<String> = row
                .iter()
                .map(|z| format!("{:.16e} {:.16e}", z.re, z.im))
                .collect();
            writeln!(out, "{}", fields.join(" ")).unwrap();
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let (n, header) = lines.next().ok_or_else(|| anyhow!("empty channel dump"))?;
        let dims: Vec<&str> = header.split_whitespace().collect();
        let (rows, cols) = match dims.as_slice() {
            ["channel", r, c] => (
                r.parse::<usize>().with_context(|| format!("line {n}: bad row count"))?,
                c.parse::<usize>().with_context(|| format!("line {n}: bad column count"))?,
            ),
            _ => bail!("line {n}: expected `channel <rows> <cols>`"),
        };

        let (n, gamma_line) = lines.next().ok_or_else(|| anyhow!("missing gamma line"))?;
        let mut fields = gamma_line.split_whitespace();
        if fields.next() != Some("gamma") {
            bail!("line {n}: expected `gamma` line");
        }
        let gamma = parse_floats(fields, n)?;
        if gamma.len() != cols {
            bail!("line {n}: expected {cols} gains, found {}", gamma.len());
        }

        let mut h_b = DMatrix::zeros(rows, cols);
        for r in 0..rows {
            let (n, line) = lines
                .next()
                .ok_or_else(|| anyhow!("expected {rows} matrix rows, found {r}"))?;
            let values = parse_floats(line.split_whitespace(), n)?;
            if values.len() != 2 * cols {
                bail!("line {n}: expected {} numbers, found {}", 2 * cols, values.len());
            }
            for c in 0..cols {
                h_b[(r, c)] = Complex64::new(values[2 * c], values[2 * c + 1]);
            }
        }
        if let Some((n, _)) = lines.next() {
            bail!("line {n}: unexpected trailing data");
        }
        Ok(Self { h_b, gamma })
    }
}

fn parse_floats<'a>(fields: impl Iterator<Item = &'a str>, line: usize) -> Result<Vec<f64>> {
    fields
        .map(|s| {
            s.parse::<f64>()
                .with_context(|| format!("line {line}: {s:?} is not a number"))
        })
        .collect()
}

pub const SWEEP_HEADER: &str = "method,b_bar,sum_se_bps_hz,ee_bits_per_joule,mean_power_w,mean_m_opt,n";

/// Sweep results as CSV. Floats use the shortest exact representation,
/// which is locale independent.
pub fn sweep_csv(results: &[SweepResult]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in results {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.method.id(),
            r.b_bar,
            r.sum_se,
            r.ee,
            r.mean_power,
            r.mean_m_opt,
            r.n
        )
        .unwrap();
    }
    out
}

/// Trained points next to the fitted curve, for plotting.
pub fn training_csv(points: &[TrainingPoint], fit: &PswFit) -> String {
    let mut out = String::from("p_w,t_p_w,p_act_w,fit_w\n");
    for pt in points {
        writeln!(out, "{},{},{},{}", pt.p, pt.t_p, pt.p_act, fit.predict(pt.p)).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ChannelDump {
        let h_b = DMatrix::from_fn(3, 2, |r, c| {
            Complex64::new(0.1 + r as f64 / 3.0, -(c as f64) * std::f64::consts::PI * 1e-7)
        });
        ChannelDump {
            h_b,
            gamma: vec![1.0 / 3.0, 2.5e-6],
        }
    }

    #[test]
    fn dump_round_trips_bit_exactly() {
        let d = sample();
        let back = ChannelDump::parse(&d.to_text()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn dump_allows_comments() {
        let text = format!("# saved by hand\n\n{}", sample().to_text());
        assert_eq!(ChannelDump::parse(&text).unwrap(), sample());
    }

    #[test]
    fn dump_errors() {
        assert!(ChannelDump::parse("").is_err());
        assert!(ChannelDump::parse("channel 1 1\ngamma 1\n1 0 2\n").is_err());
        assert!(ChannelDump::parse("channel 2 1\ngamma 1\n1 0\n").is_err());
        assert!(ChannelDump::parse("channel 1 1\ngamma 1 2\n1 0\n").is_err());
        assert!(ChannelDump::parse("channel 1 1\ngamma 1\n1 0\n1 0\n").is_err());
        assert!(ChannelDump::parse("matrix 1 1\ngamma 1\n1 0\n").is_err());
        assert!(ChannelDump::parse("channel 1 1\ngamma one\n1 0\n").is_err());
    }
}
