//! Text format for channel sets.
//!
//! ```text
//! B U Mt Mr
//! re,im re,im ...      <- row `r` of H[i,k], Mt entries
//! ```
//!
//! Rows are ordered by user `i`, then station `k`, then row. Entries use 17
//! significant digits, so a dump/load cycle is exact. Large-scale gains are not
//! stored; on load each gain is estimated as the mean entry power of its block.

use std::io::{BufRead, Write};

use num_complex::Complex64;
use ucn_core::linalg::CMat;
use ucn_core::ChannelSet;

use crate::{fmt_f64, SimError, SimResult};

pub fn write_channels(channels: &ChannelSet, out: &mut impl Write) -> std::io::Result<()> {
    let (b, u, mt, mr) = (channels.num_bs(), channels.num_ut(), channels.mt(), channels.mr());
    writeln!(out, "{b} {u} {mt} {mr}")?;
    for i in 0..u {
        for k in 0..b {
            let h = channels.block(i, k);
            for r in 0..mr {
                let line: Vec<String> =
                    (0..mt).map(|c| format!("{},{}", fmt_f64(h[(r, c)].re), fmt_f64(h[(r, c)].im))).collect();
                writeln!(out, "{}", line.join(" "))?;
            }
        }
    }
    Ok(())
}

pub fn read_channels(input: impl BufRead) -> SimResult<ChannelSet> {
    let mut lines = input.lines().enumerate();
    let bad = |line: usize, message: String| SimError::Parse { line, message };
    let mut next = |what: &str| -> SimResult<(usize, String)> {
        match lines.next() {
            Some((n, Ok(text))) => Ok((n + 1, text)),
            Some((n, Err(e))) => Err(bad(n + 1, e.to_string())),
            None => Err(bad(0, format!("unexpected end of input while reading {what}"))),
        }
    };

    let (n, header) = next("header")?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| bad(n, format!("bad dimension `{t}`"))))
        .collect::<SimResult<_>>()?;
    let [b, u, mt, mr] = dims[..] else {
        return Err(bad(n, "header must be `B U Mt Mr`".into()));
    };

    let mut blocks = Vec::with_capacity(b * u);
    let mut gains = Vec::with_capacity(b * u);
    for _ in 0..b * u {
        let mut h = CMat::zeros(mr, mt);
        for r in 0..mr {
            let (n, text) = next("channel rows")?;
            let entries: Vec<&str> = text.split_whitespace().collect();
            if entries.len() != mt {
                return Err(bad(n, format!("expected {mt} entries, found {}", entries.len())));
            }
            for (c, e) in entries.iter().enumerate() {
                let (re, im) = e.split_once(',').ok_or_else(|| bad(n, format!("entry `{e}` is not `re,im`")))?;
                let parse = |s: &str| s.parse::<f64>().map_err(|_| bad(n, format!("bad number `{s}`")));
                h[(r, c)] = Complex64::new(parse(re)?, parse(im)?);
            }
        }
        gains.push(h.norm_squared() / (mr * mt) as f64);
        blocks.push(h);
    }
    if let Some((n, Ok(extra))) = lines.next() {
        if !extra.trim().is_empty() {
            return Err(bad(n + 1, "trailing data after the last channel row".into()));
        }
    }
    Ok(ChannelSet::new(b, u, mt, mr, blocks, gains)?)
}
