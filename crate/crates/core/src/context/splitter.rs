//! Recursive character splitter with fixed-size overlapping windows.
//!
//! Lengths are counted in Unicode scalar values. Every chunk is a contiguous
//! slice of the input, so `char_start` plus the chunk length always maps
//! back onto the source text.

use serde::{Deserialize, Serialize};

use crate::model::Chunk;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitterConfig {
    pub chunk_size: usize,
    pub overlap: usize,
    pub separators: Vec<String>,
}

impl Default for SplitterConfig {
    fn default() -> Self {
        SplitterConfig {
            chunk_size: 100,
            overlap: 20,
            separators: vec!["\n\n".into(), "\n".into(), " ".into(), String::new()],
        }
    }
}

impl SplitterConfig {
    pub fn new(chunk_size: usize, overlap: usize) -> Self {
        SplitterConfig {
            chunk_size,
            overlap,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.chunk_size == 0 {
            return Err("chunk_size must be positive".into());
        }
        if self.overlap >= self.chunk_size {
            return Err(format!(
                "overlap ({}) must be smaller than chunk_size ({})",
                self.overlap, self.chunk_size
            ));
        }
        if self.separators.last().is_none_or(|s| !s.is_empty()) {
            return Err("the last separator must be the empty string".into());
        }
        Ok(())
    }
}

/// Splits `text` into chunks; `doc_index` is stamped on every chunk and
/// `seq` counts from zero. The config is assumed valid.
pub fn split_recursive(text: &str, doc_index: usize, config: &SplitterConfig) -> Vec<Chunk> {
    let chars: Vec<char> = text.chars().collect();
    let seps: Vec<Vec<char>> = config.separators.iter().map(|s| s.chars().collect()).collect();
    let mut spans = Vec::new();
    if chars.len() <= config.chunk_size {
        if !chars.is_empty() {
            spans.push((0, chars.len()));
        }
    } else {
        split_range(&chars, 0, chars.len(), &seps, config, &mut spans);
    }
    spans
        .into_iter()
        .enumerate()
        .map(|(seq, (start, end))| Chunk {
            doc_index,
            seq,
            text: chars[start..end].iter().collect(),
            char_start: start,
        })
        .collect()
}

fn occurs_at(chars: &[char], at: usize, sep: &[char]) -> bool {
    chars.len() >= at + sep.len() && chars[at..at + sep.len()] == *sep
}

/// Pieces of `[start, end)` split on `sep`, each keeping its trailing separator.
fn pieces(chars: &[char], start: usize, end: usize, sep: &[char]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut piece_start = start;
    let mut i = start;
    while i + sep.len() <= end {
        if occurs_at(&chars[..end], i, sep) {
            i += sep.len();
            out.push((piece_start, i));
            piece_start = i;
        } else {
            i += 1;
        }
    }
    if piece_start < end {
        out.push((piece_start, end));
    }
    out
}

fn hard_split(start: usize, end: usize, config: &SplitterConfig, out: &mut Vec<(usize, usize)>) {
    let stride = config.chunk_size - config.overlap;
    let mut s = start;
    loop {
        let e = (s + config.chunk_size).min(end);
        out.push((s, e));
        if e == end {
            break;
        }
        s += stride;
    }
}

fn split_range(
    chars: &[char],
    start: usize,
    end: usize,
    seps: &[Vec<char>],
    config: &SplitterConfig,
    out: &mut Vec<(usize, usize)>,
) {
    let size = config.chunk_size;
    if end - start <= size {
        out.push((start, end));
        return;
    }
    let chosen = seps.iter().position(|sep| {
        sep.is_empty() || (start..end).any(|i| occurs_at(&chars[..end], i, sep))
    });
    let Some(idx) = chosen else {
        hard_split(start, end, config, out);
        return;
    };
    if seps[idx].is_empty() {
        hard_split(start, end, config, out);
        return;
    }
    let rest = &seps[idx + 1..];

    // Current window [ws, we); `fresh` is false while it only holds carried overlap.
    let mut window: Option<(usize, usize)> = None;
    let mut fresh = false;
    for (ps, pe) in pieces(chars, start, end, &seps[idx]) {
        let plen = pe - ps;
        if plen > size {
            if let (Some(w), true) = (window, fresh) {
                out.push(w);
            }
            split_range(chars, ps, pe, rest, config, out);
            let (ls, le) = *out.last().expect("recursion emits at least one chunk");
            window = Some((le - config.overlap.min(le - ls), le));
            fresh = false;
            continue;
        }
        window = Some(match window {
            None => (ps, pe),
            Some((ws, we)) if (we - ws) + plen <= size => (ws, pe),
            Some((ws, we)) => {
                let mut carry_start = ws;
                if fresh {
                    out.push((ws, we));
                    carry_start = we - config.overlap.min(we - ws);
                }
                let carry_start = carry_start.max(we - (size - plen));
                (carry_start, pe)
            }
        });
        fresh = true;
    }
    if let (Some(w), true) = (window, fresh) {
        out.push(w);
    }
}
