//! Chord-corpus ingestion.
//!
//! Text format, one song per line:
//!
//! ```text
//! # comment
//! Autumn Leaves | Am7 D7 | GMaj7 | CMaj7 | ...
//! ```
//!
//! The first `|`-separated field is the title, every following field is a bar
//! of one or two whitespace-separated chord symbols. A single-chord bar is
//! doubled during normalization so every bar contributes two chords.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::chord::{parse_chord, Chord, ChordId, ChordQuality, PitchClass};
use crate::error::{Error, Result};

/// Bars per song in the simulation set.
pub const SIMULATION_BARS: usize = 32;
/// Normalized length of a simulation song.
pub const SIMULATION_LENGTH: usize = 2 * SIMULATION_BARS;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum UnknownChordPolicy {
    /// Drop songs that contain a symbol outside the alphabet.
    #[default]
    Skip,
    /// Fail the whole load on the first unknown symbol.
    Strict,
}

/// Maps foreign quality suffixes (e.g. `-7`, `9`, `o7`) onto alphabet
/// qualities before a symbol is declared unknown.
#[derive(Clone, Debug, Default)]
pub struct SuffixReductions {
    table: BTreeMap<String, ChordQuality>,
}

impl SuffixReductions {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, suffix: impl Into<String>, quality: ChordQuality) -> &mut Self {
        self.table.insert(suffix.into(), quality);
        self
    }

    /// Common lead-sheet spellings folded onto the nearest four-note quality.
    pub fn jazz() -> Self {
        use ChordQuality::*;
        let mut r = Self::new();
        for (suffix, quality) in [
            ("", Major7),
            ("maj", Major7),
            ("M7", Major7),
            ("^7", Major7),
            ("^", Major7),
            ("6", Major7),
            ("69", Major7),
            ("maj9", Major7),
            ("-", Minor7),
            ("m", Minor7),
            ("-7", Minor7),
            ("min7", Minor7),
            ("m9", Minor7),
            ("-9", Minor7),
            ("m11", Minor7),
            ("-11", Minor7),
            ("-^7", MinorMajor7),
            ("-6", Minor6),
            ("min6", Minor6),
            ("9", Dominant7),
            ("13", Dominant7),
            ("11", Dominant7),
            ("7b9", Dominant7),
            ("7#9", Dominant7),
            ("7#11", Dominant7),
            ("7b13", Dominant7),
            ("7alt", Dominant7),
            ("7sus", Dominant7),
            ("7sus4", Dominant7),
            ("sus", Dominant7),
            ("o", Diminished7),
            ("o7", Diminished7),
            ("dim", Diminished7),
            ("h", HalfDiminished7),
            ("h7", HalfDiminished7),
            ("ø", HalfDiminished7),
            ("ø7", HalfDiminished7),
            ("-7b5", HalfDiminished7),
            ("+", Augmented7),
            ("aug", Augmented7),
            ("7#5", Augmented7),
        ] {
            r.insert(suffix, quality);
        }
        r
    }

    fn reduce(&self, symbol: &str) -> Option<Chord> {
        // Slash chords keep their upper structure.
        let symbol = symbol.split('/').next().unwrap_or(symbol);
        let bytes = symbol.as_bytes();
        let root_len = match bytes.get(1) {
            Some(b'b') | Some(b'#') => 2,
            _ => 1,
        };
        let root = PitchClass::parse(symbol.get(..root_len)?)?;
        let suffix = &symbol[root_len..];
        if let Ok(chord) = parse_chord(symbol) {
            return Some(chord);
        }
        self.table
            .get(suffix)
            .map(|&quality| Chord::new(root, quality))
    }
}

#[derive(Clone, Debug, Default)]
pub struct LoadOptions {
    pub policy: UnknownChordPolicy,
    pub reductions: Option<SuffixReductions>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Song {
    pub title: String,
    /// Each bar holds one or two chords.
    pub bars: Vec<Vec<ChordId>>,
}

impl Song {
    pub fn new(title: impl Into<String>, bars: Vec<Vec<ChordId>>) -> Result<Self> {
        if let Some(bad) = bars.iter().position(|b| b.is_empty() || b.len() > 2) {
            return Err(Error::InvalidConfig(format!(
                "bar {} holds {} chords, expected 1 or 2",
                bad + 1,
                bars[bad].len()
            )));
        }
        Ok(Song {
            title: title.into(),
            bars,
        })
    }

    /// Builds a song from an already-normalized chord sequence (pairs per bar).
    pub fn from_normalized(title: impl Into<String>, chords: &[ChordId]) -> Result<Self> {
        if !chords.len().is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "normalized sequence length {} is odd",
                chords.len()
            )));
        }
        Song::new(title, chords.chunks(2).map(<[ChordId]>::to_vec).collect())
    }

    /// Flat sequence with every single-chord bar doubled.
    pub fn normalized(&self) -> Vec<ChordId> {
        self.bars
            .iter()
            .flat_map(|bar| match bar.as_slice() {
                [one] => [*one, *one],
                [a, b] => [*a, *b],
                _ => unreachable!("bars hold one or two chords"),
            })
            .collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CorpusStats {
    /// Non-comment lines seen.
    pub lines: usize,
    pub parsed: usize,
    pub skipped_unknown_chord: usize,
    pub skipped_bar_shape: usize,
    /// Songs removed by [`filter_simulation_set`].
    pub filtered_out: usize,
}

impl CorpusStats {
    pub fn skipped(&self) -> usize {
        self.skipped_unknown_chord + self.skipped_bar_shape
    }
}

#[derive(Clone, Debug, Default)]
pub struct Corpus {
    pub songs: Vec<Song>,
    pub stats: CorpusStats,
}

impl Corpus {
    pub fn from_songs(songs: Vec<Song>) -> Self {
        let stats = CorpusStats {
            lines: songs.len(),
            parsed: songs.len(),
            ..CorpusStats::default()
        };
        Corpus { songs, stats }
    }

    pub fn is_empty(&self) -> bool {
        self.songs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.songs.len()
    }

    /// SHA-256 over every normalized song, hex encoded.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for song in &self.songs {
            let ids: Vec<u8> = song.normalized().iter().map(|c| c.index() as u8).collect();
            hasher.update((ids.len() as u64).to_le_bytes());
            hasher.update(&ids);
        }
        hex::encode(hasher.finalize())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for song in &self.songs {
            out.push_str(&song.title);
            for bar in &song.bars {
                out.push_str(" |");
                for chord in bar {
                    out.push(' ');
                    out.push_str(&chord.to_string());
                }
            }
            out.push('\n');
        }
        out
    }
}

enum LineOutcome {
    Song(Song),
    UnknownChord(String),
    BarShape,
}

fn parse_line(line: &str, line_no: usize, options: &LoadOptions) -> Result<LineOutcome> {
    let mut fields = line.split('|');
    let title = fields.next().unwrap_or_default().trim();
    let mut bars: Vec<&str> = fields.map(str::trim).collect();
    if bars.is_empty() {
        return Err(Error::CorpusFormat {
            line: line_no,
            message: "expected `title | bar | ...`".into(),
        });
    }
    // A trailing `|` closes the last bar rather than opening an empty one.
    if bars.last() == Some(&"") {
        bars.pop();
    }
    if bars.is_empty() {
        return Err(Error::CorpusFormat {
            line: line_no,
            message: "song has no bars".into(),
        });
    }

    let mut parsed = Vec::with_capacity(bars.len());
    for bar in bars {
        let symbols: Vec<&str> = bar.split_whitespace().collect();
        if symbols.is_empty() || symbols.len() > 2 {
            return Ok(LineOutcome::BarShape);
        }
        let mut chords = Vec::with_capacity(symbols.len());
        for symbol in symbols {
            let chord = match parse_chord(symbol) {
                Ok(chord) => Some(chord),
                Err(_) => options.reductions.as_ref().and_then(|r| r.reduce(symbol)),
            };
            match chord {
                Some(chord) => chords.push(chord.id()),
                None => return Ok(LineOutcome::UnknownChord(symbol.to_string())),
            }
        }
        parsed.push(chords);
    }
    Ok(LineOutcome::Song(Song {
        title: title.to_string(),
        bars: parsed,
    }))
}

/// Parses corpus text. Line numbers in errors are 1-based.
pub fn parse_corpus(text: &str, options: &LoadOptions) -> Result<Corpus> {
    let mut corpus = Corpus::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        corpus.stats.lines += 1;
        match parse_line(line, idx + 1, options)? {
            LineOutcome::Song(song) => {
                corpus.stats.parsed += 1;
                corpus.songs.push(song);
            }
            LineOutcome::UnknownChord(symbol) => match options.policy {
                UnknownChordPolicy::Strict => return Err(Error::UnknownChord(symbol)),
                UnknownChordPolicy::Skip => {
                    log::debug!("line {}: skipping song with unknown chord {symbol}", idx + 1);
                    corpus.stats.skipped_unknown_chord += 1;
                }
            },
            LineOutcome::BarShape => corpus.stats.skipped_bar_shape += 1,
        }
    }
    Ok(corpus)
}

pub fn load_corpus(path: impl AsRef<Path>, options: &LoadOptions) -> Result<Corpus> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(&text, options)
}

/// Keeps only songs of exactly 32 bars (64 chords once normalized).
pub fn filter_simulation_set(corpus: &Corpus) -> Corpus {
    let songs: Vec<Song> = corpus
        .songs
        .iter()
        .filter(|s| s.bars.len() == SIMULATION_BARS)
        .cloned()
        .collect();
    let mut stats = corpus.stats.clone();
    stats.filtered_out += corpus.songs.len() - songs.len();
    Corpus { songs, stats }
}
