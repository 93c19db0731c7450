//! The 120-chord harmonic alphabet.
//!
//! Every chord is a root pitch class plus one of ten four-note qualities.
//! Chords are identified by a dense id in `0..120`, ordered root-major
//! (C, Db, .., B) and then by quality in [`ChordQuality::ALL`] order. That
//! order is part of the model-file contract, see
//! [`ChordAlphabet::fingerprint`].

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Number of chords in the alphabet.
pub const ALPHABET_SIZE: usize = 120;

const ROOT_NAMES: [&str; 12] = [
    "C", "Db", "D", "Eb", "E", "F", "Gb", "G", "Ab", "A", "Bb", "B",
];

/// A semitone class in `0..12` (C = 0).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PitchClass(u8);

impl PitchClass {
    pub fn new(value: u8) -> Self {
        PitchClass(value % 12)
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn transpose(self, semitones: u8) -> Self {
        PitchClass::new(self.0 + semitones % 12)
    }

    /// Canonical (flat) spelling.
    pub fn name(self) -> &'static str {
        ROOT_NAMES[self.0 as usize]
    }

    /// Parses a note name with any number of trailing `b`/`#` accidentals.
    /// Enharmonic spellings collapse to the same class (`Cb` is `B`).
    pub fn parse(name: &str) -> Option<Self> {
        let (letter, accidentals) = split_root(name)?;
        if accidentals.len() != name.len() - 1 {
            return None;
        }
        Some(Self::from_parts(letter, accidentals))
    }

    fn from_parts(letter: char, accidentals: &str) -> Self {
        let natural: i32 = match letter {
            'C' => 0,
            'D' => 2,
            'E' => 4,
            'F' => 5,
            'G' => 7,
            'A' => 9,
            'B' => 11,
            _ => unreachable!("split_root only yields note letters"),
        };
        let shift: i32 = accidentals
            .chars()
            .map(|c| if c == '#' { 1 } else { -1 })
            .sum();
        PitchClass((natural + shift).rem_euclid(12) as u8)
    }
}

impl fmt::Display for PitchClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Splits `"Ebm7"` into `('E', "b")`, leaving the suffix to the caller.
fn split_root(symbol: &str) -> Option<(char, &str)> {
    let mut chars = symbol.chars();
    let letter = chars.next()?;
    if !matches!(letter, 'A'..='G') {
        return None;
    }
    let rest = &symbol[1..];
    let n = rest
        .char_indices()
        .take_while(|&(_, c)| c == 'b' || c == '#')
        .count();
    Some((letter, &rest[..n]))
}

/// The ten four-note chord qualities of the alphabet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ChordQuality {
    Major7,
    Minor7,
    MinorMajor7,
    Dominant7,
    DiminishedMajor7,
    Diminished7,
    HalfDiminished7,
    Minor6,
    Augmented7,
    AugmentedMajor7,
}

impl ChordQuality {
    pub const ALL: [ChordQuality; 10] = [
        ChordQuality::Major7,
        ChordQuality::Minor7,
        ChordQuality::MinorMajor7,
        ChordQuality::Dominant7,
        ChordQuality::DiminishedMajor7,
        ChordQuality::Diminished7,
        ChordQuality::HalfDiminished7,
        ChordQuality::Minor6,
        ChordQuality::Augmented7,
        ChordQuality::AugmentedMajor7,
    ];

    pub fn suffix(self) -> &'static str {
        match self {
            ChordQuality::Major7 => "Maj7",
            ChordQuality::Minor7 => "m7",
            ChordQuality::MinorMajor7 => "mMaj7",
            ChordQuality::Dominant7 => "7",
            ChordQuality::DiminishedMajor7 => "dimMaj7",
            ChordQuality::Diminished7 => "dim7",
            ChordQuality::HalfDiminished7 => "m7b5",
            ChordQuality::Minor6 => "m6",
            ChordQuality::Augmented7 => "+7",
            ChordQuality::AugmentedMajor7 => "+maj7",
        }
    }

    /// Semitone offsets from the root.
    pub fn intervals(self) -> [u8; 4] {
        match self {
            ChordQuality::Major7 => [0, 4, 7, 11],
            ChordQuality::Minor7 => [0, 3, 7, 10],
            ChordQuality::MinorMajor7 => [0, 3, 7, 11],
            ChordQuality::Dominant7 => [0, 4, 7, 10],
            ChordQuality::DiminishedMajor7 => [0, 3, 6, 11],
            ChordQuality::Diminished7 => [0, 3, 6, 9],
            ChordQuality::HalfDiminished7 => [0, 3, 6, 10],
            ChordQuality::Minor6 => [0, 3, 7, 9],
            ChordQuality::Augmented7 => [0, 4, 8, 10],
            ChordQuality::AugmentedMajor7 => [0, 4, 8, 11],
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Case-insensitive suffix lookup. The lower-cased suffixes are all
    /// distinct, so this never guesses.
    pub fn from_suffix(suffix: &str) -> Option<Self> {
        let lower = suffix.to_ascii_lowercase();
        ChordQuality::ALL
            .into_iter()
            .find(|q| q.suffix().to_ascii_lowercase() == lower)
    }
}

/// Dense alphabet index of a chord.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ChordId(u8);

impl ChordId {
    pub fn new(index: usize) -> Option<Self> {
        (index < ALPHABET_SIZE).then_some(ChordId(index as u8))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn chord(self) -> Chord {
        Chord {
            root: PitchClass(self.0 / 10),
            quality: ChordQuality::ALL[(self.0 % 10) as usize],
        }
    }

    /// Iterates the whole alphabet in id order.
    pub fn all() -> impl Iterator<Item = ChordId> + Clone {
        (0..ALPHABET_SIZE as u8).map(ChordId)
    }
}

impl fmt::Display for ChordId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.chord().fmt(f)
    }
}

impl FromStr for ChordId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_chord(s).map(Chord::id)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Chord {
    pub root: PitchClass,
    pub quality: ChordQuality,
}

impl Chord {
    pub fn new(root: PitchClass, quality: ChordQuality) -> Self {
        Chord { root, quality }
    }

    pub fn id(self) -> ChordId {
        ChordId(self.root.0 * 10 + self.quality as u8)
    }

    pub fn note_set(self) -> [PitchClass; 4] {
        self.quality.intervals().map(|i| self.root.transpose(i))
    }

    /// Pitch classes as a 12-bit mask (bit `p` set for class `p`).
    pub fn note_mask(self) -> u16 {
        self.note_set()
            .iter()
            .fold(0u16, |mask, pc| mask | (1 << pc.value()))
    }
}

impl fmt::Display for Chord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.root.name(), self.quality.suffix())
    }
}

/// Parses a chord symbol such as `CMaj7`, `Gb+maj7` or `C#m7`.
///
/// The root is case-sensitive and may be spelled with sharps or flats; the
/// quality suffix is matched case-insensitively.
pub fn parse_chord(symbol: &str) -> Result<Chord> {
    let unknown = || Error::UnknownChord(symbol.to_string());
    let (letter, accidentals) = split_root(symbol).ok_or_else(unknown)?;
    // At most one accidental: "Cbb7" is not a spelling we accept.
    if accidentals.len() > 1 {
        return Err(unknown());
    }
    let suffix = &symbol[1 + accidentals.len()..];
    let quality = ChordQuality::from_suffix(suffix).ok_or_else(unknown)?;
    Ok(Chord::new(PitchClass::from_parts(letter, accidentals), quality))
}

/// Canonical spelling, flats for black-key roots.
pub fn format_chord(chord: Chord) -> String {
    chord.to_string()
}

/// Jaccard distance between the pitch-class sets of two chords.
pub fn jaccard(a: Chord, b: Chord) -> f64 {
    let (ma, mb) = (a.note_mask(), b.note_mask());
    let common = (ma & mb).count_ones();
    let union = (ma | mb).count_ones();
    1.0 - f64::from(common) / f64::from(union)
}

/// Number of pitch classes two chords share.
pub fn common_notes(a: Chord, b: Chord) -> u32 {
    (a.note_mask() & b.note_mask()).count_ones()
}

/// The ordered alphabet with its id bijection.
#[derive(Clone, Debug)]
pub struct ChordAlphabet {
    chords: Vec<Chord>,
}

impl Default for ChordAlphabet {
    fn default() -> Self {
        Self::new()
    }
}

impl ChordAlphabet {
    pub fn new() -> Self {
        let chords = (0..12u8)
            .flat_map(|root| {
                ChordQuality::ALL
                    .into_iter()
                    .map(move |q| Chord::new(PitchClass(root), q))
            })
            .collect();
        ChordAlphabet { chords }
    }

    pub fn len(&self) -> usize {
        self.chords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chords.is_empty()
    }

    pub fn chords(&self) -> &[Chord] {
        &self.chords
    }

    pub fn get(&self, id: ChordId) -> Chord {
        self.chords[id.index()]
    }

    pub fn id_of(&self, chord: Chord) -> ChordId {
        chord.id()
    }

    /// SHA-256 over the canonical spellings in id order, hex encoded.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for chord in &self.chords {
            hasher.update(chord.to_string().as_bytes());
            hasher.update(b"\n");
        }
        hex::encode(hasher.finalize())
    }
}

/// Precomputed 120x120 Jaccard distances, indexed by [`ChordId`].
#[derive(Clone, Debug)]
pub struct DistanceMatrix {
    d: Vec<f64>,
}

impl DistanceMatrix {
    pub fn build(alphabet: &ChordAlphabet) -> Self {
        let m = alphabet.len();
        let mut d = vec![0.0; m * m];
        for (i, &a) in alphabet.chords().iter().enumerate() {
            for (j, &b) in alphabet.chords().iter().enumerate() {
                d[i * m + j] = jaccard(a, b);
            }
        }
        DistanceMatrix { d }
    }

    /// Shared matrix over the standard alphabet, built on first use.
    pub fn global() -> &'static DistanceMatrix {
        static MATRIX: OnceLock<DistanceMatrix> = OnceLock::new();
        MATRIX.get_or_init(|| DistanceMatrix::build(&ChordAlphabet::new()))
    }

    #[inline]
    pub fn get(&self, a: ChordId, b: ChordId) -> f64 {
        self.d[a.index() * ALPHABET_SIZE + b.index()]
    }

    pub fn row(&self, a: ChordId) -> &[f64] {
        let start = a.index() * ALPHABET_SIZE;
        &self.d[start..start + ALPHABET_SIZE]
    }
}
