use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::labels;
use super::SfiError;

/// A three-digit SFI group code: main group, group and sub-group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SfiCode {
    digits: [u8; 3],
}

/// Human-readable names for the three levels of a code, where known.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CodeLabels {
    pub main_group: Option<&'static str>,
    pub group: Option<&'static str>,
    pub sub_group: Option<&'static str>,
}

impl SfiCode {
    pub fn new(main_group: u8, group: u8, sub_group: u8) -> Result<Self, SfiError> {
        if main_group > 9 || group > 9 || sub_group > 9 {
            return Err(SfiError::NonDecimal(format!("{main_group}{group}{sub_group}")));
        }
        Ok(Self {
            digits: [main_group, group, sub_group],
        })
    }

    /// Builds a code from its numeric value 0..=999.
    pub fn from_number(n: u16) -> Result<Self, SfiError> {
        if n > 999 {
            return Err(SfiError::NotThreeDigits(n.to_string()));
        }
        Self::new((n / 100) as u8, (n / 10 % 10) as u8, (n % 10) as u8)
    }

    pub fn digits(&self) -> [u8; 3] {
        self.digits
    }

    /// First digit, 0..=9.
    pub fn main_group(&self) -> u8 {
        self.digits[0]
    }

    /// Two-digit group number, e.g. 36 for code 362.
    pub fn group(&self) -> u8 {
        self.digits[0] * 10 + self.digits[1]
    }

    /// Three-digit sub-group number, e.g. 362.
    pub fn sub_group(&self) -> u16 {
        self.number()
    }

    pub fn number(&self) -> u16 {
        self.digits[0] as u16 * 100 + self.digits[1] as u16 * 10 + self.digits[2] as u16
    }

    /// Main groups 0 and 9 are reserved for components the standard does not cover.
    pub fn is_uncovered(&self) -> bool {
        matches!(self.digits[0], 0 | 9)
    }

    pub fn labels(&self) -> CodeLabels {
        CodeLabels {
            main_group: labels::label_for(&self.path().truncated(1)),
            group: labels::label_for(&self.path().truncated(2)),
            sub_group: labels::label_for(&self.path()),
        }
    }

    /// The tree path of the sub-group folder holding this code.
    pub fn path(&self) -> SfiPath {
        SfiPath {
            len: 3,
            digits: self.digits,
        }
    }

    /// `self` is an ancestor of `other` iff its digit string is a proper prefix.
    /// Two three-digit codes are never in that relation; see [`SfiPath`].
    pub fn is_ancestor_of(&self, other: &SfiCode) -> bool {
        self.path().is_ancestor_of(&other.path())
    }
}

impl fmt::Display for SfiCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c] = self.digits;
        write!(f, "{a}{b}{c}")
    }
}

impl FromStr for SfiCode {
    type Err = SfiError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        parse_sfi_code(text)
    }
}

/// Parses a three-digit group code such as `362`.
pub fn parse_sfi_code(text: &str) -> Result<SfiCode, SfiError> {
    if text.chars().count() != 3 {
        return Err(SfiError::NotThreeDigits(text.to_owned()));
    }
    let mut digits = [0u8; 3];
    for (slot, ch) in digits.iter_mut().zip(text.chars()) {
        if !ch.is_ascii_digit() {
            return Err(SfiError::NonDecimal(text.to_owned()));
        }
        *slot = ch as u8 - b'0';
    }
    Ok(SfiCode { digits })
}

/// Whether a detail/material suffix names a component bought for the ship
/// or a stock material.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodeKind {
    Detail,
    Material,
}

impl CodeKind {
    /// Suffixes 000..=099 are detail codes, 100..=999 material codes.
    pub fn of_suffix(suffix: u16) -> Self {
        if suffix < 100 {
            CodeKind::Detail
        } else {
            CodeKind::Material
        }
    }
}

/// A six-digit code `GGG.SSS`: group code plus detail or material suffix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FullCode {
    group: SfiCode,
    suffix: u16,
}

impl FullCode {
    pub fn new(group: SfiCode, suffix: u16) -> Result<Self, SfiError> {
        if suffix > 999 {
            return Err(SfiError::MalformedCode(format!("{group}.{suffix}")));
        }
        Ok(Self { group, suffix })
    }

    pub fn group(&self) -> SfiCode {
        self.group
    }

    pub fn suffix(&self) -> u16 {
        self.suffix
    }

    pub fn kind(&self) -> CodeKind {
        CodeKind::of_suffix(self.suffix)
    }

    pub fn label(&self) -> Option<&'static str> {
        labels::detail_label(self)
    }
}

impl fmt::Display for FullCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:03}", self.group, self.suffix)
    }
}

impl FromStr for FullCode {
    type Err = SfiError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        parse_full_code(text)
    }
}

/// Parses a six-digit code such as `362.003`.
pub fn parse_full_code(text: &str) -> Result<FullCode, SfiError> {
    let malformed = || SfiError::MalformedCode(text.to_owned());
    let (group, suffix) = text.split_once('.').ok_or_else(malformed)?;
    if suffix.len() != 3 || !suffix.bytes().all(|b| b.is_ascii_digit()) {
        return Err(malformed());
    }
    let group = parse_sfi_code(group).map_err(|_| malformed())?;
    let suffix: u16 = suffix.parse().map_err(|_| malformed())?;
    FullCode::new(group, suffix)
}

/// Where a part sits: either at a sub-group folder or with a full
/// detail/material code inside that folder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PartCode {
    Group(SfiCode),
    Full(FullCode),
}

impl PartCode {
    pub fn group(&self) -> SfiCode {
        match self {
            PartCode::Group(code) => *code,
            PartCode::Full(full) => full.group(),
        }
    }

    /// The folder this part is filed under.
    pub fn path(&self) -> SfiPath {
        self.group().path()
    }

    pub fn kind(&self) -> Option<CodeKind> {
        match self {
            PartCode::Group(_) => None,
            PartCode::Full(full) => Some(full.kind()),
        }
    }

    fn sort_key(&self) -> (SfiCode, Option<u16>) {
        match self {
            PartCode::Group(code) => (*code, None),
            PartCode::Full(full) => (full.group(), Some(full.suffix())),
        }
    }
}

impl Ord for PartCode {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

impl PartialOrd for PartCode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PartCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PartCode::Group(code) => code.fmt(f),
            PartCode::Full(full) => full.fmt(f),
        }
    }
}

impl FromStr for PartCode {
    type Err = SfiError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        if text.contains('.') {
            parse_full_code(text).map(PartCode::Full)
        } else {
            parse_sfi_code(text).map(PartCode::Group)
        }
    }
}

impl From<SfiCode> for PartCode {
    fn from(code: SfiCode) -> Self {
        PartCode::Group(code)
    }
}

impl From<FullCode> for PartCode {
    fn from(code: FullCode) -> Self {
        PartCode::Full(code)
    }
}

/// A folder location in the SFI tree: the root, a main group (`3`), a group
/// (`36`) or a sub-group (`362`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct SfiPath {
    len: u8,
    digits: [u8; 3],
}

impl SfiPath {
    pub const MAX_DEPTH: usize = 3;

    pub fn root() -> Self {
        Self::default()
    }

    pub fn from_digits(digits: &[u8]) -> Result<Self, SfiError> {
        if digits.len() > Self::MAX_DEPTH {
            return Err(SfiError::PathTooDeep(digits.len()));
        }
        if digits.iter().any(|d| *d > 9) {
            return Err(SfiError::NonDecimal(format!("{digits:?}")));
        }
        let mut out = [0u8; 3];
        out[..digits.len()].copy_from_slice(digits);
        Ok(Self {
            len: digits.len() as u8,
            digits: out,
        })
    }

    pub fn digits(&self) -> &[u8] {
        &self.digits[..self.len as usize]
    }

    pub fn depth(&self) -> usize {
        self.len as usize
    }

    pub fn is_root(&self) -> bool {
        self.len == 0
    }

    pub fn parent(&self) -> Option<SfiPath> {
        (!self.is_root()).then(|| self.truncated(self.depth() - 1))
    }

    pub fn child(&self, digit: u8) -> Result<SfiPath, SfiError> {
        let mut digits = self.digits().to_vec();
        digits.push(digit);
        Self::from_digits(&digits)
    }

    /// The first `depth` digits of this path.
    pub fn truncated(&self, depth: usize) -> SfiPath {
        let len = depth.min(self.depth());
        let mut digits = [0u8; 3];
        digits[..len].copy_from_slice(&self.digits[..len]);
        SfiPath {
            len: len as u8,
            digits,
        }
    }

    /// Proper-prefix relation.
    pub fn is_ancestor_of(&self, other: &SfiPath) -> bool {
        self.depth() < other.depth() && other.digits().starts_with(self.digits())
    }

    pub fn is_ancestor_or_self(&self, other: &SfiPath) -> bool {
        other.digits().starts_with(self.digits())
    }

    /// Root first, then each prefix down to and including `self`.
    pub fn ancestors_or_self(&self) -> impl Iterator<Item = SfiPath> + '_ {
        (0..=self.depth()).map(|d| self.truncated(d))
    }

    /// Slash-separated folder form used in tree dumps: `/`, `3`, `3/36`, `3/36/362`.
    pub fn folder_form(&self) -> String {
        if self.is_root() {
            return "/".to_owned();
        }
        (1..=self.depth())
            .map(|d| {
                self.digits()[..d]
                    .iter()
                    .map(|x| char::from(b'0' + x))
                    .collect::<String>()
            })
            .collect::<Vec<_>>()
            .join("/")
    }

    pub fn as_code(&self) -> Option<SfiCode> {
        (self.depth() == 3).then_some(SfiCode {
            digits: self.digits,
        })
    }
}

impl Ord for SfiPath {
    fn cmp(&self, other: &Self) -> Ordering {
        self.digits().cmp(other.digits())
    }
}

impl PartialOrd for SfiPath {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for SfiPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_root() {
            return f.write_str("/");
        }
        for d in self.digits() {
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl FromStr for SfiPath {
    type Err = SfiError;

    /// Accepts `/`, `root` or the empty string for the root, otherwise one to
    /// three decimal digits. The folder form `3/36/362` is accepted as well.
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let text = text.trim();
        if text.is_empty() || text == "/" || text.eq_ignore_ascii_case("root") {
            return Ok(SfiPath::root());
        }
        let compact = match text.rsplit('/').next() {
            Some(last) if text.contains('/') => last,
            _ => text,
        };
        if !compact.bytes().all(|b| b.is_ascii_digit()) {
            return Err(SfiError::NonDecimal(text.to_owned()));
        }
        let digits: Vec<u8> = compact.bytes().map(|b| b - b'0').collect();
        let path = Self::from_digits(&digits)?;
        if text.contains('/') && path.folder_form() != text {
            return Err(SfiError::MalformedCode(text.to_owned()));
        }
        Ok(path)
    }
}

impl From<SfiCode> for SfiPath {
    fn from(code: SfiCode) -> Self {
        code.path()
    }
}

macro_rules! serde_via_string {
    ($ty:ty) => {
        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                let text = String::deserialize(deserializer)?;
                text.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

serde_via_string!(SfiCode);
serde_via_string!(FullCode);
serde_via_string!(PartCode);
serde_via_string!(SfiPath);
