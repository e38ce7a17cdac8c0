//! Built-in label vocabulary.
//!
//! The full SFI catalogue is proprietary, so only the handful of labels that
//! are publicly documented for the cargo refrigeration branch are shipped.
//! Every other code renders without a label.

use super::{FullCode, SfiPath};

const FOLDER_LABELS: &[(&[u8], &str)] = &[
    (&[3], "Equipment for cargo"),
    (&[3, 6], "Freezing, refrigerating, and heating systems for cargo"),
    (&[3, 6, 2], "Freezing and refrigerating systems for dry cargo"),
];

const DETAIL_LABELS: &[(u16, u16, &str)] = &[(362, 3, "Cooling compressor")];

pub fn label_for(path: &SfiPath) -> Option<&'static str> {
    FOLDER_LABELS
        .iter()
        .find(|(digits, _)| *digits == path.digits())
        .map(|(_, label)| *label)
}

pub fn detail_label(code: &FullCode) -> Option<&'static str> {
    DETAIL_LABELS
        .iter()
        .find(|(group, suffix, _)| *group == code.group().number() && *suffix == code.suffix())
        .map(|(_, _, label)| *label)
}
