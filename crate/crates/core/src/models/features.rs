use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Character n-gram feature template.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureTemplate {
    pub max_ngram: usize,
    /// Radius, in grapheme clusters, around the current position.
    pub window: usize,
    /// Emit `BOW`/`EOW` at the first/last position of a word.
    pub include_position_flags: bool,
}

impl Default for FeatureTemplate {
    fn default() -> Self {
        Self {
            max_ngram: 3,
            window: 2,
            include_position_flags: true,
        }
    }
}

impl FeatureTemplate {
    pub fn validate(&self) -> Result<()> {
        if self.max_ngram == 0 {
            return Err(Error::Config("max_ngram must be at least 1".into()));
        }
        Ok(())
    }

    /// Features of position `position` in an already-split word.
    pub fn features_at(&self, chars: &[&str], position: usize) -> Vec<String> {
        let len = chars.len() as isize;
        let p = position as isize;
        let w = self.window as isize;
        let mut out = Vec::new();
        for n in 1..=self.max_ngram as isize {
            for offset in -w..=(w - n + 1) {
                let start = p + offset;
                if start < 0 || start + n > len {
                    continue;
                }
                let text = chars[start as usize..(start + n) as usize].concat();
                out.push(format!("g{n}[{offset:+}]={text}"));
            }
        }
        if self.include_position_flags {
            if position == 0 {
                out.push("BOW".into());
            }
            if position + 1 == chars.len() {
                out.push("EOW".into());
            }
        }
        out
    }
}

/// All n-grams of length `1..=max_ngram` lying inside both the word and the
/// window around `position`, tagged with their start offset, e.g. `g2[-1]=ab`.
pub fn extract_features(surface: &str, position: usize, template: &FeatureTemplate) -> Result<BTreeSet<String>> {
    let chars = crate::corpus::graphemes(surface);
    if position >= chars.len() {
        return Err(Error::Contract(format!(
            "position {position} outside `{surface}` of length {}",
            chars.len()
        )));
    }
    Ok(template.features_at(&chars, position).into_iter().collect())
}
