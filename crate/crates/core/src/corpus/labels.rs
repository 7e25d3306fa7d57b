use std::fmt;

use serde::{Deserialize, Serialize};

use super::{graphemes, SegmentedWord};
use crate::error::{Error, Result};

/// Character-level segmentation tags. The discriminant is the label index
/// used by the CRF and by every tie-breaking rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Start = 0,
    End = 1,
    /// Single-character morpheme.
    S = 2,
    /// First character of a multi-character morpheme.
    B = 3,
    /// Interior character of a multi-character morpheme.
    M = 4,
    /// Last character of a multi-character morpheme.
    E = 5,
}

impl Label {
    pub const COUNT: usize = 6;
    pub const ALL: [Label; 6] = [Label::Start, Label::End, Label::S, Label::B, Label::M, Label::E];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Label> {
        Self::ALL.get(i).copied()
    }

    /// Whether a morpheme boundary is opened before this label, given the
    /// previous interior label. Stray START/END labels inside a word behave
    /// like `S`.
    fn opens_morpheme(self, prev: Label) -> bool {
        match self {
            Label::B | Label::S | Label::Start | Label::End => true,
            Label::M | Label::E => matches!(prev, Label::E | Label::S | Label::Start | Label::End),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Start => "START",
            Label::End => "END",
            Label::S => "S",
            Label::B => "B",
            Label::M => "M",
            Label::E => "E",
        })
    }
}

/// A well-formed label sequence: START, interior tags, END.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabelSequence(Vec<Label>);

impl LabelSequence {
    /// Checks every structural and transition constraint.
    pub fn new(labels: Vec<Label>) -> Result<Self> {
        let n = labels.len();
        if n < 3 || labels[0] != Label::Start || labels[n - 1] != Label::End {
            return Err(Error::Contract(
                "label sequence must be START, at least one tag, END".into(),
            ));
        }
        for w in labels.windows(2) {
            let ok = match (w[0], w[1]) {
                (Label::Start, next) => matches!(next, Label::S | Label::B),
                (Label::B | Label::M, next) => matches!(next, Label::M | Label::E),
                (Label::E | Label::S, next) => matches!(next, Label::S | Label::B | Label::End),
                (Label::End, _) => false,
            };
            if !ok {
                return Err(Error::Contract(format!("invalid transition {} -> {}", w[0], w[1])));
            }
        }
        Ok(Self(labels))
    }

    pub fn labels(&self) -> &[Label] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl AsRef<[Label]> for LabelSequence {
    fn as_ref(&self) -> &[Label] {
        &self.0
    }
}

/// Tags every grapheme of `word`, framed by START and END.
pub fn encode_labels(word: &SegmentedWord) -> LabelSequence {
    let mut labels = Vec::with_capacity(word.surface().len() + 2);
    labels.push(Label::Start);
    for m in word.morphemes() {
        let n = graphemes(m).len();
        if n == 1 {
            labels.push(Label::S);
        } else {
            labels.push(Label::B);
            labels.extend(std::iter::repeat_n(Label::M, n - 2));
            labels.push(Label::E);
        }
    }
    labels.push(Label::End);
    LabelSequence(labels)
}

/// Inverts [`encode_labels`]. Any label sequence of the right length decodes:
/// a morpheme opens before every `B` or `S`, and before `M`/`E` when the
/// previous tag closed a morpheme. The framing labels are ignored.
pub fn decode_labels(surface: &str, labels: &[Label]) -> Result<SegmentedWord> {
    let g = graphemes(surface);
    if g.is_empty() {
        return Err(Error::Contract("cannot decode an empty surface".into()));
    }
    if labels.len() != g.len() + 2 {
        return Err(Error::Contract(format!(
            "{} labels for `{surface}` with {} graphemes",
            labels.len(),
            g.len()
        )));
    }
    let interior = &labels[1..labels.len() - 1];
    let mut morphemes = Vec::new();
    let mut current = String::from(g[0]);
    for i in 1..g.len() {
        if interior[i].opens_morpheme(interior[i - 1]) {
            morphemes.push(std::mem::take(&mut current));
        }
        current.push_str(g[i]);
    }
    morphemes.push(current);
    SegmentedWord::new(surface, morphemes)
}
