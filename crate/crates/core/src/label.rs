//! The bragging taxonomy and its binary projection.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// One of the six bragging types, or no bragging at all.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BraggingLabel {
    Achievement,
    Action,
    Feeling,
    Trait,
    Possession,
    Affiliation,
    NotBragging,
}

impl BraggingLabel {
    pub const ALL: [BraggingLabel; 7] = [
        BraggingLabel::Achievement,
        BraggingLabel::Action,
        BraggingLabel::Feeling,
        BraggingLabel::Trait,
        BraggingLabel::Possession,
        BraggingLabel::Affiliation,
        BraggingLabel::NotBragging,
    ];

    pub const BRAGGING_TYPES: [BraggingLabel; 6] = [
        BraggingLabel::Achievement,
        BraggingLabel::Action,
        BraggingLabel::Feeling,
        BraggingLabel::Trait,
        BraggingLabel::Possession,
        BraggingLabel::Affiliation,
    ];

    pub fn is_bragging(self) -> bool {
        self != BraggingLabel::NotBragging
    }

    pub fn binary(self) -> BinaryLabel {
        if self.is_bragging() {
            BinaryLabel::Bragging
        } else {
            BinaryLabel::NotBragging
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BraggingLabel::Achievement => "ACHIEVEMENT",
            BraggingLabel::Action => "ACTION",
            BraggingLabel::Feeling => "FEELING",
            BraggingLabel::Trait => "TRAIT",
            BraggingLabel::Possession => "POSSESSION",
            BraggingLabel::Affiliation => "AFFILIATION",
            BraggingLabel::NotBragging => "NOT_BRAGGING",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for BraggingLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BraggingLabel {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_uppercase().replace([' ', '-'], "_");
        BraggingLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == norm)
            .ok_or_else(|| crate::Error::InvalidInput(format!("unknown bragging label `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BinaryLabel {
    Bragging,
    NotBragging,
}

impl BinaryLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            BinaryLabel::Bragging => "BRAGGING",
            BinaryLabel::NotBragging => "NOT_BRAGGING",
        }
    }
}

impl fmt::Display for BinaryLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which classification problem a label vector belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Task {
    #[serde(alias = "binary")]
    Binary,
    #[serde(alias = "seven_class")]
    SevenClass,
}

impl Task {
    pub fn num_classes(self) -> usize {
        match self {
            Task::Binary => 2,
            Task::SevenClass => 7,
        }
    }

    /// Class names in the fixed order used for class indices.
    pub fn class_names(self) -> Vec<String> {
        match self {
            Task::Binary => vec!["BRAGGING".into(), "NOT_BRAGGING".into()],
            Task::SevenClass => BraggingLabel::ALL.iter().map(|l| l.to_string()).collect(),
        }
    }

    /// Class index of a seven-class label under this task.
    pub fn class_of(self, label: BraggingLabel) -> usize {
        match self {
            Task::Binary => match label.binary() {
                BinaryLabel::Bragging => 0,
                BinaryLabel::NotBragging => 1,
            },
            Task::SevenClass => label.index(),
        }
    }
}

impl FromStr for Task {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "binary" => Ok(Task::Binary),
            "seven_class" | "7class" | "7_class" | "multiclass" | "multi_class" => Ok(Task::SevenClass),
            other => Err(crate::Error::InvalidInput(format!("unknown task `{other}`"))),
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Binary => "binary",
            Task::SevenClass => "seven_class",
        })
    }
}
