//! Demographic labels, wildcard cohorts and the 9-way one-hot encoding.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Gender {
    Male,
    Female,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Age {
    Young,
    Middle,
    Old,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Race {
    Asian,
    Caucasian,
    AfricanAmerican,
    Mixed,
}

impl Gender {
    pub const ALL: [Gender; 2] = [Gender::Male, Gender::Female];
}

impl Age {
    pub const ALL: [Age; 3] = [Age::Young, Age::Middle, Age::Old];
}

impl Race {
    pub const ALL: [Race; 4] = [Race::Asian, Race::Caucasian, Race::AfricanAmerican, Race::Mixed];
}

/// One value per demographic group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AttributeLabel {
    pub gender: Gender,
    pub age: Age,
    pub race: Race,
}

impl AttributeLabel {
    pub fn new(gender: Gender, age: Age, race: Race) -> Self {
        Self { gender, age, race }
    }

    /// All 24 labels, gender-major.
    pub fn all() -> impl Iterator<Item = AttributeLabel> {
        Gender::ALL.into_iter().flat_map(|g| {
            Age::ALL
                .into_iter()
                .flat_map(move |a| Race::ALL.into_iter().map(move |r| AttributeLabel::new(g, a, r)))
        })
    }

    pub fn has(&self, value: AttributeValue) -> bool {
        match value {
            AttributeValue::Gender(g) => self.gender == g,
            AttributeValue::Age(a) => self.age == a,
            AttributeValue::Race(r) => self.race == r,
        }
    }
}

impl fmt::Display for AttributeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}/{}/{}",
            AttributeValue::Gender(self.gender),
            AttributeValue::Age(self.age),
            AttributeValue::Race(self.race)
        )
    }
}

/// Encodes a label as nine 0/1 flags in the order
/// male, female, young, middle, old, asian, caucasian, african-american, mixed.
pub fn encode_attributes(label: &AttributeLabel) -> [u8; 9] {
    let mut out = [0u8; 9];
    out[label.gender as usize] = 1;
    out[2 + label.age as usize] = 1;
    out[5 + label.race as usize] = 1;
    out
}

/// A single group value such as `female` or `old`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AttributeValue {
    Gender(Gender),
    Age(Age),
    Race(Race),
}

impl AttributeValue {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Gender(Gender::Male) => "male",
            Self::Gender(Gender::Female) => "female",
            Self::Age(Age::Young) => "young",
            Self::Age(Age::Middle) => "middle",
            Self::Age(Age::Old) => "old",
            Self::Race(Race::Asian) => "asian",
            Self::Race(Race::Caucasian) => "caucasian",
            Self::Race(Race::AfricanAmerican) => "african-american",
            Self::Race(Race::Mixed) => "mixed",
        }
    }

    pub fn cohort(self) -> Cohort {
        let mut c = Cohort::any();
        match self {
            Self::Gender(g) => c.gender = Some(g),
            Self::Age(a) => c.age = Some(a),
            Self::Race(r) => c.race = Some(r),
        }
        c
    }
}

impl fmt::Display for AttributeValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AttributeValue {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Ok(match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "male" => Self::Gender(Gender::Male),
            "female" => Self::Gender(Gender::Female),
            "young" => Self::Age(Age::Young),
            "middle" => Self::Age(Age::Middle),
            "old" => Self::Age(Age::Old),
            "asian" => Self::Race(Race::Asian),
            "caucasian" => Self::Race(Race::Caucasian),
            "african-american" => Self::Race(Race::AfricanAmerican),
            "mixed" => Self::Race(Race::Mixed),
            other => return Err(Error::OutOfRange(format!("unknown attribute value {other:?}"))),
        })
    }
}

impl Serialize for AttributeValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for AttributeValue {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A cohort selector; `None` in a group matches every value of that group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Cohort {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gender: Option<Gender>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub age: Option<Age>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub race: Option<Race>,
}

impl Cohort {
    pub fn any() -> Self {
        Self::default()
    }

    pub fn matches(&self, label: &AttributeLabel) -> bool {
        self.gender.is_none_or(|g| g == label.gender)
            && self.age.is_none_or(|a| a == label.age)
            && self.race.is_none_or(|r| r == label.race)
    }

    /// Every selector over the three groups, including the all-wildcard one.
    pub fn all() -> impl Iterator<Item = Cohort> {
        let genders = std::iter::once(None).chain(Gender::ALL.map(Some));
        genders.flat_map(|gender| {
            std::iter::once(None).chain(Age::ALL.map(Some)).flat_map(move |age| {
                std::iter::once(None)
                    .chain(Race::ALL.map(Some))
                    .map(move |race| Cohort { gender, age, race })
            })
        })
    }
}

impl From<AttributeLabel> for Cohort {
    fn from(l: AttributeLabel) -> Self {
        Cohort {
            gender: Some(l.gender),
            age: Some(l.age),
            race: Some(l.race),
        }
    }
}

impl fmt::Display for Cohort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let part = |v: Option<AttributeValue>| v.map_or("*", |v| v.as_str());
        write!(
            f,
            "{}/{}/{}",
            part(self.gender.map(AttributeValue::Gender)),
            part(self.age.map(AttributeValue::Age)),
            part(self.race.map(AttributeValue::Race))
        )
    }
}

impl FromStr for Cohort {
    type Err = Error;

    /// Parses comma- or slash-separated values, e.g. `male,old,asian` or
    /// `female/*/*`. Omitted groups are wildcards.
    fn from_str(s: &str) -> Result<Self, Error> {
        let mut c = Cohort::any();
        for part in s
            .split([',', '/'])
            .map(str::trim)
            .filter(|p| !p.is_empty() && *p != "*")
        {
            let dup = || Error::OutOfRange(format!("group given twice in cohort {s:?}"));
            match part.parse::<AttributeValue>()? {
                AttributeValue::Gender(g) => {
                    if c.gender.replace(g).is_some() {
                        return Err(dup());
                    }
                }
                AttributeValue::Age(a) => {
                    if c.age.replace(a).is_some() {
                        return Err(dup());
                    }
                }
                AttributeValue::Race(r) => {
                    if c.race.replace(r).is_some() {
                        return Err(dup());
                    }
                }
            }
        }
        Ok(c)
    }
}
