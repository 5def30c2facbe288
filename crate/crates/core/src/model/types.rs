use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// Declares a fieldless enum with a fixed textual code per variant, used for
/// display, parsing, and every file format.
macro_rules! coded_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $code:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn code(self) -> &'static str {
                match self {
                    $($name::$variant => $code),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.code())
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($code => Ok($name::$variant),)+
                    other => Err(Error::Parse(format!(
                        concat!("unknown ", stringify!($name), " `{}`"),
                        other
                    ))),
                }
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.serialize_str(self.code())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                let s = String::deserialize(deserializer)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

coded_enum! {
    /// One of the three alternatives of every choice task.
    AlternativeId {
        StatusQuo => "status-quo",
        SharedEv => "shared-ev",
        SharedEbike => "shared-ebike",
    }
}

impl AlternativeId {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn is_shared(self) -> bool {
        !matches!(self, AlternativeId::StatusQuo)
    }
}

coded_enum! {
    /// The mode a respondent currently uses for a given trip.
    CurrentMode {
        Car => "car",
        PublicTransport => "pt",
        Bike => "bike",
        Walk => "walk",
    }
}

coded_enum! {
    AgeGroup {
        UpTo35 => "le35",
        From36To59 => "36to59",
        From60 => "ge60",
    }
}

coded_enum! {
    /// Household income band. `Missing` never matches an income predicate.
    IncomeBand {
        Low => "low",
        Middle => "middle",
        High => "high",
        Missing => "missing",
    }
}

coded_enum! {
    TripPurpose {
        Commute => "commute",
        Leisure => "leisure",
        Shopping => "shopping",
    }
}

coded_enum! {
    /// The two experiments differ in attribute construction and in the
    /// unit of the congestion covariate.
    DatasetKind {
        Commute => "commute",
        NonCommute => "non-commute",
    }
}

coded_enum! {
    /// Attribute a utility term multiplies its coefficient with.
    Covariate {
        Constant => "constant",
        TravelTime => "travel-time",
        TravelCost => "travel-cost",
        AccessEgress => "access-egress",
        Congestion => "congestion",
        ParkingSearch => "parking-search",
        ParkingFee => "parking-fee",
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Demographics {
    pub age_group: AgeGroup,
    pub higher_education: bool,
    pub income_band: IncomeBand,
    pub has_children: bool,
}

/// Socio-demographics plus the mode used for the trip at hand.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Persona {
    #[serde(flatten)]
    pub demographics: Demographics,
    pub current_mode: CurrentMode,
}

impl Persona {
    pub fn with_mode(self, current_mode: CurrentMode) -> Self {
        Self {
            current_mode,
            ..self
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TripContext {
    pub purpose: TripPurpose,
    pub distance_km: f64,
}

impl TripContext {
    pub fn kind(&self) -> DatasetKind {
        match self.purpose {
            TripPurpose::Commute => DatasetKind::Commute,
            TripPurpose::Leisure | TripPurpose::Shopping => DatasetKind::NonCommute,
        }
    }

    pub fn validate(&self, kind: DatasetKind) -> crate::Result<()> {
        if self.kind() != kind {
            return Err(Error::Dataset(format!(
                "{} trip in a {} dataset",
                self.purpose, kind
            )));
        }
        if !(self.distance_km.is_finite() && self.distance_km > 0.0) {
            return Err(Error::Dataset(format!(
                "distance must be positive, got {}",
                self.distance_km
            )));
        }
        if kind == DatasetKind::NonCommute && !crate::designer::NON_COMMUTE_DISTANCES_KM
            .iter()
            .any(|d| (d - self.distance_km).abs() < 1e-9)
        {
            return Err(Error::Dataset(format!(
                "non-commute distance must be one of 2, 5, 10 km, got {}",
                self.distance_km
            )));
        }
        Ok(())
    }
}

/// Level-of-service attributes of one alternative in one task.
///
/// Times are minutes and costs euros. `congestion_delay` is in minutes for
/// commute tasks and a fraction of travel time for non-commute tasks.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AttributeBundle {
    pub travel_time_min: f64,
    pub travel_cost_eur: f64,
    pub access_egress_time_min: f64,
    pub congestion_chance: f64,
    pub congestion_delay: f64,
    pub parking_search_time_min: f64,
    pub parking_fee_eur: f64,
}

impl AttributeBundle {
    pub const FIELDS: [&'static str; 7] = [
        "travel_time_min",
        "travel_cost_eur",
        "access_egress_time_min",
        "congestion_chance",
        "congestion_delay",
        "parking_search_time_min",
        "parking_fee_eur",
    ];

    pub fn values(&self) -> [f64; 7] {
        [
            self.travel_time_min,
            self.travel_cost_eur,
            self.access_egress_time_min,
            self.congestion_chance,
            self.congestion_delay,
            self.parking_search_time_min,
            self.parking_fee_eur,
        ]
    }

    pub fn from_values(v: [f64; 7]) -> Self {
        Self {
            travel_time_min: v[0],
            travel_cost_eur: v[1],
            access_egress_time_min: v[2],
            congestion_chance: v[3],
            congestion_delay: v[4],
            parking_search_time_min: v[5],
            parking_fee_eur: v[6],
        }
    }

    pub fn field_mut(&mut self, name: &str) -> crate::Result<&mut f64> {
        Ok(match name {
            "travel_time_min" => &mut self.travel_time_min,
            "travel_cost_eur" => &mut self.travel_cost_eur,
            "access_egress_time_min" => &mut self.access_egress_time_min,
            "congestion_chance" => &mut self.congestion_chance,
            "congestion_delay" => &mut self.congestion_delay,
            "parking_search_time_min" => &mut self.parking_search_time_min,
            "parking_fee_eur" => &mut self.parking_fee_eur,
            other => return Err(Error::Parse(format!("unknown attribute `{other}`"))),
        })
    }

    /// Checks sign and range constraints. Congestion delay is only required
    /// to be zero when the chance is zero.
    pub fn validate(&self, alternative: AlternativeId) -> crate::Result<()> {
        for (field, value) in Self::FIELDS.iter().zip(self.values()) {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::InvalidAttribute {
                    alternative,
                    field,
                    value,
                });
            }
        }
        if self.congestion_chance > 1.0 {
            return Err(Error::InvalidAttribute {
                alternative,
                field: "congestion_chance",
                value: self.congestion_chance,
            });
        }
        if self.congestion_chance == 0.0 && self.congestion_delay != 0.0 {
            return Err(Error::InvalidAttribute {
                alternative,
                field: "congestion_delay",
                value: self.congestion_delay,
            });
        }
        Ok(())
    }
}
