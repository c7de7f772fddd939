use std::collections::HashSet;

use serde_json::Value;

use crate::text::casefold;

/// Outcome of asking an external geocoder about a name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Confirmed,
    Unconfirmed,
    /// The service could not be reached or gave an unusable answer.
    Unavailable,
}

/// Second-opinion check for candidate location names.
///
/// Implementations must not fail: transport problems are reported as
/// [`Verdict::Unavailable`].
pub trait LocationVerifier {
    fn confirm(&self, name: &str) -> Verdict;
}

/// Confirms names from a fixed list, e.g. a cache of earlier geocoder
/// answers. Everything else is unconfirmed.
#[derive(Debug, Clone, Default)]
pub struct AllowListVerifier {
    allowed: HashSet<String>,
}

impl AllowListVerifier {
    pub fn new<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        AllowListVerifier {
            allowed: names.into_iter().map(|n| casefold(n.as_ref())).collect(),
        }
    }
}

impl LocationVerifier for AllowListVerifier {
    fn confirm(&self, name: &str) -> Verdict {
        if self.allowed.contains(&casefold(name)) {
            Verdict::Confirmed
        } else {
            Verdict::Unconfirmed
        }
    }
}

// OpenCage `components._type` values that denote a place.
const PLACE_TYPES: &[&str] = &[
    "city",
    "county",
    "country",
    "neighbourhood",
    "province",
    "region",
    "state",
    "state_district",
    "town",
    "village",
    "hamlet",
    "island",
    "municipality",
    "postcode",
    "suburb",
];

/// Interprets an OpenCage forward-geocoding JSON response body.
pub fn parse_opencage_response(body: &str) -> Verdict {
    let Ok(doc) = serde_json::from_str::<Value>(body) else {
        return Verdict::Unavailable;
    };
    let code = doc["status"]["code"].as_u64();
    if code.is_some_and(|c| c != 200) {
        return Verdict::Unavailable;
    }
    let Some(results) = doc["results"].as_array() else {
        return Verdict::Unavailable;
    };
    let is_place = results.iter().any(|r| {
        r["components"]["_type"]
            .as_str()
            .is_some_and(|t| PLACE_TYPES.contains(&t))
    });
    if is_place {
        Verdict::Confirmed
    } else {
        Verdict::Unconfirmed
    }
}

#[cfg(feature = "opencage")]
pub use opencage::OpenCageVerifier;

#[cfg(feature = "opencage")]
mod opencage {
    use super::*;
    use log::warn;

    const ENDPOINT: &str = "https://api.opencagedata.com/geocode/v1/json";

    /// Live OpenCage binding. The API key comes from `OPENCAGE_API_KEY`.
    pub struct OpenCageVerifier {
        key: String,
        agent: ureq::Agent,
    }

    impl OpenCageVerifier {
        pub fn from_env() -> Option<Self> {
            let key = std::env::var("OPENCAGE_API_KEY").ok()?;
            Some(OpenCageVerifier {
                key,
                agent: ureq::AgentBuilder::new()
                    .timeout(std::time::Duration::from_secs(10))
                    .build(),
            })
        }
    }

    impl LocationVerifier for OpenCageVerifier {
        fn confirm(&self, name: &str) -> Verdict {
            let resp = self
                .agent
                .get(ENDPOINT)
                .query("q", name)
                .query("key", &self.key)
                .query("limit", "3")
                .query("no_annotations", "1")
                .call();
            let body = match resp {
                Ok(r) => r.into_string().map_err(|e| e.to_string()),
                Err(e) => Err(e.to_string()),
            };
            match body {
                Ok(body) => parse_opencage_response(&body),
                Err(e) => {
                    warn!("opencage request for {name:?} failed: {e}");
                    Verdict::Unavailable
                }
            }
        }
    }
}
