//! Seeded synthetic corpus shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use chrono::{Duration, TimeZone, Utc};
use quakener::preprocess::{format_timestamp, RawTweet};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SOURCE_NAMES: &[&str] = &[
    "Gaziantep", "Antep", "Kahramanmaras", "Hatay", "Antakya", "Iskenderun", "Malatya", "Adiyaman",
    "Diyarbakir", "Osmaniye", "Adana", "Elbistan", "Nurdagi", "Islahiye", "Sanliurfa", "Kilis",
    "Pazarcik", "Golbasi", "Defne", "Samandag", "Kirikhan", "Reyhanli", "Dortyol", "Kozan", "Ceyhan",
    "Besni", "Kahta", "Ergani", "Cermik", "Dogansehir", "Akcadag", "Yesilyurt", "Battalgazi", "Nizip",
    "Sehitkamil", "Sahinbey", "Arsuz", "Altinozu", "Payas", "Erzin", "Duzici", "Kadirli", "Bahce",
    "Hassa", "Yayladagi", "Kumlu", "Turkoglu", "Afsin", "Goksun", "Andirin", "Ekinozu", "Nurhak",
    "Sumbas", "Toprakkale",
];

/// Sentence frames. `{L}`/`{M}` are locations, `{P}` a capitalized
/// non-location, `{N}` a number, `{R}` a relative.
const FRAMES: &[&str] = &[
    "Massive earthquake hits {L} tonight, buildings collapsed everywhere",
    "Praying for everyone in {L}. Stay safe",
    "{L} residents need shelter after the quake",
    "Help! My {R} is trapped under rubble in {L}",
    "Breaking: magnitude {N} tremor felt in {L} and {M}",
    "Rescue teams arrived in {L} this morning",
    "I can't reach my family in {L}, please help",
    "Strong aftershock just now in {L}",
    "Roads to {L} are blocked by debris",
    "Volunteers from {P} are heading to {L}",
    "Just felt shaking here in {L}, everyone ok?",
    "Water and food needed in {L} urgently",
    "{P} says the death toll in {L} is rising",
    "Thoughts with the people of {L} tonight",
    "Landslide near {L} cut off the main road",
    "Tsunami warning issued for the coast near {L}",
    "Schools in {L} closed after the earthquake",
    "Our team is collecting donations for {L}",
    "Evacuation ongoing in {L}, stay away from the coast",
    "Power is out across {L} since the quake",
    "{P} confirmed {N} people injured in {L}",
    "Hospitals in {L} and {M} are overwhelmed with casualties",
    "Another tremor shook {L} an hour ago",
    "We felt it all the way from {M}, hope {L} is ok",
    "Update from {P}: relief efforts expanding to {L}",
    "My {R} in {L} is safe, thank you all for the support",
    "Images from {L} show total destruction",
    "Emergency shelters opened in {L} for displaced families",
    "The old bridge in {L} collapsed during the shaking",
    "{L} hit hard, at least {N} buildings destroyed",
    "Search and rescue continues in {L} through the night",
    "So much fear and panic in {L} right now",
    "Response team from {P} reached {L}",
    "Cracks in every wall of our house in {L}",
    "Fire broke out in {L} after the earthquake",
    "Is anyone from {L} online? Need information",
    "Sending solidarity to {L} and {M}",
    "Officials in {L} warn of more aftershocks",
    "{P} is sending help to {L} and nearby towns",
    "Still no news from my {R} in {L}",
];

/// Lines without any location, mixed into the training export.
const NO_LOCATION: &[&str] = &[
    "Praying for all the earthquake victims tonight",
    "Another strong aftershock, stay safe everyone",
    "Please donate to verified relief efforts only",
    "The scale of this disaster is heartbreaking",
    "{P} has opened a hotline for families of the injured",
    "Do not spread rumours about a new earthquake",
];

/// Everyday words for free-text clauses around the frames.
const FILLER: &[&str] = &[
    "i", "we", "they", "you", "just", "really", "still", "now", "today", "tonight", "yesterday", "morning",
    "everyone", "people", "family", "friends", "kids", "home", "house", "street", "city", "town", "news",
    "video", "photo", "phone", "call", "message", "waiting", "hoping", "looking", "trying", "going", "coming",
    "sleep", "slept", "woke", "night", "hours", "minutes", "again", "never", "always", "maybe", "please",
    "thank", "thanks", "god", "love", "heart", "sad", "scared", "worried", "okay", "safe", "hard", "long",
    "first", "second", "last", "time", "day", "week", "car", "outside", "inside", "cold", "dark", "light",
    "water", "food", "power", "internet", "signal", "school", "work", "office", "hospital", "doctors",
    "police", "soldiers", "neighbours", "everything", "nothing", "something", "here", "there", "where",
    "when", "why", "how", "what", "who", "this", "that", "these", "those", "so", "very", "too", "much",
    "many", "more", "less", "all", "some", "any", "no", "not", "can't", "don't", "won't", "is", "are",
    "was", "were", "has", "have", "had", "will", "would", "could", "should", "must", "the", "a", "an",
    "and", "or", "but", "if", "then", "because", "after", "before", "since", "until", "with", "without",
    "from", "to", "in", "on", "at", "by", "for", "of", "about", "Monday", "Tuesday", "Sunday", "January",
    "English", "Instagram", "Twitter", "OK", "LIVE", "RT",
];

const RELATIVES: &[&str] = &["nephew", "sister", "brother", "mother", "father", "cousin", "aunt", "uncle", "friend"];
const TRAIN_ORGS: &[&str] = &["AFAD", "Kizilay", "Red Cross", "UNICEF", "the Governor", "Mayor Yilmaz", "Ahmet", "Mehmet"];
const TEST_ORGS: &[&str] = &["NHK", "Red Cross", "UNICEF", "the Governor", "Mayor Tanaka", "Kenji", "the Prime Minister"];
const SUFFIXES: &[&str] = &["", "", "", " Stay strong", " Please share", " #PrayFor{H}", " https://t.co/x{N}Q", " \u{1F64F}"];

pub const TARGET_COUNTRY: &str = "JP";
pub const SOURCE_COUNTRY: &str = "TR";

const SYLLABLES: &[&str] = &[
    "ka", "ki", "ku", "ke", "ko", "sa", "shi", "su", "se", "so", "ta", "chi", "tsu", "te", "to", "na", "ni",
    "nu", "ne", "no", "ha", "hi", "fu", "he", "ho", "ma", "mi", "mu", "me", "mo", "ya", "yu", "yo", "ra",
    "ri", "ru", "re", "ro", "wa", "ga", "gi", "gu", "ge", "go", "za", "ji", "zu", "ze", "zo", "da", "de",
    "do", "ba", "bi", "bu", "be", "bo",
];
const NAME_TAILS: &[&str] = &["shima", "yama", "kawa", "saki", "hama", "machi", "mura", "zawa", "oka", "hara", ""];
const PREFIXES: &[&str] = &["Minami", "Kita", "Higashi", "Nishi", "Shin"];

fn frame_vocabulary() -> HashSet<String> {
    let mut v = HashSet::new();
    let lists: [&[&str]; 7] = [FRAMES, NO_LOCATION, RELATIVES, TRAIN_ORGS, TEST_ORGS, SUFFIXES, FILLER];
    for line in lists.into_iter().flatten() {
        for w in line.split(|c: char| !c.is_ascii_alphanumeric() && c != '\'') {
            if !w.is_empty() {
                v.insert(w.to_ascii_lowercase());
            }
        }
    }
    for kw in quakener::dataset::KeywordTable::default().all_keywords() {
        v.extend(kw.split(' ').map(str::to_owned));
    }
    v
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    c.next().map_or_else(String::new, |f| f.to_ascii_uppercase().to_string() + c.as_str())
}

/// `n` distinct Japanese-like place names, about a tenth of them two words.
pub fn target_names(n: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7a6e);
    let vocab = frame_vocabulary();
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(n);
    let taken_words: HashSet<String> = PREFIXES.iter().map(|p| p.to_ascii_lowercase()).collect();
    while out.len() < n {
        let k = rng.gen_range(2..=3);
        let mut stem: String = (0..k).map(|_| *SYLLABLES.choose(&mut rng).unwrap()).collect();
        stem.push_str(NAME_TAILS.choose(&mut rng).unwrap());
        if stem.len() < 5 || vocab.contains(&stem) || taken_words.contains(&stem) {
            continue;
        }
        let name = if rng.gen_bool(0.1) {
            format!("{} {}", PREFIXES.choose(&mut rng).unwrap(), capitalize(&stem))
        } else {
            capitalize(&stem)
        };
        if seen.insert(name.to_ascii_lowercase()) {
            out.push(name);
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn geonames_line(id: u64, name: &str, lat: f64, lon: f64, class: char, code: &str, cc: &str, pop: u64) -> String {
    let ascii = name;
    format!("{id}\t{name}\t{ascii}\t\t{lat:.5}\t{lon:.5}\t{class}\t{code}\t{cc}\t\t\t\t\t\t{pop}\t\t0\tAsia/Tokyo\t2024-01-01\n")
}

/// GeoNames-format dump with the source and target places and both
/// countries.
pub fn geonames_dump(targets: &[String], seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e0);
    let mut out = String::new();
    out.push_str(&geonames_line(1861060, "Japan", 35.68536, 139.75309, 'A', "PCLI", "JP", 126_529_100));
    out.push_str(&geonames_line(298795, "Turkey", 39.0, 35.0, 'A', "PCLI", "TR", 82_319_724));
    for (i, n) in SOURCE_NAMES.iter().enumerate() {
        let (lat, lon) = (rng.gen_range(36.0..38.5), rng.gen_range(35.5..40.0));
        out.push_str(&geonames_line(300_000 + i as u64, n, lat, lon, 'P', "PPL", "TR", rng.gen_range(1_000..900_000)));
    }
    for (i, n) in targets.iter().enumerate() {
        let (lat, lon) = (rng.gen_range(33.0..41.0), rng.gen_range(130.0..142.0));
        out.push_str(&geonames_line(2_000_000 + i as u64, n, lat, lon, 'P', "PPL", "JP", rng.gen_range(1_000..900_000)));
    }
    out
}

fn clause(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(2..=7);
    let words: Vec<&str> = (0..n).map(|_| *FILLER.choose(rng).unwrap()).collect();
    capitalize(&words.join(" "))
}

/// Wraps a filled frame in optional free-text clauses.
fn decorate(text: String, rng: &mut ChaCha8Rng) -> String {
    let mut out = text;
    if rng.gen_bool(0.4) {
        out = format!("{}. {out}", clause(rng));
    }
    if rng.gen_bool(0.3) {
        out = format!("{out}. {}", clause(rng));
    }
    out
}

fn casing(text: String, rng: &mut ChaCha8Rng) -> String {
    match rng.gen_range(0..20) {
        0..=2 => text.to_lowercase(),
        3 => text.to_uppercase(),
        _ => text,
    }
}

struct Filler<'a> {
    names: &'a [String],
    orgs: &'a [&'a str],
    event_tag: &'a str,
}

fn fill(frame: &str, f: &Filler, rng: &mut ChaCha8Rng) -> (String, Vec<String>) {
    let mut used = Vec::new();
    let mut out = String::new();
    let mut rest = frame;
    while let Some(i) = rest.find('{') {
        out.push_str(&rest[..i]);
        let key = &rest[i + 1..i + 2];
        rest = &rest[i + 3..];
        match key {
            "L" | "M" => {
                let mut n = f.names.choose(rng).unwrap().clone();
                while used.contains(&n) {
                    n = f.names.choose(rng).unwrap().clone();
                }
                out.push_str(&n);
                used.push(n);
            }
            "P" => out.push_str(f.orgs.choose(rng).unwrap()),
            "R" => out.push_str(RELATIVES.choose(rng).unwrap()),
            "N" => write!(out, "{}", rng.gen_range(2..300)).unwrap(),
            "H" => out.push_str(f.event_tag),
            _ => unreachable!("unknown slot {key}"),
        }
    }
    out.push_str(rest);
    (out, used)
}

fn tweet(id: String, day: i64, secs: i64, content: String, lang: &str, hashtags: Option<Vec<String>>) -> RawTweet {
    RawTweet {
        id,
        timestamp: Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap() + Duration::days(day) + Duration::seconds(secs),
        content,
        language_tag: Some(lang.to_owned()),
        hashtags,
    }
}

/// Source-country export: location tweets with location hashtags, some
/// location-free tweets, a few non-English rows and retweet duplicates.
pub fn train_tweets(n: usize, seed: u64) -> Vec<RawTweet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x51);
    let names: Vec<String> = SOURCE_NAMES.iter().map(|s| s.to_string()).collect();
    let f = Filler {
        names: &names,
        orgs: TRAIN_ORGS,
        event_tag: "Turkey",
    };
    let mut out: Vec<RawTweet> = Vec::with_capacity(n);
    while out.len() < n {
        let id = format!("tr{}", out.len());
        let (day, secs) = (rng.gen_range(36..44), rng.gen_range(0..86_400));
        let roll = rng.gen_range(0..100);
        if roll < 3 {
            out.push(tweet(id, day, secs, "Deprem bolgesinde yardim bekleniyor".into(), "tr", None));
            continue;
        }
        if roll < 6 && !out.is_empty() {
            let orig = out[rng.gen_range(0..out.len())].clone();
            out.push(RawTweet { id, ..orig });
            continue;
        }
        let (frame, located) = if roll < 14 {
            (*NO_LOCATION.choose(&mut rng).unwrap(), false)
        } else {
            (*FRAMES.choose(&mut rng).unwrap(), true)
        };
        let suffix = *SUFFIXES.choose(&mut rng).unwrap();
        let (text, used) = fill(&format!("{frame}{suffix}"), &f, &mut rng);
        let text = casing(decorate(text, &mut rng), &mut rng);
        let mut tags = vec!["TurkeyEarthquake".to_owned()];
        let hashtags = if located && rng.gen_bool(0.8) {
            tags.extend(used.iter().cloned());
            Some(tags)
        } else if located {
            // inline hashtag only, no hashtag column
            let text = format!("{text} #{}", used[0]);
            out.push(tweet(id, day, secs, text, "en", None));
            continue;
        } else {
            Some(tags)
        };
        out.push(tweet(id, day, secs, text, "en", hashtags));
    }
    out
}

/// Target-country tweets, each mentioning at least one of `targets`. Contents
/// are distinct after cleaning and every row is English.
pub fn test_tweets(n: usize, targets: &[String], seed: u64) -> Vec<RawTweet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7e57);
    let f = Filler {
        names: targets,
        orgs: TEST_ORGS,
        event_tag: "Japan",
    };
    let cfg = quakener::preprocess::CleanerConfig::default();
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let frame = *FRAMES.choose(&mut rng).unwrap();
        let suffix = *SUFFIXES.choose(&mut rng).unwrap();
        let (text, _) = fill(&format!("{frame}{suffix}"), &f, &mut rng);
        let text = casing(decorate(text, &mut rng), &mut rng);
        let Some(clean) = quakener::preprocess::clean(&text, &cfg) else {
            continue;
        };
        if !seen.insert(clean) {
            continue;
        }
        // most tweets on the event day, a tail afterwards
        let day = if rng.gen_bool(0.6) { 0 } else { rng.gen_range(1..7) };
        let id = format!("jp{}", out.len());
        out.push(tweet(id, day, rng.gen_range(0..86_400), text, "en", Some(vec!["JapanEarthquake2024".into()])));
    }
    out
}

pub fn write_tweets_csv(path: &Path, tweets: &[RawTweet]) {
    let mut w = csv::Writer::from_path(path).unwrap();
    w.write_record(["id", "date", "content", "lang", "hashtags"]).unwrap();
    for t in tweets {
        let tags = t.hashtags.as_ref().map(|h| h.join(";")).unwrap_or_default();
        w.write_record([
            t.id.as_str(),
            &format_timestamp(&t.timestamp),
            &t.content,
            t.language_tag.as_deref().unwrap_or(""),
            &tags,
        ])
        .unwrap();
    }
    w.flush().unwrap();
}

/// A USGS-style catalog with epicenters near the first targets.
pub fn usgs_csv(targets: &[String], geonames: &str) -> String {
    let mut out = String::from("time,latitude,longitude,depth,mag,magType,place,type\n");
    let coords: Vec<(String, f64, f64)> = geonames
        .lines()
        .map(|l| l.split('\t').collect::<Vec<_>>())
        .map(|c| (c[1].to_owned(), c[4].parse().unwrap(), c[5].parse().unwrap()))
        .collect();
    for (i, t) in targets.iter().take(3).enumerate() {
        let (_, lat, lon) = coords.iter().find(|c| &c.0 == t).unwrap();
        writeln!(
            out,
            "2024-01-01T07:1{i}:00.000Z,{:.4},{:.4},10,{:.1},mww,\"{} km NE of {t}, Japan\",earthquake",
            lat + 0.05,
            lon + 0.05,
            7.5 - i as f64,
            5 + i
        )
        .unwrap();
    }
    out.push_str("1950-05-01T00:00:00.000Z,38.0,37.0,10,7.2,mw,\"10 km S of Malatya, Turkey\",earthquake\n");
    out.push_str("1990-05-01T00:00:00.000Z,38.0,37.0,10,,mw,\"blank magnitude\",earthquake\n");
    out
}
