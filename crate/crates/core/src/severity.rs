//! Geocoded severity maps, epicenter catalogs and tweet timelines.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::{DateTime, Duration, NaiveDate, Utc};
use serde::Serialize;
use serde_json::{json, Value};

use crate::dataset::{AnnotatedExample, Label};
use crate::gazetteer::{Gazetteer, LocationRecord};
use crate::preprocess::{parse_timestamp, CleanTweet};
use crate::{Error, Result};

pub const EARTH_RADIUS_KM: f64 = 6371.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Yellow,
    Orange,
    Red,
}

impl Color {
    /// yellow below a third of the maximum, red from two thirds up.
    pub fn for_count(count: u64, max: u64) -> Color {
        if 3 * count < max {
            Color::Yellow
        } else if 3 * count < 2 * max {
            Color::Orange
        } else {
            Color::Red
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Color::Yellow => "yellow",
            Color::Orange => "orange",
            Color::Red => "red",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeverityPoint {
    pub name: String,
    pub latitude: f64,
    pub longitude: f64,
    pub count: u64,
    pub severity: f64,
    pub color: Color,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpicenterRecord {
    pub time: DateTime<Utc>,
    pub latitude: f64,
    pub longitude: f64,
    pub magnitude: f64,
    pub place: String,
}

pub fn in_bounds(latitude: f64, longitude: f64) -> bool {
    (-90.0..=90.0).contains(&latitude) && (-180.0..=180.0).contains(&longitude)
}

/// Resolves every GPE span through the gazetteer and aggregates mentions per
/// place. Returns the points (most mentioned first, then by name) and the
/// number of spans that did not resolve.
pub fn geocode_entities(tagged: &[AnnotatedExample], g: &Gazetteer) -> (Vec<SeverityPoint>, usize) {
    let mut counts: HashMap<u64, (u64, &LocationRecord)> = HashMap::new();
    let mut unresolved = 0;
    for ex in tagged {
        for span in ex.spans.iter().filter(|s| s.label == Label::Gpe) {
            let Some(text) = ex.span_text(span) else {
                unresolved += 1;
                continue;
            };
            match g.resolve(text) {
                Some(rec) => counts.entry(rec.geoname_id).or_insert((0, rec)).0 += 1,
                None => unresolved += 1,
            }
        }
    }
    let max = counts.values().map(|c| c.0).max().unwrap_or(0);
    let mut points: Vec<SeverityPoint> = counts
        .into_values()
        .map(|(count, rec)| {
            SeverityPoint {
                name: rec.name.clone(),
                latitude: rec.latitude,
                longitude: rec.longitude,
                count,
                severity: count as f64 / max as f64,
                color: Color::for_count(count, max),
            }
        })
        .collect();
    points.sort_by(|a, b| {
        b.count
            .cmp(&a.count)
            .then_with(|| a.name.cmp(&b.name))
            .then_with(|| a.latitude.total_cmp(&b.latitude))
            .then_with(|| a.longitude.total_cmp(&b.longitude))
    });
    (points, unresolved)
}

/// Builds the FeatureCollection. `metadata`, when given, is attached as a
/// top-level `metadata` member.
pub fn geojson_value(points: &[SeverityPoint], metadata: Option<&Value>) -> Result<Value> {
    let mut features = Vec::with_capacity(points.len());
    for p in points {
        if !in_bounds(p.latitude, p.longitude) || !p.latitude.is_finite() || !p.longitude.is_finite() {
            return Err(Error::OutOfBounds {
                name: p.name.clone(),
                latitude: p.latitude,
                longitude: p.longitude,
            });
        }
        features.push(json!({
            "type": "Feature",
            "geometry": {"type": "Point", "coordinates": [p.longitude, p.latitude]},
            "properties": {
                "name": p.name,
                "count": p.count,
                "severity": p.severity,
                "color": p.color.as_str(),
            },
        }));
    }
    let mut fc = json!({"type": "FeatureCollection", "features": features});
    if let Some(meta) = metadata {
        fc["metadata"] = meta.clone();
    }
    Ok(fc)
}

pub fn emit_geojson(points: &[SeverityPoint], path: &Path, metadata: Option<&Value>) -> Result<()> {
    let value = geojson_value(points, metadata)?;
    let mut bytes = serde_json::to_vec_pretty(&value)?;
    bytes.push(b'\n');
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn header_index(headers: &csv::StringRecord, name: &str, path: &Path) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::MissingColumn {
            path: path.to_owned(),
            column: name.to_owned(),
        })
}

/// Reads a USGS catalog export. Rows with an unparseable time, coordinate or
/// magnitude are skipped and counted.
pub fn load_usgs_catalog(path: &Path) -> Result<(Vec<EpicenterRecord>, usize)> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    let headers = rdr.headers().map_err(|e| Error::csv(path, e))?.clone();
    let [time, lat, lon, mag, place] =
        ["time", "latitude", "longitude", "mag", "place"].map(|c| header_index(&headers, c, path));
    let (time, lat, lon, mag, place) = (time?, lat?, lon?, mag?, place?);

    let mut out = Vec::new();
    let mut skipped = 0;
    for row in rdr.records() {
        let row = row.map_err(|e| Error::csv(path, e))?;
        let field = |i: usize| row.get(i).map(str::trim).unwrap_or("");
        let num = |i: usize| field(i).parse::<f64>().ok().filter(|x| x.is_finite());
        let parsed = (|| {
            let rec = EpicenterRecord {
                time: parse_timestamp(field(time))?,
                latitude: num(lat)?,
                longitude: num(lon)?,
                magnitude: num(mag)?,
                place: field(place).to_owned(),
            };
            in_bounds(rec.latitude, rec.longitude).then_some(rec)
        })();
        match parsed {
            Some(rec) => out.push(rec),
            None => skipped += 1,
        }
    }
    Ok((out, skipped))
}

/// Trailing region of a USGS place string: `"46 km NE of Suzu, Japan"` gives
/// `"Japan"`.
pub fn place_region(place: &str) -> &str {
    let tail = place.rsplit(',').next().unwrap_or(place).trim();
    match tail.find(" of ") {
        Some(i) if !place.contains(',') => tail[i + 4..].trim(),
        _ => tail,
    }
}

/// Country code of the gazetteer record answering to the place's region.
pub fn gazetteer_country(g: &Gazetteer) -> impl Fn(&str) -> Option<String> + '_ {
    move |place| {
        g.resolve(place_region(place))
            .map(|r| r.country_code.clone())
            .filter(|c| !c.is_empty())
    }
}

pub const UNKNOWN_COUNTRY: &str = "unknown";

pub fn historical_country_frequencies(
    catalog: &[EpicenterRecord],
    min_magnitude: f64,
    country_of: &dyn Fn(&str) -> Option<String>,
) -> BTreeMap<String, u64> {
    let mut freq = BTreeMap::new();
    for e in catalog.iter().filter(|e| e.magnitude >= min_magnitude) {
        let country = country_of(&e.place).unwrap_or_else(|| UNKNOWN_COUNTRY.to_owned());
        *freq.entry(country).or_insert(0) += 1;
    }
    freq
}

/// Great-circle distance in kilometres between `(lat, lon)` pairs in degrees.
pub fn haversine(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (la1, lo1) = (a.0.to_radians(), a.1.to_radians());
    let (la2, lo2) = (b.0.to_radians(), b.1.to_radians());
    let h = ((la2 - la1) / 2.0).sin().powi(2) + la1.cos() * la2.cos() * ((lo2 - lo1) / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NearestEpicenter {
    pub name: String,
    pub count: u64,
    pub severity: f64,
    pub distance_km: f64,
    pub epicenter_place: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapComparison {
    pub points: Vec<NearestEpicenter>,
    pub weighted_mean_km: f64,
    /// Spearman correlation of severity against inverse nearest distance;
    /// `None` when either side has no variation.
    pub rank_correlation: Option<f64>,
}

pub fn compare_maps(points: &[SeverityPoint], epicenters: &[EpicenterRecord]) -> Result<MapComparison> {
    if points.is_empty() || epicenters.is_empty() {
        return Err(Error::InvalidInput(
            "map comparison needs at least one point and one epicenter".into(),
        ));
    }
    let nearest: Vec<NearestEpicenter> = points
        .iter()
        .map(|p| {
            let (d, e) = epicenters
                .iter()
                .map(|e| (haversine((p.latitude, p.longitude), (e.latitude, e.longitude)), e))
                .min_by(|a, b| a.0.total_cmp(&b.0))
                .expect("non-empty");
            NearestEpicenter {
                name: p.name.clone(),
                count: p.count,
                severity: p.severity,
                distance_km: d,
                epicenter_place: e.place.clone(),
            }
        })
        .collect();
    let total: u64 = nearest.iter().map(|n| n.count).sum();
    let weighted_mean_km = if total == 0 {
        nearest.iter().map(|n| n.distance_km).sum::<f64>() / nearest.len() as f64
    } else {
        nearest.iter().map(|n| n.count as f64 * n.distance_km).sum::<f64>() / total as f64
    };
    let sev: Vec<f64> = nearest.iter().map(|n| n.severity).collect();
    // inverse distance ranks are the reversed distance ranks
    let inv: Vec<f64> = nearest.iter().map(|n| -n.distance_km).collect();
    Ok(MapComparison {
        rank_correlation: spearman(&sev, &inv),
        points: nearest,
        weighted_mean_km,
    })
}

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    assert_eq!(xs.len(), ys.len());
    if xs.len() < 2 {
        return None;
    }
    let (rx, ry) = (average_ranks(xs), average_ranks(ys));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    (vx > 0.0 && vy > 0.0).then(|| cov / (vx * vy).sqrt())
}

/// Tweets per UTC day, with empty days inside the covered range set to 0.
pub fn timeline(tweets: &[CleanTweet]) -> BTreeMap<NaiveDate, u64> {
    let mut days: BTreeMap<NaiveDate, u64> = BTreeMap::new();
    for t in tweets {
        *days.entry(t.timestamp.date_naive()).or_insert(0) += 1;
    }
    if let (Some(&first), Some(&last)) = (days.keys().next(), days.keys().next_back()) {
        let mut d = first;
        while d < last {
            d += Duration::days(1);
            days.entry(d).or_insert(0);
        }
    }
    days
}

pub fn write_timeline_csv(path: &Path, days: &BTreeMap<NaiveDate, u64>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut body = String::from("date,count\n");
    for (d, c) in days {
        body.push_str(&format!("{},{c}\n", d.format("%Y-%m-%d")));
    }
    w.write_all(body.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::EntitySpan;
    use proptest::prelude::*;

    fn rec(id: u64, name: &str, lat: f64, lon: f64, cc: &str, pop: u64) -> LocationRecord {
        LocationRecord {
            geoname_id: id,
            name: name.into(),
            ascii_name: name.into(),
            alternate_names: vec![],
            latitude: lat,
            longitude: lon,
            feature_class: 'P',
            country_code: cc.into(),
            population: pop,
        }
    }

    fn japan() -> Gazetteer {
        Gazetteer::from_records([
            rec(1850147, "Tokyo", 35.6762, 139.6503, "JP", 8_336_599),
            rec(1853909, "Osaka", 34.6937, 135.5023, "JP", 2_592_413),
            rec(1861060, "Japan", 35.68536, 139.75309, "JP", 126_529_100),
        ])
    }

    fn gpe(text: &str, name: &str) -> AnnotatedExample {
        let start = text.find(name).unwrap();
        AnnotatedExample::new(text, vec![EntitySpan::new(start, start + name.len(), Label::Gpe)])
    }

    // oracle: law of haversines written out independently
    fn oracle_km(a: (f64, f64), b: (f64, f64)) -> f64 {
        let rad = std::f64::consts::PI / 180.0;
        let dlat = (b.0 - a.0) * rad;
        let dlon = (b.1 - a.1) * rad;
        let x = (1.0 - dlat.cos()) / 2.0 + (a.0 * rad).cos() * (b.0 * rad).cos() * (1.0 - dlon.cos()) / 2.0;
        2.0 * 6371.0 * x.sqrt().atan2((1.0 - x).max(0.0).sqrt())
    }

    #[test]
    fn colors_at_thresholds() {
        assert_eq!(Color::for_count(1, 3), Color::Orange);
        assert_eq!(Color::for_count(1, 4), Color::Yellow);
        assert_eq!(Color::for_count(2, 3), Color::Red);
        assert_eq!(Color::for_count(3, 5), Color::Orange);
        assert_eq!(Color::for_count(5, 5), Color::Red);
    }

    #[test]
    fn aggregates_mentions() {
        let g = japan();
        let tagged = vec![
            gpe("Tokyo shaking", "Tokyo"),
            gpe("in Tokyo now", "Tokyo"),
            gpe("tokyo trains stopped", "tokyo"),
            gpe("Osaka felt it", "Osaka"),
        ];
        let (points, unresolved) = geocode_entities(&tagged, &g);
        assert_eq!(unresolved, 0);
        assert_eq!(points.len(), 2);
        assert_eq!((points[0].name.as_str(), points[0].count), ("Tokyo", 3));
        assert_eq!((points[0].severity, points[0].color), (1.0, Color::Red));
        assert_eq!((points[1].name.as_str(), points[1].count), ("Osaka", 1));
        assert!((points[1].severity - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(points[1].color, Color::Orange);

        let (none, u) = geocode_entities(&[AnnotatedExample::unlabeled("quiet")], &g);
        assert!(none.is_empty() && u == 0);
        let (none, u) = geocode_entities(&[gpe("Atlantis-Not-A-Place", "Atlantis-Not-A-Place")], &g);
        assert!(none.is_empty());
        assert_eq!(u, 1);
    }

    #[test]
    fn geojson_shape() {
        let empty = geojson_value(&[], None).unwrap();
        assert_eq!(empty["type"], "FeatureCollection");
        assert_eq!(empty["features"].as_array().unwrap().len(), 0);

        let (points, _) = geocode_entities(&[gpe("Tokyo", "Tokyo")], &japan());
        let v = geojson_value(&points, Some(&json!({"seed": 7}))).unwrap();
        let f = &v["features"][0];
        assert_eq!(f["geometry"]["coordinates"], json!([139.6503, 35.6762]));
        for k in ["name", "count", "severity", "color"] {
            assert!(f["properties"].get(k).is_some());
        }
        assert_eq!(v["metadata"]["seed"], 7);

        let mut bad = points.clone();
        bad[0].latitude = 91.0;
        assert!(matches!(geojson_value(&bad, None), Err(Error::OutOfBounds { .. })));
    }

    #[test]
    fn geojson_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("map.geojson");
        let tagged = vec![gpe("Tokyo", "Tokyo"), gpe("Osaka", "Osaka"), gpe("Tokyo", "Tokyo")];
        let (points, _) = geocode_entities(&tagged, &japan());
        emit_geojson(&points, &path, None).unwrap();
        let v: Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
        let back: Vec<(String, u64, f64, f64)> = v["features"]
            .as_array()
            .unwrap()
            .iter()
            .map(|f| {
                let c = &f["geometry"]["coordinates"];
                (
                    f["properties"]["name"].as_str().unwrap().to_owned(),
                    f["properties"]["count"].as_u64().unwrap(),
                    c[1].as_f64().unwrap(),
                    c[0].as_f64().unwrap(),
                )
            })
            .collect();
        let want: Vec<_> = points
            .iter()
            .map(|p| (p.name.clone(), p.count, p.latitude, p.longitude))
            .collect();
        assert_eq!(back, want);
    }

    const USGS_HEADER: &str = "time,latitude,longitude,depth,mag,magType,nst,gap,dmin,rms,net,id,updated,place,type";

    #[test]
    fn usgs_catalog() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("usgs.csv");
        std::fs::write(
            &path,
            format!(
                "{USGS_HEADER}\n\
                 2024-01-01T07:10:09.476Z,37.4874,137.2710,10,7.5,mww,,,,,us,us6000m0xl,2024-01-01T00:00:00Z,\"42 km NE of Anamizu, Japan\",earthquake\n\
                 2024-01-01T07:18:00.000Z,37.5,137.3,10,,mww,,,,,us,x,2024-01-01T00:00:00Z,\"near Suzu, Japan\",earthquake\n"
            ),
        )
        .unwrap();
        let (recs, skipped) = load_usgs_catalog(&path).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(skipped, 1);
        assert_eq!(recs[0].magnitude, 7.5);
        assert_eq!(recs[0].place, "42 km NE of Anamizu, Japan");

        std::fs::write(&path, format!("{USGS_HEADER}\n")).unwrap();
        assert_eq!(load_usgs_catalog(&path).unwrap(), (vec![], 0));

        std::fs::write(&path, "time,latitude,longitude,place\n").unwrap();
        assert!(matches!(load_usgs_catalog(&path), Err(Error::MissingColumn { column, .. }) if column == "mag"));
    }

    fn quake(mag: f64, place: &str) -> EpicenterRecord {
        EpicenterRecord {
            time: parse_timestamp("2000-01-01T00:00:00Z").unwrap(),
            latitude: 0.0,
            longitude: 0.0,
            magnitude: mag,
            place: place.into(),
        }
    }

    #[test]
    fn country_frequencies() {
        let g = japan();
        let resolver = gazetteer_country(&g);
        let catalog = vec![
            quake(7.5, "42 km NE of Anamizu, Japan"),
            quake(7.1, "Japan"),
            quake(8.0, "Atlantis"),
            quake(6.9, "Osaka, Japan"),
        ];
        let f = historical_country_frequencies(&catalog, 7.0, &resolver);
        assert_eq!(f.get("JP"), Some(&2));
        assert_eq!(f.get(UNKNOWN_COUNTRY), Some(&1));
        assert!(historical_country_frequencies(&catalog, 9.5, &resolver).is_empty());
        assert_eq!(place_region("12 km S of Wajima"), "Wajima");
    }

    #[test]
    fn haversine_known_distances() {
        let tokyo = (35.6762, 139.6503);
        let osaka = (34.6937, 135.5023);
        let d = haversine(tokyo, osaka);
        assert!((d - oracle_km(tokyo, osaka)).abs() < 1.0);
        // spherical law of cosines as a second, unrelated formula
        let (p1, p2) = (tokyo.0.to_radians(), osaka.0.to_radians());
        let cosines = 6371.0
            * (p1.sin() * p2.sin() + p1.cos() * p2.cos() * (osaka.1 - tokyo.1).to_radians().cos()).acos();
        assert!((d - cosines).abs() < 1.0, "{d} vs {cosines}");
        assert!((392.0..393.0).contains(&d), "{d}");
        assert_eq!(haversine(tokyo, tokyo), 0.0);
        let anti = haversine((0.0, 0.0), (0.0, 180.0));
        assert!((anti - std::f64::consts::PI * 6371.0).abs() < 1.0);
    }

    fn point(name: &str, lat: f64, lon: f64, count: u64, max: u64) -> SeverityPoint {
        SeverityPoint {
            name: name.into(),
            latitude: lat,
            longitude: lon,
            count,
            severity: count as f64 / max as f64,
            color: Color::for_count(count, max),
        }
    }

    #[test]
    fn map_comparison() {
        let mut e = quake(7.5, "here");
        e.latitude = 37.0;
        e.longitude = 137.0;
        let one = compare_maps(&[point("a", 37.0, 137.0, 1, 1)], &[e.clone()]).unwrap();
        assert_eq!(one.points[0].distance_km, 0.0);
        assert_eq!(one.rank_correlation, None);

        let two = compare_maps(
            &[point("near", 37.1, 137.0, 5, 5), point("far", 35.0, 139.0, 1, 5)],
            &[e.clone()],
        )
        .unwrap();
        assert!(two.rank_correlation.unwrap() > 0.0);
        let expected = (5.0 * two.points[0].distance_km + two.points[1].distance_km) / 6.0;
        assert!((two.weighted_mean_km - expected).abs() < 1e-9);

        assert!(compare_maps(&[], &[e]).is_err());
        assert!(compare_maps(&[point("a", 0.0, 0.0, 1, 1)], &[]).is_err());
    }

    #[test]
    fn ranks_and_correlation() {
        assert_eq!(average_ranks(&[10.0, 20.0, 20.0, 5.0]), [2.0, 3.5, 3.5, 1.0]);
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), Some(-1.0));
        assert_eq!(spearman(&[1.0, 1.0], &[1.0, 2.0]), None);
    }

    fn tweet(ts: &str) -> CleanTweet {
        CleanTweet {
            id: ts.into(),
            timestamp: parse_timestamp(ts).unwrap(),
            content: "x".into(),
        }
    }

    #[test]
    fn timeline_fills_gaps() {
        assert!(timeline(&[]).is_empty());
        let one = timeline(&[tweet("2024-01-01T01:00:00Z"), tweet("2024-01-01T23:00:00Z")]);
        assert_eq!(one.len(), 1);
        let t = timeline(&[
            tweet("2024-01-03T01:00:00Z"),
            tweet("2023-12-31T10:00:00Z"),
            tweet("2024-01-03T02:00:00Z"),
        ]);
        let v: Vec<(String, u64)> = t.iter().map(|(d, c)| (d.to_string(), *c)).collect();
        assert_eq!(
            v,
            [
                ("2023-12-31".into(), 1),
                ("2024-01-01".into(), 0),
                ("2024-01-02".into(), 0),
                ("2024-01-03".into(), 2)
            ]
        );

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_timeline_csv(&path, &t).unwrap();
        let body = std::fs::read_to_string(&path).unwrap();
        assert!(body.starts_with("date,count\n2023-12-31,1\n2024-01-01,0\n"));
    }

    fn coord() -> impl Strategy<Value = (f64, f64)> {
        (-90.0f64..=90.0, -180.0f64..=180.0)
    }

    proptest! {
        #[test]
        fn haversine_metric_properties(a in coord(), b in coord()) {
            let d = haversine(a, b);
            prop_assert!(d >= 0.0);
            prop_assert_eq!(d, haversine(b, a));
            prop_assert_eq!(haversine(a, a), 0.0);
            prop_assert!(d <= std::f64::consts::PI * EARTH_RADIUS_KM + 1e-6);
        }

        #[test]
        fn conservation(mentions in prop::collection::vec((0usize..4, any::<bool>()), 0..40)) {
            let g = japan();
            let names = ["Tokyo", "Osaka", "Japan", "Nowhere"];
            let tagged: Vec<_> = mentions.iter().map(|&(i, lower)| {
                let n = if lower { names[i].to_lowercase() } else { names[i].to_owned() };
                gpe(&format!("{n} shook"), &n)
            }).collect();
            let resolvable = mentions.iter().filter(|(i, _)| *i < 3).count() as u64;
            let (points, unresolved) = geocode_entities(&tagged, &g);
            prop_assert_eq!(points.iter().map(|p| p.count).sum::<u64>(), resolvable);
            prop_assert_eq!(unresolved as u64, mentions.len() as u64 - resolvable);
            if !points.is_empty() {
                prop_assert!(points.iter().any(|p| p.severity == 1.0));
                let max = points.iter().map(|p| p.count).max().unwrap();
                for p in &points {
                    prop_assert_eq!(p.severity == 1.0, p.count == max);
                }
            }
        }

        #[test]
        fn timeline_sums(offsets in prop::collection::vec(0i64..(20 * 86_400), 0..50)) {
            let base = parse_timestamp("2024-01-01T00:00:00Z").unwrap();
            let tweets: Vec<_> = offsets.iter().map(|&s| CleanTweet {
                id: s.to_string(), timestamp: base + Duration::seconds(s), content: String::new(),
            }).collect();
            let t = timeline(&tweets);
            prop_assert_eq!(t.values().sum::<u64>(), tweets.len() as u64);
            if let (Some(a), Some(b)) = (t.keys().next(), t.keys().next_back()) {
                prop_assert_eq!(t.len() as i64, (*b - *a).num_days() + 1);
            }
        }
    }
}
