//! The 88-key keyboard: pitch/key mapping, black/white classification and
//! press-point geometry used as assignment targets.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of keys on a full-size keyboard.
pub const NUM_KEYS: usize = 88;
/// Number of white keys.
pub const NUM_WHITE_KEYS: usize = 52;
/// MIDI pitch of key 0 (A0).
pub const LOWEST_PITCH: u8 = 21;
/// MIDI pitch of key 87 (C8).
pub const HIGHEST_PITCH: u8 = 108;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KeyboardError {
    #[error("pitch {0} is outside the keyboard range [21, 108]")]
    OutOfRange(i32),
    #[error("key index {0} is outside [0, 87]")]
    BadIndex(usize),
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
}

/// A point in keyboard space, meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ZERO: Point3 = Point3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn distance(self, other: Point3) -> f64 {
        (self - other).norm()
    }

    /// Moves toward `target` by at most `max_step`, landing exactly on it
    /// when it is within reach.
    pub fn step_toward(self, target: Point3, max_step: f64) -> Point3 {
        let delta = target - self;
        let dist = delta.norm();
        if dist <= max_step {
            target
        } else {
            self + delta * (max_step / dist)
        }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, o: Point3) -> Point3 {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, s: f64) -> Point3 {
        Point3::new(self.x * s, self.y * s, self.z * s)
    }
}

/// Index of a key, 0 (A0) through 87 (C8).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct KeyIndex(u8);

impl KeyIndex {
    pub fn new(index: usize) -> Result<Self, KeyboardError> {
        if index < NUM_KEYS {
            Ok(Self(index as u8))
        } else {
            Err(KeyboardError::BadIndex(index))
        }
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn pitch(self) -> u8 {
        self.0 + LOWEST_PITCH
    }

    pub fn is_black(self) -> bool {
        is_black(self)
    }

    /// Iterates all 88 keys in ascending order.
    pub fn all() -> impl Iterator<Item = KeyIndex> {
        (0..NUM_KEYS as u8).map(KeyIndex)
    }
}

impl TryFrom<usize> for KeyIndex {
    type Error = KeyboardError;
    fn try_from(value: usize) -> Result<Self, Self::Error> {
        KeyIndex::new(value)
    }
}

impl From<KeyIndex> for usize {
    fn from(k: KeyIndex) -> usize {
        k.index()
    }
}

impl fmt::Display for KeyIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub fn key_for_pitch(pitch: i32) -> Result<KeyIndex, KeyboardError> {
    if (LOWEST_PITCH as i32..=HIGHEST_PITCH as i32).contains(&pitch) {
        Ok(KeyIndex((pitch - LOWEST_PITCH as i32) as u8))
    } else {
        Err(KeyboardError::OutOfRange(pitch))
    }
}

pub fn pitch_for_key(key: KeyIndex) -> u8 {
    key.pitch()
}

pub fn is_black(key: KeyIndex) -> bool {
    matches!(key.pitch() % 12, 1 | 3 | 6 | 8 | 10)
}

/// Number of white keys strictly left of `key`.
fn whites_before(key: KeyIndex) -> usize {
    (0..key.index())
        .filter(|&i| !is_black(KeyIndex(i as u8)))
        .count()
}

/// A set of keys, stored as an 88-bit mask. Iterates in ascending order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct KeySet(u128);

impl KeySet {
    pub const EMPTY: KeySet = KeySet(0);

    pub fn new() -> Self {
        Self(0)
    }

    pub fn insert(&mut self, key: KeyIndex) -> bool {
        let bit = 1u128 << key.0;
        let fresh = self.0 & bit == 0;
        self.0 |= bit;
        fresh
    }

    pub fn remove(&mut self, key: KeyIndex) -> bool {
        let bit = 1u128 << key.0;
        let present = self.0 & bit != 0;
        self.0 &= !bit;
        present
    }

    pub fn contains(&self, key: KeyIndex) -> bool {
        self.0 & (1u128 << key.0) != 0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn intersection(&self, other: &KeySet) -> KeySet {
        KeySet(self.0 & other.0)
    }

    pub fn union(&self, other: &KeySet) -> KeySet {
        KeySet(self.0 | other.0)
    }

    pub fn difference(&self, other: &KeySet) -> KeySet {
        KeySet(self.0 & !other.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = KeyIndex> + '_ {
        let bits = self.0;
        (0..NUM_KEYS as u8)
            .filter(move |i| bits & (1u128 << i) != 0)
            .map(KeyIndex)
    }

    pub fn to_vec(&self) -> Vec<KeyIndex> {
        self.iter().collect()
    }
}

impl FromIterator<KeyIndex> for KeySet {
    fn from_iter<I: IntoIterator<Item = KeyIndex>>(iter: I) -> Self {
        let mut set = KeySet::new();
        for k in iter {
            set.insert(k);
        }
        set
    }
}

impl Serialize for KeySet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for KeySet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let keys = Vec::<KeyIndex>::deserialize(d)?;
        Ok(keys.into_iter().collect())
    }
}

/// Physical keyboard dimensions in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KeyboardGeometry {
    pub white_key_width: f64,
    pub white_key_length: f64,
    /// y-offset of black-key press points toward the fallboard.
    pub black_key_setback: f64,
    /// z-offset of black-key press points.
    pub black_key_height: f64,
    /// Left edge of key A0.
    pub origin: Point3,
}

impl Default for KeyboardGeometry {
    fn default() -> Self {
        Self {
            white_key_width: 0.0225,
            white_key_length: 0.15,
            black_key_setback: 0.09,
            black_key_height: 0.01,
            origin: Point3::ZERO,
        }
    }
}

impl KeyboardGeometry {
    pub fn validate(&self) -> Result<(), KeyboardError> {
        let dims = [
            ("white_key_width", self.white_key_width),
            ("white_key_length", self.white_key_length),
            ("black_key_setback", self.black_key_setback),
            ("black_key_height", self.black_key_height),
        ];
        for (name, v) in dims {
            if !(v.is_finite() && v > 0.0) {
                return Err(KeyboardError::InvalidGeometry(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        let o = self.origin;
        if !(o.x.is_finite() && o.y.is_finite() && o.z.is_finite()) {
            return Err(KeyboardError::InvalidGeometry("origin must be finite".into()));
        }
        Ok(())
    }

    /// Total width spanned by the white keys.
    pub fn width(&self) -> f64 {
        NUM_WHITE_KEYS as f64 * self.white_key_width
    }

    /// x coordinate of the keyboard's center line.
    pub fn center_x(&self) -> f64 {
        self.origin.x + 0.5 * self.width()
    }

    /// Parses a `key = value` config. Missing keys keep their defaults.
    pub fn from_config_str(text: &str) -> Result<Self, KeyboardError> {
        let geom: KeyboardGeometry =
            toml::from_str(text).map_err(|e| KeyboardError::InvalidGeometry(e.to_string()))?;
        geom.validate()?;
        Ok(geom)
    }
}

pub fn key_press_point(key: KeyIndex, geom: &KeyboardGeometry) -> Point3 {
    let w = whites_before(key) as f64;
    let o = geom.origin;
    if is_black(key) {
        // Black keys sit on the boundary between white neighbors w-1 and w.
        Point3::new(
            o.x + w * geom.white_key_width,
            o.y + geom.black_key_setback,
            o.z + geom.black_key_height,
        )
    } else {
        Point3::new(o.x + (w + 0.5) * geom.white_key_width, o.y, o.z)
    }
}

/// Normalized key depths and sustain state, each in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct KeyState {
    pub depth: [f64; NUM_KEYS],
    pub sustain: f64,
}

impl Default for KeyState {
    fn default() -> Self {
        Self {
            depth: [0.0; NUM_KEYS],
            sustain: 0.0,
        }
    }
}

impl KeyState {
    pub fn is_valid(&self) -> bool {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        self.depth.iter().all(|&d| unit(d)) && unit(self.sustain)
    }

    /// Keys whose depth reaches `threshold`.
    pub fn pressed(&self, threshold: f64) -> Vec<KeyIndex> {
        KeyIndex::all()
            .filter(|k| self.depth[k.index()] >= threshold)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pitch_mapping_edges() {
        assert_eq!(key_for_pitch(21).unwrap().index(), 0);
        assert_eq!(key_for_pitch(108).unwrap().index(), 87);
        assert_eq!(key_for_pitch(60).unwrap().index(), 39);
        assert_eq!(key_for_pitch(20), Err(KeyboardError::OutOfRange(20)));
        assert_eq!(key_for_pitch(109), Err(KeyboardError::OutOfRange(109)));
        for p in 21..=108 {
            assert_eq!(key_for_pitch(p).unwrap().pitch() as i32, p);
        }
    }

    #[test]
    fn black_white_counts() {
        assert!(!is_black(KeyIndex(0)));
        assert!(is_black(KeyIndex(1)));
        assert_eq!(KeyIndex::all().filter(|k| k.is_black()).count(), 36);
        assert_eq!(KeyIndex::all().filter(|k| !k.is_black()).count(), NUM_WHITE_KEYS);
    }

    #[test]
    fn press_points() {
        let g = KeyboardGeometry::default();
        let p0 = key_press_point(KeyIndex(0), &g);
        assert!((p0.x - 0.01125).abs() < 1e-12);
        let p87 = key_press_point(KeyIndex(87), &g);
        assert!((p87.x - 1.15875).abs() < 1e-12);
        let p1 = key_press_point(KeyIndex(1), &g);
        assert_eq!(p1.y, g.black_key_setback);
        assert_eq!(p1.z, g.black_key_height);
        assert!((p1.x - 0.0225).abs() < 1e-12);
    }

    #[test]
    fn press_points_distinct_and_in_bounds() {
        let g = KeyboardGeometry::default();
        let pts: Vec<_> = KeyIndex::all().map(|k| key_press_point(k, &g)).collect();
        for (i, a) in pts.iter().enumerate() {
            assert!(a.x >= g.origin.x && a.x <= g.origin.x + g.width());
            for b in &pts[i + 1..] {
                assert!(a.distance(*b) > 0.0);
            }
        }
        let whites: Vec<f64> = KeyIndex::all()
            .filter(|k| !k.is_black())
            .map(|k| key_press_point(k, &g).x)
            .collect();
        assert!(whites.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn geometry_config() {
        let g = KeyboardGeometry::from_config_str("white_key_width = 0.02\n").unwrap();
        assert_eq!(g.white_key_width, 0.02);
        assert_eq!(g.black_key_setback, 0.09);
        assert!(KeyboardGeometry::from_config_str("white_key_width = -1.0").is_err());
        assert!(KeyboardGeometry::from_config_str("bogus = 1.0").is_err());
    }

    #[test]
    fn keyset_basics() {
        let mut s = KeySet::new();
        assert!(s.insert(KeyIndex(87)));
        assert!(s.insert(KeyIndex(0)));
        assert!(!s.insert(KeyIndex(0)));
        assert_eq!(s.len(), 2);
        assert_eq!(s.to_vec(), vec![KeyIndex(0), KeyIndex(87)]);
        assert!(s.remove(KeyIndex(0)));
        assert!(!s.contains(KeyIndex(0)));
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, "[87]");
        assert_eq!(serde_json::from_str::<KeySet>(&json).unwrap(), s);
    }

    #[test]
    fn step_toward_arrives_exactly() {
        let a = Point3::new(0.0, 0.0, 0.0);
        let b = Point3::new(0.1, 0.0, 0.0);
        assert_eq!(a.step_toward(b, 0.1), b);
        let half = a.step_toward(b, 0.05);
        assert!((half.x - 0.05).abs() < 1e-15);
    }
}
