use num_integer::Integer;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

/// Exact element `num/den` of `ℝ/ℤ`, kept reduced with `0 ≤ num < den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RationalAngle {
    num: u64,
    den: u64,
}

impl RationalAngle {
    /// Reduces `num/den` modulo one. Panics on a zero denominator.
    pub fn new(num: i128, den: i128) -> Self {
        assert!(den != 0, "zero denominator");
        let (num, den) = if den < 0 { (-num, -den) } else { (num, den) };
        let num = num.rem_euclid(den);
        let g = num.gcd(&den);
        let (num, den) = (num / g, den / g);
        RationalAngle { num: num as u64, den: den as u64 }
    }

    pub fn zero() -> Self {
        RationalAngle { num: 0, den: 1 }
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `m_{−d}(θ) = −dθ mod 1`.
    pub fn times_neg(&self, d: u64) -> Self {
        RationalAngle::new(-(d as i128) * self.num as i128, self.den as i128)
    }

    pub fn add(&self, other: &RationalAngle) -> Self {
        let (a, b) = (self.num as i128, self.den as i128);
        let (c, e) = (other.num as i128, other.den as i128);
        RationalAngle::new(a * e + c * b, b * e)
    }

    pub fn neg(&self) -> Self {
        RationalAngle::new(-(self.num as i128), self.den as i128)
    }

    /// All `x` with `m_{−d}(x) = self`.
    pub fn preimages(&self, d: u64) -> Vec<RationalAngle> {
        // −d x = y + k  ⇒  x = −(y + k)/d
        (0..d as i128)
            .map(|k| {
                RationalAngle::new(
                    -(self.num as i128 + k * self.den as i128),
                    self.den as i128 * d as i128,
                )
            })
            .collect()
    }
}

impl Ord for RationalAngle {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num as u128 * other.den as u128).cmp(&(other.num as u128 * self.den as u128))
    }
}

impl PartialOrd for RationalAngle {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for RationalAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("expected an angle of the form num/den, got {0:?}")]
pub struct ParseAngleError(pub String);

impl FromStr for RationalAngle {
    type Err = ParseAngleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseAngleError(s.to_string());
        let (n, d) = s.split_once('/').ok_or_else(err)?;
        let n: i128 = n.trim().parse().map_err(|_| err())?;
        let d: i128 = d.trim().parse().map_err(|_| err())?;
        if d == 0 {
            return Err(err());
        }
        Ok(RationalAngle::new(n, d))
    }
}

/// Serialized as `["num", "den"]`.
impl Serialize for RationalAngle {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.num.to_string(), self.den.to_string()].serialize(s)
    }
}

impl<'de> Deserialize<'de> for RationalAngle {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [n, m] = <[String; 2]>::deserialize(d)?;
        let n: i128 = n.parse().map_err(serde::de::Error::custom)?;
        let m: i128 = m.parse().map_err(serde::de::Error::custom)?;
        if m == 0 {
            return Err(serde::de::Error::custom("zero denominator"));
        }
        Ok(RationalAngle::new(n, m))
    }
}

/// `m_{−d}`.
pub fn md_step(d: u64, theta: RationalAngle) -> RationalAngle {
    theta.times_neg(d)
}

/// Angles of exact period `n` under `m_{−d}`, sorted.
pub fn periodic_angles(d: u64, n: u32) -> Vec<RationalAngle> {
    assert!(n >= 1 && n <= 12, "period must lie in 1..=12");
    let den = ((-(d as i128)).pow(n) - 1).unsigned_abs() as i128;
    let mut out: Vec<RationalAngle> = (0..den)
        .map(|k| RationalAngle::new(k, den))
        .filter(|&t| {
            let mut x = t;
            for _ in 1..n {
                x = md_step(d, x);
                if x == t {
                    return false;
                }
            }
            md_step(d, x) == t
        })
        .collect();
    out.sort();
    out
}

/// Groups period-`n` angles into their cycles, each starting at its least member.
pub fn periodic_cycles(d: u64, n: u32) -> Vec<Vec<RationalAngle>> {
    let mut seen = std::collections::HashSet::new();
    let mut cycles = Vec::new();
    for t in periodic_angles(d, n) {
        if seen.contains(&t) {
            continue;
        }
        let mut cyc = vec![t];
        seen.insert(t);
        let mut x = md_step(d, t);
        while x != t {
            seen.insert(x);
            cyc.push(x);
            x = md_step(d, x);
        }
        cycles.push(cyc);
    }
    cycles
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i128, d: i128) -> RationalAngle {
        RationalAngle::new(n, d)
    }

    #[test]
    fn step_examples() {
        assert_eq!(md_step(3, r(1, 4)), r(1, 4));
        assert_eq!(md_step(3, r(1, 8)), r(5, 8));
        assert_eq!(md_step(7, RationalAngle::zero()), RationalAngle::zero());
    }

    #[test]
    fn periodic_examples() {
        assert_eq!(periodic_angles(3, 1), vec![r(0, 1), r(1, 4), r(1, 2), r(3, 4)]);
        assert_eq!(periodic_angles(3, 2), vec![r(1, 8), r(3, 8), r(5, 8), r(7, 8)]);
        assert_eq!(periodic_cycles(3, 2), vec![vec![r(1, 8), r(5, 8)], vec![r(3, 8), r(7, 8)]]);
        for d in 2..9 {
            assert_eq!(periodic_angles(d, 1).len() as u64, d + 1);
        }
    }

    #[test]
    fn parse_and_serde() {
        assert_eq!("3/8".parse::<RationalAngle>().unwrap(), r(3, 8));
        assert_eq!("-1/4".parse::<RationalAngle>().unwrap(), r(3, 4));
        assert!("3".parse::<RationalAngle>().is_err());
        let s = serde_json::to_string(&r(5, 8)).unwrap();
        assert_eq!(s, r#"["5","8"]"#);
        assert_eq!(serde_json::from_str::<RationalAngle>(&s).unwrap(), r(5, 8));
    }

    #[test]
    fn preimages_map_back() {
        for p in r(1, 8).preimages(3) {
            assert_eq!(md_step(3, p), r(1, 8));
        }
    }
}
