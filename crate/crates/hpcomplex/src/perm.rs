use crate::error::HpError;
use serde::{Deserialize, Serialize};

/// A permutation of `{0, .., m-1}`, stored as its image vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn identity(m: usize) -> Self {
        Permutation {
            map: (0..m).collect(),
        }
    }

    pub fn from_images(map: Vec<usize>) -> Result<Self, HpError> {
        let m = map.len();
        let mut seen = vec![false; m];
        for &v in &map {
            if v >= m || seen[v] {
                return Err(HpError::InvalidInput("not a permutation".into()));
            }
            seen[v] = true;
        }
        Ok(Permutation { map })
    }

    /// Parse cycle notation with 1-indexed points, e.g. `"(1 2)(3)"`.
    /// Points may be separated by spaces or commas; `m` is inferred from the
    /// largest point unless `min_points` pushes it higher.
    pub fn from_cycles_str(s: &str, min_points: usize) -> Result<Self, HpError> {
        let mut cycles: Vec<Vec<usize>> = Vec::new();
        let mut rest = s.trim();
        if rest.is_empty() {
            return Err(HpError::InvalidInput("empty permutation".into()));
        }
        while !rest.is_empty() {
            let open = rest
                .find('(')
                .ok_or_else(|| HpError::InvalidInput(format!("expected '(' in `{s}`")))?;
            let close = rest[open..]
                .find(')')
                .ok_or_else(|| HpError::InvalidInput(format!("unbalanced ')' in `{s}`")))?
                + open;
            let inner = &rest[open + 1..close];
            let pts: Result<Vec<usize>, _> = inner
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<usize>())
                .collect();
            let pts = pts.map_err(|_| HpError::InvalidInput(format!("bad cycle `{inner}`")))?;
            if pts.iter().any(|p| *p == 0) {
                return Err(HpError::InvalidInput("points are 1-indexed".into()));
            }
            cycles.push(pts.iter().map(|p| p - 1).collect());
            rest = rest[close + 1..].trim_start();
        }
        let m = cycles
            .iter()
            .flatten()
            .copied()
            .max()
            .map(|x| x + 1)
            .unwrap_or(0)
            .max(min_points);
        let mut map: Vec<usize> = (0..m).collect();
        let mut touched = vec![false; m];
        for cyc in &cycles {
            for w in 0..cyc.len() {
                let from = cyc[w];
                let to = cyc[(w + 1) % cyc.len()];
                if touched[from] {
                    return Err(HpError::InvalidInput(format!("point {} repeated", from + 1)));
                }
                touched[from] = true;
                map[from] = to;
            }
        }
        Permutation::from_images(map)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.map[i]
    }

    /// `sigma^k(i)` for any integer power.
    pub fn apply_pow(&self, i: usize, k: i64) -> usize {
        let mut x = i;
        if k >= 0 {
            for _ in 0..k {
                x = self.map[x];
            }
        } else {
            let inv = self.inverse();
            for _ in 0..(-k) {
                x = inv.map[x];
            }
        }
        x
    }

    pub fn inverse(&self) -> Self {
        let mut map = vec![0; self.map.len()];
        for (i, &v) in self.map.iter().enumerate() {
            map[v] = i;
        }
        Permutation { map }
    }

    /// `self` after `other`: `(self * other)(i) = self(other(i))`.
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len());
        Permutation {
            map: (0..self.len()).map(|i| self.map[other.map[i]]).collect(),
        }
    }

    /// `tau sigma tau^{-1}`.
    pub fn conjugate_by(&self, tau: &Self) -> Self {
        tau.compose(self).compose(&tau.inverse())
    }

    /// Cycle decomposition; each cycle starts at its minimal element and the
    /// cycles are sorted by that minimum. Fixed points appear as 1-cycles.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let m = self.len();
        let mut seen = vec![false; m];
        let mut out = Vec::new();
        for start in 0..m {
            if seen[start] {
                continue;
            }
            let mut cyc = vec![start];
            seen[start] = true;
            let mut x = self.map[start];
            while x != start {
                seen[x] = true;
                cyc.push(x);
                x = self.map[x];
            }
            out.push(cyc);
        }
        out
    }

    /// Cycle notation with 1-indexed points, for display.
    pub fn to_cycles_string(&self) -> String {
        self.cycles()
            .iter()
            .map(|c| {
                let pts: Vec<String> = c.iter().map(|p| (p + 1).to_string()).collect();
                format!("({})", pts.join(" "))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_cycles() {
        let p = Permutation::from_cycles_str("(1 2)(3)", 0).unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(p.apply(0), 1);
        assert_eq!(p.apply(1), 0);
        assert_eq!(p.apply(2), 2);
        assert_eq!(p.cycles(), vec![vec![0, 1], vec![2]]);
        assert_eq!(p.to_cycles_string(), "(1 2)(3)");
    }

    #[test]
    fn conjugation_of_transposition() {
        let sigma = Permutation::from_cycles_str("(1 2)", 3).unwrap();
        let tau = Permutation::from_cycles_str("(2 3)", 3).unwrap();
        let conj = sigma.conjugate_by(&tau);
        let expected = Permutation::from_cycles_str("(1 3)", 3).unwrap();
        assert_eq!(conj, expected);
    }

    #[test]
    fn parse_commas_too() {
        let p = Permutation::from_cycles_str("(1,2,3)", 0).unwrap();
        assert_eq!(p.apply(0), 1);
        assert_eq!(p.apply(2), 0);
    }

    #[test]
    fn bad_input_rejected() {
        assert!(Permutation::from_cycles_str("(1 1)", 0).is_err());
        assert!(Permutation::from_cycles_str("(0 1)", 0).is_err());
        assert!(Permutation::from_cycles_str("1 2", 0).is_err());
    }
}
