use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::posefeat::BodyPart;
use crate::util;

/// Gaussian on the child's position relative to its parent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairwiseGaussian {
    /// Mean of `child − parent`.
    pub dx: f64,
    pub dy: f64,
    pub var_x: f64,
    pub var_y: f64,
}

impl PairwiseGaussian {
    /// Log potential of a child at `(xc, yc)` given the parent at `(xp, yp)`.
    pub fn log_potential(&self, xc: f64, yc: f64, xp: f64, yp: f64) -> f64 {
        let ex = xc - xp - self.dx;
        let ey = yc - yp - self.dy;
        -ex * ex / (2.0 * self.var_x) - ey * ey / (2.0 * self.var_y)
    }
}

/// Tree-structured part model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartGraph {
    pub parts: Vec<String>,
    /// `parent[i]` is `None` for the single root.
    pub parent: Vec<Option<usize>>,
    /// Pairwise term of the edge `parent[i] → i`; ignored for the root.
    pub pairwise: Vec<PairwiseGaussian>,
}

impl PartGraph {
    pub fn new(parts: Vec<String>, parent: Vec<Option<usize>>, pairwise: Vec<PairwiseGaussian>) -> Result<Self> {
        let g = Self { parts, parent, pairwise };
        g.validate()?;
        Ok(g)
    }

    /// Ten-part upper body rooted at the torso, in [`BodyPart::ALL`] order.
    pub fn upper_body() -> Self {
        use BodyPart::*;
        let edge = |dx: f64, dy: f64, var: f64| PairwiseGaussian { dx, dy, var_x: var, var_y: var };
        let spec = |p: BodyPart| match p {
            Head => (Some(Torso), edge(0.0, -45.0, 64.0)),
            Torso => (None, edge(0.0, 0.0, 1.0)),
            RShoulder => (Some(Torso), edge(-25.0, -30.0, 36.0)),
            LShoulder => (Some(Torso), edge(25.0, -30.0, 36.0)),
            RElbow => (Some(RShoulder), edge(-5.0, 30.0, 144.0)),
            LElbow => (Some(LShoulder), edge(5.0, 30.0, 144.0)),
            RWrist => (Some(RElbow), edge(0.0, 25.0, 225.0)),
            LWrist => (Some(LElbow), edge(0.0, 25.0, 225.0)),
            RHand => (Some(RWrist), edge(0.0, 8.0, 25.0)),
            LHand => (Some(LWrist), edge(0.0, 8.0, 25.0)),
        };
        let (parent, pairwise) = BodyPart::ALL.iter().map(|&p| {
            let (par, e) = spec(p);
            (par.map(BodyPart::index), e)
        }).unzip();
        Self {
            parts: BodyPart::ALL.iter().map(|p| p.name().to_string()).collect(),
            parent,
            pairwise,
        }
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn root(&self) -> usize {
        self.parent.iter().position(Option::is_none).expect("validated graph has a root")
    }

    pub fn children(&self, i: usize) -> Vec<usize> {
        (0..self.len()).filter(|&c| self.parent[c] == Some(i)).collect()
    }

    /// Parts in breadth-first order from the root.
    pub fn order(&self) -> Vec<usize> {
        let mut out = vec![self.root()];
        let mut k = 0;
        while k < out.len() {
            out.extend(self.children(out[k]));
            k += 1;
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.parts.len();
        if n == 0 {
            return Err(Error::Degenerate("part graph has no parts".into()));
        }
        crate::error::ensure_dim(n, self.parent.len())?;
        crate::error::ensure_dim(n, self.pairwise.len())?;
        if self.parent.iter().filter(|p| p.is_none()).count() != 1 {
            return Err(Error::Degenerate("part graph needs exactly one root".into()));
        }
        for (i, p) in self.parent.iter().enumerate() {
            if let Some(p) = *p {
                if p >= n {
                    return Err(Error::IndexOutOfRange { index: p, len: n });
                }
                let e = &self.pairwise[i];
                if !(e.var_x > 0.0 && e.var_y > 0.0) || !(e.dx.is_finite() && e.dy.is_finite()) {
                    return Err(Error::Degenerate(format!("edge into `{}` needs finite offsets and positive variances", self.parts[i])));
                }
            }
        }
        if self.order().len() != n {
            return Err(Error::Degenerate("part graph is not a spanning tree".into()));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        util::write_string(path, &serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let g: Self = serde_json::from_str(&util::read_to_string(path)?)?;
        g.validate()?;
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn upper_body_is_a_tree() {
        let g = PartGraph::upper_body();
        g.validate().unwrap();
        assert_eq!(g.root(), BodyPart::Torso.index());
        assert_eq!(g.parent.iter().flatten().count(), 9);
        assert_eq!(g.parent[BodyPart::LHand.index()], Some(BodyPart::LWrist.index()));
    }

    #[test]
    fn rejects_cycles_and_bad_variances() {
        let e = PairwiseGaussian { dx: 0.0, dy: 0.0, var_x: 1.0, var_y: 1.0 };
        let names = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        assert!(PartGraph::new(names.clone(), vec![None, Some(2), Some(1)], vec![e; 3]).is_err());
        assert!(PartGraph::new(names.clone(), vec![None, None, Some(1)], vec![e; 3]).is_err());
        let flat = PairwiseGaussian { var_x: 0.0, ..e };
        assert!(PartGraph::new(names.clone(), vec![None, Some(0), Some(1)], vec![e, flat, e]).is_err());
        assert!(PartGraph::new(names, vec![None, Some(0), Some(1)], vec![e; 3]).is_ok());
    }
}
