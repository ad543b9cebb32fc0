//! Symbolic moment matrices for dichotomic observables.

use std::collections::BTreeMap;

use crate::behaviors::{Chart, Scenario};
use crate::error::{Error, Result};

/// Observable `(party, input)`; squares to the identity.
pub type Letter = (u8, u8);
pub type Word = Vec<Letter>;

/// Sorts letters by party (parties commute) and cancels repeated letters.
pub fn canonical(w: &[Letter]) -> Word {
    let mut sorted = w.to_vec();
    sorted.sort_by_key(|l| l.0);
    let mut out: Word = Vec::with_capacity(sorted.len());
    for l in sorted {
        if out.last() == Some(&l) {
            out.pop();
        } else {
            out.push(l);
        }
    }
    out
}

/// Representative shared by a word and its adjoint.
pub fn moment_key(w: &[Letter]) -> Word {
    let a = canonical(w);
    let mut r = w.to_vec();
    r.reverse();
    let b = canonical(&r);
    a.min(b)
}

fn is_correlator(w: &[Letter]) -> bool {
    w.windows(2).all(|p| p[0].0 < p[1].0)
}

#[derive(Clone, Debug)]
pub struct MomentStructure {
    pub scenario: Scenario,
    pub level: usize,
    pub monomials: Vec<Word>,
    /// Moment words; index 0 is the identity, `1..=dim` the correlator chart.
    pub moments: Vec<Word>,
    /// `entries[i][j]` is the moment index of `Γ_ij`.
    pub entries: Vec<Vec<usize>>,
    pub chart: Chart,
}

impl MomentStructure {
    pub fn new(scenario: &Scenario, level: usize) -> Result<Self> {
        scenario.require_supported()?;
        if !(1..=2).contains(&level) {
            return Err(Error::Unsupported(format!("NPA level {level}")));
        }
        let chart = Chart::correlator(scenario)?;
        let letters: Vec<Letter> = (0..scenario.parties as u8)
            .flat_map(|p| (0..scenario.inputs[p as usize] as u8).map(move |x| (p, x)))
            .collect();
        let mut monomials: Vec<Word> = vec![Vec::new()];
        monomials.extend(letters.iter().map(|&l| vec![l]));
        if level == 2 {
            let mut seen: Vec<Word> = monomials.clone();
            for &a in &letters {
                for &b in &letters {
                    let w = canonical(&[a, b]);
                    if !seen.contains(&w) {
                        seen.push(w.clone());
                        monomials.push(w);
                    }
                }
            }
        }

        let mut moments: Vec<Word> = vec![Vec::new()];
        for c in &chart.coords {
            moments.push(c.subset.iter().zip(&c.inputs).map(|(&p, &x)| (p as u8, x as u8)).collect());
        }
        let mut index: BTreeMap<Word, usize> = moments.iter().cloned().enumerate().map(|(i, w)| (w, i)).collect();
        let n = monomials.len();
        let mut keys = vec![vec![Vec::new(); n]; n];
        let mut free: Vec<Word> = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let mut w: Word = monomials[i].iter().rev().cloned().collect();
                w.extend(monomials[j].iter().cloned());
                let k = moment_key(&w);
                if !index.contains_key(&k) && !free.contains(&k) {
                    debug_assert!(!is_correlator(&k) || k.is_empty());
                    free.push(k.clone());
                }
                keys[i][j] = k;
            }
        }
        free.sort();
        for w in free {
            index.insert(w.clone(), moments.len());
            moments.push(w);
        }
        let entries = keys.iter().map(|row| row.iter().map(|k| index[k]).collect()).collect();
        Ok(MomentStructure { scenario: scenario.clone(), level, monomials, moments, entries, chart })
    }

    pub fn side(&self) -> usize {
        self.monomials.len()
    }

    /// Number of correlator moments, equal to the chart dimension.
    pub fn num_linked(&self) -> usize {
        self.chart.dim()
    }

    pub fn num_moments(&self) -> usize {
        self.moments.len()
    }
}
