//! Certificate files for third-party re-verification.

use serde::{Deserialize, Serialize};

use super::{verify_pef, EntropyCertificate, Pef, Validity, VertexSet, VALIDITY_TOL};
use crate::baselines::{azuma_total, ra_ns_bound, AzumaBound, RaBound, RaParams};
use crate::error::{Error, Result};

pub const CERTIFICATE_FORMAT: &str = "dicert-certificate/1";

/// The certified bound, tagged by method.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum CertifiedBound {
    Pe { certificate: EntropyCertificate, pef: Pef },
    Azuma { bound: AzumaBound },
    RaNs { params: RaParams, bound: RaBound },
}

impl CertifiedBound {
    pub fn method(&self) -> &'static str {
        match self {
            CertifiedBound::Pe { .. } => "pe",
            CertifiedBound::Azuma { .. } => "azuma",
            CertifiedBound::RaNs { .. } => "ra-ns",
        }
    }

    pub fn n(&self) -> f64 {
        match self {
            CertifiedBound::Pe { certificate, .. } => certificate.n,
            CertifiedBound::Azuma { bound } => bound.n,
            CertifiedBound::RaNs { params, .. } => params.n,
        }
    }

    /// Smooth min-entropy in bits, floored at zero.
    pub fn reported(&self) -> f64 {
        match self {
            CertifiedBound::Pe { certificate, .. } => certificate.reported(),
            CertifiedBound::Azuma { bound } => bound.total.max(0.0),
            CertifiedBound::RaNs { bound, .. } => bound.reported(),
        }
    }

    pub fn total(&self) -> f64 {
        match self {
            CertifiedBound::Pe { certificate, .. } => certificate.total,
            CertifiedBound::Azuma { bound } => bound.total,
            CertifiedBound::RaNs { bound, .. } => bound.total,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateFile {
    pub format: String,
    #[serde(flatten)]
    pub bound: CertifiedBound,
    /// Typical behavior the rate was evaluated on, `z·|C| + c`.
    pub behavior: Vec<f64>,
    /// Fingerprint of the polytope file the PEF was certified against; empty for baselines.
    pub polytope_fingerprint: String,
    pub config: serde_json::Value,
}

impl CertificateFile {
    pub fn new(bound: CertifiedBound, behavior: Vec<f64>, polytope_fingerprint: String, config: serde_json::Value) -> Self {
        CertificateFile { format: CERTIFICATE_FORMAT.into(), bound, behavior, polytope_fingerprint, config }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum VerifyFailure {
    Format(String),
    Fingerprint { expected: String, found: String },
    Arithmetic { stored: f64, recomputed: f64 },
    Rate { stored: f64, recomputed: f64 },
    Power { stored: f64, pef: f64 },
    Invalid(Validity),
}

impl std::fmt::Display for VerifyFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            VerifyFailure::Format(s) => write!(f, "unknown format {s:?}"),
            VerifyFailure::Fingerprint { expected, found } => write!(f, "fingerprint {found} does not match {expected}"),
            VerifyFailure::Arithmetic { stored, recomputed } => write!(f, "stored total {stored:e} but arithmetic gives {recomputed:e}"),
            VerifyFailure::Rate { stored, recomputed } => write!(f, "stored rate {stored:e} but the PEF gives {recomputed:e}"),
            VerifyFailure::Power { stored, pef } => write!(f, "power {stored} differs from the PEF's {pef}"),
            VerifyFailure::Invalid(Validity::Violated { vertex, value }) => write!(f, "PEF violated at vertex {vertex}: {value}"),
            VerifyFailure::Invalid(v) => write!(f, "invalid PEF: {v:?}"),
        }
    }
}

/// Re-checks the bound arithmetic and, for `pe`, validity of the PEF on `verts`.
/// `verts` should be rebuilt from the polytope whose file fingerprint is the second element.
pub fn verify_certificate(file: &CertificateFile, verts: Option<(&VertexSet, &str)>) -> Result<Vec<VerifyFailure>> {
    let mut out = Vec::new();
    if file.format != CERTIFICATE_FORMAT {
        out.push(VerifyFailure::Format(file.format.clone()));
    }
    match &file.bound {
        CertifiedBound::Pe { certificate: c, pef: f } => {
            let Some((verts, poly_fp)) = verts else {
                return Err(Error::Domain("pe certificates need the polytope they were certified against".into()));
            };
            if file.polytope_fingerprint != poly_fp {
                out.push(VerifyFailure::Fingerprint { expected: poly_fp.into(), found: file.polytope_fingerprint.clone() });
            }
            let vfp = verts.fingerprint();
            if c.fingerprint != vfp {
                out.push(VerifyFailure::Fingerprint { expected: vfp, found: c.fingerprint.clone() });
            }
            if !c.is_consistent() {
                out.push(VerifyFailure::Arithmetic { stored: c.total, recomputed: c.recompute() });
            }
            if f.beta.to_bits() != c.beta.to_bits() {
                out.push(VerifyFailure::Power { stored: c.beta, pef: f.beta });
            }
            let rate = super::witness_value(f, &file.behavior, 1.0)?;
            if rate.to_bits() != c.rate.to_bits() {
                out.push(VerifyFailure::Rate { stored: c.rate, recomputed: rate });
            }
            let v = verify_pef(f, verts, VALIDITY_TOL)?;
            if !v.is_valid() {
                out.push(VerifyFailure::Invalid(v));
            }
        }
        CertifiedBound::Azuma { bound } => {
            let t = azuma_total(bound);
            if t.to_bits() != bound.total.to_bits() {
                out.push(VerifyFailure::Arithmetic { stored: bound.total, recomputed: t });
            }
        }
        CertifiedBound::RaNs { params, bound } => {
            let b = ra_ns_bound(params)?;
            if b.total.to_bits() != bound.total.to_bits() {
                out.push(VerifyFailure::Arithmetic { stored: bound.total, recomputed: b.total });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ra_certificate_round_trip() {
        let params = RaParams::new(0.01, 0.1, 1e8, 2f64.powi(-32));
        let bound = ra_ns_bound(&params).unwrap();
        let mut file = CertificateFile::new(CertifiedBound::RaNs { params, bound }, vec![], String::new(), serde_json::Value::Null);
        let text = serde_json::to_string(&file).unwrap();
        assert!(text.contains("\"method\":\"ra-ns\""));
        let back: CertificateFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back, file);
        assert!(verify_certificate(&back, None).unwrap().is_empty());
        if let CertifiedBound::RaNs { bound, .. } = &mut file.bound {
            bound.total += 1.0;
        }
        assert_eq!(verify_certificate(&file, None).unwrap().len(), 1);
    }
}
