//! Result documents emitted by the command line.

use entcov_core::solve::FitResult;
use entcov_core::stats::CltSummary;
use entcov_core::{KktReport, SymMatrix};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktJson {
    pub primal_feas: f64,
    pub dual_feas: f64,
    pub min_eig_sigma: f64,
    /// `null` when the dual domain has no boundary.
    pub min_eig_l_domain: Option<f64>,
}

impl From<&KktReport> for KktJson {
    fn from(k: &KktReport) -> Self {
        KktJson {
            primal_feas: k.primal_feas,
            dual_feas: k.dual_feas,
            min_eig_sigma: k.min_eig_sigma,
            min_eig_l_domain: k.min_eig_l_domain.is_finite().then_some(k.min_eig_l_domain),
        }
    }
}

/// Resolved invocation, echoed into every result.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub link: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub solver: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub constraint: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub input: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub max_iter: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reps: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub status: String,
    pub sigma_hat: Option<Vec<Vec<f64>>>,
    pub l_hat: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub theta_hat: Option<Vec<f64>>,
    pub kkt: Option<KktJson>,
    pub iters: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub message: Option<String>,
    pub config: ConfigEcho,
}

impl FitReport {
    pub fn from_fit(fit: &FitResult, with_theta: bool, config: ConfigEcho) -> Self {
        FitReport {
            status: fit.status.as_str().to_string(),
            sigma_hat: Some(fit.sigma_hat.to_rows()),
            l_hat: Some(fit.l_hat.to_rows()),
            theta_hat: with_theta.then(|| fit.theta_hat.clone()),
            kkt: Some(KktJson::from(&fit.kkt)),
            iters: fit.iters,
            message: None,
            config,
        }
    }

    /// A matrix-only result such as a correlation or mixed solve.
    pub fn from_matrix(sigma: &SymMatrix, l: &SymMatrix, config: ConfigEcho) -> Self {
        FitReport {
            status: "Converged".into(),
            sigma_hat: Some(sigma.to_rows()),
            l_hat: Some(l.to_rows()),
            theta_hat: None,
            kkt: None,
            iters: 0,
            message: None,
            config,
        }
    }

    pub fn failed(status: &str, message: String, config: ConfigEcho) -> Self {
        FitReport {
            status: status.into(),
            sigma_hat: None,
            l_hat: None,
            theta_hat: None,
            kkt: None,
            iters: 0,
            message: Some(message),
            config,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub reps: usize,
    pub failures: usize,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub max_abs_z: f64,
    pub config: ConfigEcho,
}

impl CltReport {
    pub fn new(s: &CltSummary, config: ConfigEcho) -> Self {
        CltReport {
            reps: s.reps,
            failures: s.failures,
            mean: s.mean.clone(),
            variance: s.variance.clone(),
            max_abs_z: s.max_abs_z,
            config,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
