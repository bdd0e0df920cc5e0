use std::fmt::Write as _;

use super::{FitProblem, FitResult};

impl FitResult {
    /// Human-readable report with inputs, estimates, covariance,
    /// identifiability and per-point residuals.
    pub fn report(&self, problem: &FitProblem) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "== inputs ==");
        for l in &problem.template.layers {
            let _ = writeln!(out, "layer {} thickness {:e} m", l.name, l.thickness);
        }
        let _ = writeln!(out, "measured points: {}", problem.measured.len());
        for p in &problem.params {
            let _ = writeln!(
                out,
                "param {} initial {:e} bounds [{:e}, {:e}] {:?}{}",
                p.name,
                p.initial,
                p.lower,
                p.upper,
                p.transform,
                if p.is_fixed() { " fixed" } else { "" }
            );
        }
        let _ = writeln!(out, "\n== status ==");
        let _ = writeln!(
            out,
            "{:?} after {} iterations (converged: {})",
            self.status,
            self.n_iterations,
            self.status.converged()
        );
        let _ = writeln!(out, "residual rms: {:.6} m/s", self.residual_rms);
        let _ = writeln!(out, "weighted rms: {:.6}", self.weighted_rms);
        let _ = writeln!(out, "\n== estimates ==");
        for e in &self.estimates {
            let mut notes = Vec::new();
            if e.fixed {
                notes.push("fixed");
            }
            if e.at_bound {
                notes.push("at bound");
            }
            let _ = writeln!(
                out,
                "{} = {:.9e} +/- {:.3e} {}{}",
                e.name,
                e.value,
                e.sigma,
                e.unit,
                if notes.is_empty() {
                    String::new()
                } else {
                    format!(" ({})", notes.join(", "))
                }
            );
        }
        let _ = writeln!(out, "\n== covariance ==");
        for i in 0..self.covariance.nrows() {
            let row: Vec<String> = (0..self.covariance.ncols())
                .map(|j| format!("{:.4e}", self.covariance[(i, j)]))
                .collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
        let _ = writeln!(out, "\n== identifiability ==");
        let _ = writeln!(
            out,
            "condition number: {:.4e}",
            self.identifiability.condition_number
        );
        for d in &self.identifiability.params {
            let _ = writeln!(
                out,
                "{}: {} (relative sensitivity {:.3e}, condition {:.3e})",
                d.name,
                d.flag.label(),
                d.relative_sensitivity,
                d.condition
            );
        }
        if let Some(rec) = self.identifiability.recommendation() {
            let _ = writeln!(out, "recommendation: {rec}");
        }
        let _ = writeln!(out, "\n== residuals ==");
        let _ = writeln!(
            out,
            "frequency_hz,measured_m_per_s,model_m_per_s,sigma_m_per_s,normalized"
        );
        for r in &self.residuals {
            let _ = writeln!(
                out,
                "{:e},{:.6},{:.6},{:.6},{:.4}",
                r.frequency,
                r.measured,
                r.model,
                r.sigma,
                (r.model - r.measured) / r.sigma
            );
        }
        out
    }

    /// `name,value,sigma,unit,flag` rows.
    pub fn estimates_csv(&self) -> String {
        let mut out = String::from("name,value,sigma,unit,flag\n");
        for e in &self.estimates {
            let flag = self
                .identifiability
                .flag(&e.name)
                .map(|f| f.label())
                .unwrap_or("fixed");
            let _ = writeln!(
                out,
                "{},{:e},{:e},{},{}",
                e.name, e.value, e.sigma, e.unit, flag
            );
        }
        out
    }
}
