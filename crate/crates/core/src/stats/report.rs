use std::fmt::Write as _;
use std::io;

use super::{AnovaResult, LmmFit, PseudoR2, ScheffeResult, TTestResult, WaldTest};

/// A mixed-model fit with its optional joint test and effect sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct LmmReport {
    pub fit: LmmFit,
    pub wald: Option<WaldTest>,
    pub r2: Option<PseudoR2>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StatReport {
    TTest(TTestResult),
    Anova {
        anova: AnovaResult,
        posthoc: Option<ScheffeResult>,
    },
    Lmm(LmmReport),
}

impl StatReport {
    /// Long-format rows `(term, statistic, value)`.
    pub fn rows(&self) -> Vec<(String, &'static str, f64)> {
        let mut rows = Vec::new();
        match self {
            StatReport::TTest(r) => {
                for (k, v) in [
                    ("mean_a", r.mean_a),
                    ("mean_b", r.mean_b),
                    ("t", r.t),
                    ("df", r.df),
                    ("p", r.p),
                    ("d", r.d),
                ] {
                    rows.push((String::new(), k, v));
                }
            }
            StatReport::Anova { anova, posthoc } => {
                for (k, v) in [
                    ("F", anova.f),
                    ("df1", anova.df1),
                    ("df2", anova.df2),
                    ("p", anova.p),
                ] {
                    rows.push((String::new(), k, v));
                }
                for (i, label) in anova.group_labels.iter().enumerate() {
                    rows.push((label.clone(), "mean", anova.group_means[i]));
                    rows.push((label.clone(), "se", anova.group_ses[i]));
                    rows.push((label.clone(), "n", anova.group_sizes[i] as f64));
                }
                if let Some(post) = posthoc {
                    for pair in &post.pairs {
                        let term = format!(
                            "{} vs {}",
                            anova.group_labels[pair.i], anova.group_labels[pair.j]
                        );
                        rows.push((term.clone(), "scheffe_statistic", pair.statistic));
                        rows.push((term, "scheffe_p", pair.p));
                    }
                }
            }
            StatReport::Lmm(r) => {
                let f = &r.fit;
                for (i, name) in f.names.iter().enumerate() {
                    rows.push((name.clone(), "B", f.beta[i]));
                    rows.push((name.clone(), "SE", f.se[i]));
                    rows.push((name.clone(), "z", f.z[i]));
                    rows.push((name.clone(), "p", f.p[i]));
                    rows.push((name.clone(), "ci95_low", f.ci95[i].0));
                    rows.push((name.clone(), "ci95_high", f.ci95[i].1));
                }
                rows.push((String::new(), "sigma2_e", f.sigma2_e));
                rows.push((String::new(), "sigma2_u", f.sigma2_u));
                rows.push((String::new(), "loglik", f.loglik));
                if let Some(w) = &r.wald {
                    rows.push((String::new(), "wald_chi2", w.chi2));
                    rows.push((String::new(), "wald_df", w.df as f64));
                    rows.push((String::new(), "wald_p", w.p));
                }
                if let Some(r2) = &r.r2 {
                    rows.push((String::new(), "r2_sb", r2.r2_sb));
                    rows.push((String::new(), "r2_br", r2.r2_br));
                    rows.push((String::new(), "f2", r2.f2));
                }
            }
        }
        rows
    }

    /// Writes `analysis,term,statistic,value` rows (with a header when `header` is set).
    pub fn write_csv<W: io::Write>(
        &self,
        analysis: &str,
        out: &mut csv::Writer<W>,
        header: bool,
    ) -> csv::Result<()> {
        if header {
            out.write_record(["analysis", "term", "statistic", "value"])?;
        }
        for (term, stat, value) in self.rows() {
            out.write_record([analysis, &term, stat, &value.to_string()])?;
        }
        Ok(())
    }

    /// The CSV rows with header as a string.
    pub fn to_csv(&self, analysis: &str) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        self.write_csv(analysis, &mut w, true)
            .expect("writing to memory cannot fail");
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        match self {
            StatReport::TTest(r) => {
                let _ = writeln!(
                    s,
                    "t({}) = {:.4}, p = {}, d = {:.4}  (means {:.4} vs {:.4}, {:?}{})",
                    fmt_df(r.df),
                    r.t,
                    fmt_p(r.p),
                    r.d,
                    r.mean_a,
                    r.mean_b,
                    r.variant,
                    if r.degenerate { ", degenerate" } else { "" }
                );
            }
            StatReport::Anova { anova, posthoc } => {
                let _ = writeln!(
                    s,
                    "F({}, {}) = {:.4}, p = {}{}",
                    fmt_df(anova.df1),
                    fmt_df(anova.df2),
                    anova.f,
                    fmt_p(anova.p),
                    if anova.degenerate { "  (zero within-group variance)" } else { "" }
                );
                for (i, label) in anova.group_labels.iter().enumerate() {
                    let letters = posthoc.as_ref().map_or("", |p| p.letters[i].as_str());
                    let _ = writeln!(
                        s,
                        "  {label:<16} M = {:>12.2}  SE = {:>9.2}  n = {:<6} {letters}",
                        anova.group_means[i], anova.group_ses[i], anova.group_sizes[i]
                    );
                }
                if let Some(post) = posthoc {
                    let _ = writeln!(
                        s,
                        "Scheffe (alpha = {}): critical value {:.4}",
                        post.alpha, post.critical
                    );
                }
            }
            StatReport::Lmm(r) => {
                let f = &r.fit;
                let _ = writeln!(
                    s,
                    "{:<16} {:>12} {:>10} {:>9} {:>9}  95% CI",
                    "term", "B", "SE", "z", "p"
                );
                for (i, name) in f.names.iter().enumerate() {
                    let _ = writeln!(
                        s,
                        "{:<16} {:>12.4} {:>10.4} {:>9.2} {:>9}  [{:.4}, {:.4}]",
                        name,
                        f.beta[i],
                        f.se[i],
                        f.z[i],
                        fmt_p(f.p[i]),
                        f.ci95[i].0,
                        f.ci95[i].1
                    );
                }
                let _ = writeln!(
                    s,
                    "sigma2_e = {:.4}, sigma2_u = {:.4}, loglik = {:.4}, n = {}, clusters = {}{}",
                    f.sigma2_e,
                    f.sigma2_u,
                    f.loglik,
                    f.n,
                    f.n_clusters,
                    if f.perfect_fit { "  (perfect fit)" } else { "" }
                );
                if let Some(w) = &r.wald {
                    let _ = writeln!(s, "Wald chi2({}) = {:.2}, p = {}", w.df, w.chi2, fmt_p(w.p));
                }
                if let Some(r2) = &r.r2 {
                    let _ = writeln!(
                        s,
                        "Snijders/Bosker R2 = {:.3}, Bryk/Raudenbush R2 = {:.3}, f2 = {:.4}",
                        r2.r2_sb, r2.r2_br, r2.f2
                    );
                }
            }
        }
        s
    }
}

fn fmt_df(df: f64) -> String {
    if df.fract() == 0.0 {
        format!("{df:.0}")
    } else {
        format!("{df:.2}")
    }
}

/// p-values below 1e-4 in scientific notation, otherwise four decimals.
pub(crate) fn fmt_p(p: f64) -> String {
    if p > 0.0 && p < 1e-4 {
        format!("{p:.3e}")
    } else {
        format!("{p:.4}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{two_sample_ttest, SampleSeries, TTestVariant};

    #[test]
    fn ttest_report_rows_and_text() {
        let a = SampleSeries::new("a", vec![2., 4., 6.]).unwrap();
        let b = SampleSeries::new("b", vec![1., 3., 5.]).unwrap();
        let r = StatReport::TTest(two_sample_ttest(&a, &b, TTestVariant::Pooled).unwrap());
        assert!(r.to_text().starts_with("t(4) = 0.6124, p = 0.5734, d = 0.5000"));
        let mut w = csv::Writer::from_writer(Vec::new());
        r.write_csv("demo", &mut w, true).unwrap();
        let out = String::from_utf8(w.into_inner().unwrap()).unwrap();
        assert!(out.starts_with("analysis,term,statistic,value\ndemo,,mean_a,4\n"));
    }

    #[test]
    fn p_formatting() {
        assert_eq!(fmt_p(0.5), "0.5000");
        assert_eq!(fmt_p(2.5e-7), "2.500e-7");
        assert_eq!(fmt_p(0.0), "0.0000");
    }
}
