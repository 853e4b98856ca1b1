//! Two-factor ANOVA over per-fold scores and Tukey HSD pairwise comparisons
//! with compact letter display.

mod cld;
mod distributions;

pub use cld::compact_letters;
pub use distributions::{
    f_upper_tail, regularized_incomplete_beta, studentized_range_cdf, studentized_range_quantile,
};

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::RunRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Response {
    MacroF,
    MicroF,
    WeightedF,
}

impl Response {
    pub fn of(self, record: &RunRecord) -> f64 {
        match self {
            Response::MacroF => record.scores.macro_f,
            Response::MicroF => record.scores.micro_f,
            Response::WeightedF => record.scores.weighted_f,
        }
    }
}

impl fmt::Display for Response {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Response::MacroF => "macro_f",
            Response::MicroF => "micro_f",
            Response::WeightedF => "weighted_f",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Factor {
    Features,
    Classifiers,
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Factor::Features => "features",
            Factor::Classifiers => "classifiers",
        })
    }
}

/// One response value in a (feature config, classifier) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub features: String,
    pub classifier: String,
    pub value: f64,
}

pub fn observations(records: &[RunRecord], response: Response) -> Vec<Observation> {
    records
        .iter()
        .map(|r| Observation {
            features: r.feature_config.clone(),
            classifier: r.classifier.clone(),
            value: response.of(r),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaRow {
    pub source: String,
    pub df: usize,
    pub sum_sq: f64,
    /// Absent when `df` is 0.
    pub mean_sq: Option<f64>,
    pub f_value: Option<f64>,
    /// `Pr(>F)`.
    pub p_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelMean {
    pub level: String,
    pub mean: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaTable {
    pub features: AnovaRow,
    pub classifiers: AnovaRow,
    pub residual: AnovaRow,
    /// Level means in order of first appearance.
    pub feature_means: Vec<LevelMean>,
    pub classifier_means: Vec<LevelMean>,
}

impl AnovaTable {
    pub fn residual_mean_sq(&self) -> f64 {
        self.residual.mean_sq.unwrap_or(0.0)
    }

    pub fn means(&self, factor: Factor) -> &[LevelMean] {
        match factor {
            Factor::Features => &self.feature_means,
            Factor::Classifiers => &self.classifier_means,
        }
    }
}

fn levels<'a>(keys: impl Iterator<Item = &'a str>) -> Vec<&'a str> {
    let mut out: Vec<&str> = Vec::new();
    for k in keys {
        if !out.contains(&k) {
            out.push(k);
        }
    }
    out
}

/// Additive two-factor ANOVA (no interaction) of `response` over the grid.
pub fn anova_two_factor(records: &[RunRecord], response: Response) -> Result<AnovaTable> {
    anova_from_observations(&observations(records, response))
}

/// Additive two-factor ANOVA over a balanced design. A factor with a single
/// level gets zero degrees of freedom, reducing to a one-way analysis.
pub fn anova_from_observations(obs: &[Observation]) -> Result<AnovaTable> {
    if obs.is_empty() {
        return Err(Error::invalid("ANOVA needs at least one observation"));
    }
    if let Some(o) = obs.iter().find(|o| !o.value.is_finite()) {
        return Err(Error::NonFinite(format!(
            "response of cell ({}, {})",
            o.features, o.classifier
        )));
    }
    let fa = levels(obs.iter().map(|o| o.features.as_str()));
    let cb = levels(obs.iter().map(|o| o.classifier.as_str()));
    let (a, b) = (fa.len(), cb.len());
    let mut cells = vec![vec![Vec::new(); b]; a];
    for o in obs {
        let i = fa.iter().position(|&l| l == o.features).expect("level listed");
        let j = cb.iter().position(|&l| l == o.classifier).expect("level listed");
        cells[i][j].push(o.value);
    }
    let reps = cells[0][0].len();
    for (i, row) in cells.iter().enumerate() {
        for (j, cell) in row.iter().enumerate() {
            if cell.len() != reps || cell.is_empty() {
                return Err(Error::invalid(format!(
                    "unbalanced design: cell ({}, {}) has {} replicates, expected {}",
                    fa[i],
                    cb[j],
                    cell.len(),
                    reps.max(1)
                )));
            }
        }
    }

    let n = obs.len();
    let grand = obs.iter().map(|o| o.value).sum::<f64>() / n as f64;
    let mean = |vals: &mut dyn Iterator<Item = f64>| {
        let v: Vec<f64> = vals.collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let row_means: Vec<f64> = (0..a)
        .map(|i| mean(&mut cells[i].iter().flatten().copied()))
        .collect();
    let col_means: Vec<f64> = (0..b)
        .map(|j| mean(&mut cells.iter().flat_map(|r| r[j].iter().copied())))
        .collect();

    let ss_total: f64 = obs.iter().map(|o| (o.value - grand).powi(2)).sum();
    let ss_a = (b * reps) as f64 * row_means.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let ss_b = (a * reps) as f64 * col_means.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let ss_res = (ss_total - ss_a - ss_b).max(0.0);
    let (df_a, df_b) = (a - 1, b - 1);
    let df_res = (n + 1)
        .checked_sub(a + b)
        .filter(|&d| d > 0)
        .ok_or_else(|| Error::invalid("ANOVA has no residual degrees of freedom"))?;
    let ms_res = ss_res / df_res as f64;

    let effect = |source: &str, ss: f64, df: usize| -> Result<AnovaRow> {
        if df == 0 {
            return Ok(AnovaRow {
                source: source.into(),
                df,
                sum_sq: ss,
                mean_sq: None,
                f_value: None,
                p_value: None,
            });
        }
        let ms = ss / df as f64;
        let (f, p) = if ms_res > 0.0 {
            let f = ms / ms_res;
            (f, f_upper_tail(f, df as f64, df_res as f64)?)
        } else if ms > 0.0 {
            (f64::INFINITY, 0.0)
        } else {
            (0.0, 1.0)
        };
        Ok(AnovaRow {
            source: source.into(),
            df,
            sum_sq: ss,
            mean_sq: Some(ms),
            f_value: Some(f),
            p_value: Some(p),
        })
    };

    let level_means = |names: &[&str], means: &[f64], per: usize| {
        names
            .iter()
            .zip(means)
            .map(|(l, &m)| LevelMean {
                level: l.to_string(),
                mean: m,
                n: per,
            })
            .collect()
    };
    Ok(AnovaTable {
        features: effect("features", ss_a, df_a)?,
        classifiers: effect("classifiers", ss_b, df_b)?,
        residual: AnovaRow {
            source: "Residuals".into(),
            df: df_res,
            sum_sq: ss_res,
            mean_sq: Some(ms_res),
            f_value: None,
            p_value: None,
        },
        feature_means: level_means(&fa, &row_means, b * reps),
        classifier_means: level_means(&cb, &col_means, a * reps),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TukeyPair {
    pub level_i: String,
    pub level_j: String,
    /// `mean_i - mean_j`.
    pub mean_diff: f64,
    pub q: f64,
    pub p_adj: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TukeyLevel {
    pub level: String,
    pub mean: f64,
    pub n: usize,
    pub letters: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TukeyResult {
    pub factor: Factor,
    pub alpha: f64,
    /// Levels by descending mean.
    pub levels: Vec<TukeyLevel>,
    pub pairs: Vec<TukeyPair>,
}

impl TukeyResult {
    pub fn letters(&self, level: &str) -> Option<&str> {
        self.levels
            .iter()
            .find(|l| l.level == level)
            .map(|l| l.letters.as_str())
    }
}

/// Tukey HSD over the levels of `factor`, using the residual mean square of
/// the additive two-factor model.
pub fn tukey_hsd(
    records: &[RunRecord],
    factor: Factor,
    response: Response,
    alpha: f64,
) -> Result<TukeyResult> {
    tukey_from_anova(&anova_two_factor(records, response)?, factor, alpha)
}

pub fn tukey_from_anova(table: &AnovaTable, factor: Factor, alpha: f64) -> Result<TukeyResult> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha must be in (0, 1), got {alpha}")));
    }
    let mut means: Vec<LevelMean> = table.means(factor).to_vec();
    let k = means.len();
    if k < 2 {
        return Err(Error::invalid(format!(
            "Tukey HSD needs at least 2 levels of {factor}, got {k}"
        )));
    }
    // Stable sort keeps first-appearance order among equal means.
    means.sort_by(|x, y| y.mean.total_cmp(&x.mean));
    let ms = table.residual_mean_sq();
    let df = table.residual.df as f64;

    let mut pairs = Vec::new();
    let mut significant = vec![vec![false; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let (mi, mj) = (&means[i], &means[j]);
            let diff = mi.mean - mj.mean;
            let se = (ms / 2.0 * (1.0 / mi.n as f64 + 1.0 / mj.n as f64)).sqrt();
            let q = if diff == 0.0 {
                0.0
            } else if se > 0.0 {
                diff.abs() / se
            } else {
                f64::INFINITY
            };
            let p_adj = (1.0 - studentized_range_cdf(q, k, df)?).clamp(0.0, 1.0);
            let sig = p_adj < alpha;
            significant[i][j] = sig;
            significant[j][i] = sig;
            pairs.push(TukeyPair {
                level_i: mi.level.clone(),
                level_j: mj.level.clone(),
                mean_diff: diff,
                q,
                p_adj,
                significant: sig,
            });
        }
    }
    let letters = compact_letters(&significant);
    Ok(TukeyResult {
        factor,
        alpha,
        levels: means
            .into_iter()
            .zip(letters)
            .map(|(m, letters)| TukeyLevel {
                level: m.level,
                mean: m.mean,
                n: m.n,
                letters,
            })
            .collect(),
        pairs,
    })
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    match v {
        Some(x) if x.is_infinite() => "Inf".into(),
        Some(x) => format!("{x:.digits$}"),
        None => String::new(),
    }
}

fn fmt_p(p: Option<f64>) -> String {
    match p {
        Some(p) if p < 1e-4 => format!("{p:.2e}"),
        other => fmt_opt(other, 4),
    }
}

/// Markdown report: one ANOVA table per response, then one level table
/// (mean and letter group) and pairwise table per Tukey analysis.
pub fn render_report(anovas: &[(Response, AnovaTable)], tukeys: &[(Response, TukeyResult)]) -> String {
    let mut s = String::from("# Significance analysis\n");
    for (response, t) in anovas {
        let _ = writeln!(s, "\n## ANOVA on {response}\n");
        s.push_str("| Source | Df | Sum Sq | Mean Sq | F value | Pr(>F) |\n");
        s.push_str("|---|---:|---:|---:|---:|---:|\n");
        for row in [&t.features, &t.classifiers, &t.residual] {
            let _ = writeln!(
                s,
                "| {} | {} | {:.6} | {} | {} | {} |",
                row.source,
                row.df,
                row.sum_sq,
                fmt_opt(row.mean_sq, 6),
                fmt_opt(row.f_value, 4),
                fmt_p(row.p_value)
            );
        }
    }
    for (response, t) in tukeys {
        let _ = writeln!(
            s,
            "\n## Tukey HSD on {response}: {} (alpha = {})\n",
            t.factor, t.alpha
        );
        s.push_str("| Level | Mean | Group |\n|---|---:|---|\n");
        for l in &t.levels {
            let _ = writeln!(s, "| {} | {:.4} | {} |", l.level, l.mean, l.letters);
        }
        s.push_str("\n| Pair | Diff | q | p adj | Significant |\n|---|---:|---:|---:|---|\n");
        for p in &t.pairs {
            let _ = writeln!(
                s,
                "| {} - {} | {:.4} | {} | {} | {} |",
                p.level_i,
                p.level_j,
                p.mean_diff,
                fmt_opt(Some(p.q), 4),
                fmt_p(Some(p.p_adj)),
                if p.significant { "yes" } else { "no" }
            );
        }
    }
    s
}
