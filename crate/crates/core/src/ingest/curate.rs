use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::{scan_elements, MoleculeRecord, PA_RANGE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CurateConfig {
    pub allowed_elements: BTreeSet<String>,
    /// Stereoisomer groups whose PA spread is below this (kcal/mol) are
    /// collapsed into their mean.
    pub stereo_tolerance: f64,
    /// Inclusive PA window; records outside it are dropped.
    pub pa_range: Option<(f64, f64)>,
}

impl Default for CurateConfig {
    fn default() -> Self {
        Self {
            allowed_elements: ["C", "H", "N", "O", "P", "S"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            stereo_tolerance: 1.0,
            pa_range: Some(PA_RANGE),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementRemoval {
    pub id: String,
    pub disallowed: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParseRemoval {
    pub id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergedGroup {
    pub group_key: String,
    pub ids: Vec<String>,
    pub pa_values: Vec<f64>,
    pub mean_pa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergentGroup {
    pub group_key: String,
    pub ids: Vec<String>,
    pub spread: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CurationCounts {
    pub input: usize,
    pub output: usize,
    pub removed_nonfinite_pa: usize,
    pub removed_unparseable: usize,
    pub removed_elements: usize,
    pub removed_out_of_range: usize,
    pub merged_groups: usize,
    pub merged_records: usize,
    pub divergent_groups: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CurationReport {
    pub counts: CurationCounts,
    pub nonfinite_pa: Vec<String>,
    pub unparseable: Vec<ParseRemoval>,
    pub element_filter: Vec<ElementRemoval>,
    pub out_of_range: Vec<String>,
    pub merged: Vec<MergedGroup>,
    pub divergent: Vec<DivergentGroup>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curated {
    pub records: Vec<MoleculeRecord>,
    /// Input indices behind each output record (more than one when a
    /// stereoisomer group was merged).
    pub sources: Vec<Vec<usize>>,
    pub report: CurationReport,
}

/// Apply the curation protocol: drop records with non-finite PA, unparseable
/// structures, elements outside the allowed set or PA outside the window;
/// then collapse stereoisomer groups whose PA spread is below the tolerance.
///
/// Output order follows the first surviving member of each group.
pub fn curate(records: &[MoleculeRecord], cfg: &CurateConfig) -> Curated {
    let mut report = CurationReport::default();
    report.counts.input = records.len();

    let mut survivors = Vec::new();
    for (idx, rec) in records.iter().enumerate() {
        if !rec.pa.is_finite() {
            report.nonfinite_pa.push(rec.id.clone());
            continue;
        }
        let elements = match scan_elements(&rec.smiles) {
            Ok(e) => e,
            Err(err) => {
                report.unparseable.push(ParseRemoval {
                    id: rec.id.clone(),
                    error: err.to_string(),
                });
                continue;
            }
        };
        let disallowed: Vec<String> = elements
            .difference(&cfg.allowed_elements)
            .cloned()
            .collect();
        if !disallowed.is_empty() {
            report.element_filter.push(ElementRemoval {
                id: rec.id.clone(),
                disallowed,
            });
            continue;
        }
        if let Some((lo, hi)) = cfg.pa_range {
            if rec.pa < lo || rec.pa > hi {
                report.out_of_range.push(rec.id.clone());
                continue;
            }
        }
        survivors.push(idx);
    }

    // group by key, preserving first-occurrence order
    let mut order: Vec<&str> = Vec::new();
    let mut groups: HashMap<&str, Vec<usize>> = HashMap::new();
    for &idx in &survivors {
        let key = records[idx].group_key.as_str();
        groups
            .entry(key)
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push(idx);
    }

    let mut out = Vec::new();
    let mut sources = Vec::new();
    for key in order {
        let members = &groups[key];
        if members.len() == 1 {
            out.push(records[members[0]].clone());
            sources.push(members.clone());
            continue;
        }
        let pas: Vec<f64> = members.iter().map(|&i| records[i].pa).collect();
        let max = pas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = pas.iter().cloned().fold(f64::INFINITY, f64::min);
        let ids: Vec<String> = members.iter().map(|&i| records[i].id.clone()).collect();
        if max - min < cfg.stereo_tolerance {
            let mean = pas.iter().sum::<f64>() / pas.len() as f64;
            let mut merged = records[members[0]].clone();
            merged.pa = mean;
            out.push(merged);
            sources.push(members.clone());
            report.merged.push(MergedGroup {
                group_key: key.to_string(),
                ids,
                pa_values: pas,
                mean_pa: mean,
            });
        } else {
            for &i in members {
                out.push(records[i].clone());
                sources.push(vec![i]);
            }
            report.divergent.push(DivergentGroup {
                group_key: key.to_string(),
                ids,
                spread: max - min,
            });
        }
    }

    let c = &mut report.counts;
    c.output = out.len();
    c.removed_nonfinite_pa = report.nonfinite_pa.len();
    c.removed_unparseable = report.unparseable.len();
    c.removed_elements = report.element_filter.len();
    c.removed_out_of_range = report.out_of_range.len();
    c.merged_groups = report.merged.len();
    c.merged_records = report.merged.iter().map(|g| g.ids.len()).sum();
    c.divergent_groups = report.divergent.len();

    Curated {
        records: out,
        sources,
        report,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, smiles: &str, key: &str, pa: f64) -> MoleculeRecord {
        MoleculeRecord {
            id: id.into(),
            smiles: smiles.into(),
            group_key: key.into(),
            pa,
        }
    }

    #[test]
    fn close_stereoisomers_are_averaged() {
        let input = vec![rec("a", "CC(N)O", "g", 200.0), rec("b", "CC(N)O", "g", 200.5)];
        let out = curate(&input, &CurateConfig::default());
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.records[0].pa, 200.25);
        assert_eq!(out.sources, vec![vec![0, 1]]);
        assert_eq!(out.report.counts.merged_groups, 1);
    }

    #[test]
    fn divergent_stereoisomers_are_kept() {
        let input = vec![rec("a", "CC(N)O", "g", 200.0), rec("b", "CC(N)O", "g", 202.0)];
        let out = curate(&input, &CurateConfig::default());
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.report.counts.divergent_groups, 1);
    }

    #[test]
    fn spread_equal_to_tolerance_is_kept() {
        let input = vec![rec("a", "CN", "g", 200.0), rec("b", "CN", "g", 201.0)];
        let out = curate(&input, &CurateConfig::default());
        assert_eq!(out.records.len(), 2);
    }

    #[test]
    fn element_filter_drops_metals_and_halogens() {
        let input = vec![
            rec("fe", "[Fe+2]", "fe", 200.0),
            rec("cl", "CCl", "cl", 190.0),
            rec("ok", "CCN", "ok", 210.0),
        ];
        let out = curate(&input, &CurateConfig::default());
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.records[0].id, "ok");
        assert_eq!(out.report.element_filter[0].disallowed, vec!["Fe".to_string()]);
        assert_eq!(out.report.counts.removed_elements, 2);
    }

    #[test]
    fn range_and_nonfinite_filters() {
        let input = vec![
            rec("low", "CN", "a", 120.0),
            rec("nan", "CN", "b", f64::NAN),
            rec("bad", "C[", "c", 200.0),
            rec("ok", "CN", "d", 260.0),
        ];
        let out = curate(&input, &CurateConfig::default());
        assert_eq!(out.records.len(), 1);
        let c = &out.report.counts;
        assert_eq!(
            (c.removed_out_of_range, c.removed_nonfinite_pa, c.removed_unparseable),
            (1, 1, 1)
        );
    }

    #[test]
    fn empty_input_is_fine() {
        let out = curate(&[], &CurateConfig::default());
        assert!(out.records.is_empty());
        assert_eq!(out.report.counts.output, 0);
    }
}
