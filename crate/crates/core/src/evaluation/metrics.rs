use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::corpus::{TableBlock, TenderDocument};
use crate::reranker::{list_dist_by_name, name_dist};
use crate::text_metrics::{embedding_dist, EmbeddingProvider};

/// Best similarity `1 - embedding_dist` of a generated paragraph against any
/// gold paragraph.
pub fn paragraph_score<S: AsRef<str>>(
    paragraph: &str,
    gold: &[S],
    provider: &dyn EmbeddingProvider,
) -> Result<f64, EvalError> {
    if gold.is_empty() {
        return Err(EvalError::EmptyGold);
    }
    let mut best = f64::NEG_INFINITY;
    for g in gold {
        best = best.max(1.0 - embedding_dist(paragraph, g.as_ref(), provider)?);
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParaScore {
    /// 0..=100.
    pub value: f64,
    pub per_paragraph: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Length-penalized mean paragraph similarity, scaled to 0..=100:
/// `(1 - |len(p) - len(g)| / max(len(p), len(g))) * mean(score_p) * 100`.
pub fn para_score<S: AsRef<str>, G: AsRef<str>>(
    generated: &[S],
    gold: &[G],
    provider: &dyn EmbeddingProvider,
) -> Result<ParaScore, EvalError> {
    if generated.is_empty() {
        return Ok(ParaScore {
            value: 0.0,
            per_paragraph: Vec::new(),
            warnings: vec!["generated document has no paragraphs".into()],
        });
    }
    if gold.is_empty() {
        return Ok(ParaScore {
            value: 0.0,
            per_paragraph: vec![0.0; generated.len()],
            warnings: vec!["gold document has no paragraphs".into()],
        });
    }
    let per_paragraph = generated
        .iter()
        .map(|p| paragraph_score(p.as_ref(), gold, provider))
        .collect::<Result<Vec<_>, _>>()?;
    let (n, m) = (generated.len(), gold.len());
    let length_factor = 1.0 - n.abs_diff(m) as f64 / n.max(m) as f64;
    let mean = per_paragraph.iter().sum::<f64>() / n as f64;
    Ok(ParaScore {
        value: length_factor * mean * 100.0,
        per_paragraph,
        warnings: Vec::new(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableComparison {
    pub field_sim: f64,
    pub row_sim: f64,
    /// Mean of the two, 0..=1.
    pub score: f64,
}

/// Mean over generated column names of `1 - dist` to the closest gold column
/// name.
pub fn field_similarity(
    generated: &TableBlock,
    gold: &TableBlock,
    provider: &dyn EmbeddingProvider,
) -> Result<f64, EvalError> {
    if generated.field_names.is_empty() || gold.field_names.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for f in &generated.field_names {
        let mut best = f64::INFINITY;
        for g in &gold.field_names {
            best = best.min(name_dist(f, g, provider)?);
        }
        total += 1.0 - best;
    }
    Ok(total / generated.field_names.len() as f64)
}

fn row_text(row: &[String]) -> String {
    row.join(" ")
}

/// `1 - min(1, list_dist)` over rows rendered as space-joined cells.
pub fn row_similarity(
    generated: &TableBlock,
    gold: &TableBlock,
    provider: &dyn EmbeddingProvider,
    alpha: f64,
) -> Result<f64, EvalError> {
    let gen_rows: Vec<String> = generated.rows.iter().map(|r| row_text(r)).collect();
    let gold_rows: Vec<String> = gold.rows.iter().map(|r| row_text(r)).collect();
    if gen_rows.is_empty() {
        return Ok(if gold_rows.is_empty() { 1.0 } else { 0.0 });
    }
    let d = list_dist_by_name(&gen_rows, &gold_rows, alpha, provider)?;
    Ok(1.0 - d.value.min(1.0))
}

pub fn table_score_single(
    generated: &TableBlock,
    gold: &TableBlock,
    provider: &dyn EmbeddingProvider,
    alpha: f64,
) -> Result<TableComparison, EvalError> {
    let field_sim = field_similarity(generated, gold, provider)?;
    let row_sim = row_similarity(generated, gold, provider, alpha)?;
    Ok(TableComparison {
        field_sim,
        row_sim,
        score: (field_sim + row_sim) / 2.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableScore {
    /// 0..=100.
    pub value: f64,
    pub per_table: Vec<f64>,
    /// For each generated table, the gold table it was paired with.
    pub matching: Vec<Option<usize>>,
}

/// Greedy one-to-one pairing of generated to gold tables by descending
/// field similarity, ties by generated then gold index.
pub fn match_tables(
    generated: &[TableBlock],
    gold: &[TableBlock],
    provider: &dyn EmbeddingProvider,
) -> Result<Vec<Option<usize>>, EvalError> {
    let mut pairs = Vec::with_capacity(generated.len() * gold.len());
    for (i, t) in generated.iter().enumerate() {
        for (j, g) in gold.iter().enumerate() {
            pairs.push((field_similarity(t, g, provider)?, i, j));
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut matching = vec![None; generated.len()];
    let mut gold_used = vec![false; gold.len()];
    for (_, i, j) in pairs {
        if matching[i].is_none() && !gold_used[j] {
            matching[i] = Some(j);
            gold_used[j] = true;
        }
    }
    Ok(matching)
}

/// Mean matched-table score scaled to 0..=100. Unmatched generated tables
/// score 0; two empty sides score 100.
pub fn table_score(
    generated: &[TableBlock],
    gold: &[TableBlock],
    provider: &dyn EmbeddingProvider,
    alpha: f64,
) -> Result<TableScore, EvalError> {
    if generated.is_empty() {
        return Ok(TableScore {
            value: if gold.is_empty() { 100.0 } else { 0.0 },
            per_table: Vec::new(),
            matching: Vec::new(),
        });
    }
    let matching = match_tables(generated, gold, provider)?;
    let per_table = generated
        .iter()
        .zip(&matching)
        .map(|(t, m)| match m {
            Some(j) => table_score_single(t, &gold[*j], provider, alpha).map(|c| c.score),
            None => Ok(0.0),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let value = per_table.iter().sum::<f64>() / per_table.len() as f64 * 100.0;
    Ok(TableScore {
        value,
        per_table,
        matching,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub para_score: f64,
    pub table_score: f64,
    pub score: f64,
    pub paragraph_scores: Vec<f64>,
    pub table_scores: Vec<f64>,
    pub table_matching: Vec<Option<usize>>,
    pub warnings: Vec<String>,
}

/// Paragraph and table scores combined, weighted by the generated document's
/// paragraph and table counts.
pub fn evaluate(
    generated: &TenderDocument,
    gold: &TenderDocument,
    provider: &dyn EmbeddingProvider,
    alpha: f64,
) -> Result<EvaluationReport, EvalError> {
    let gen_paras: Vec<&str> = generated.paragraph_texts().collect();
    let gold_paras: Vec<&str> = gold.paragraph_texts().collect();
    let para = para_score(&gen_paras, &gold_paras, provider)?;
    let table = table_score(&generated.tables, &gold.tables, provider, alpha)?;
    let (np, nt) = (gen_paras.len() as f64, generated.tables.len() as f64);
    let score = if np + nt == 0.0 {
        if gold_paras.is_empty() && gold.tables.is_empty() {
            100.0
        } else {
            0.0
        }
    } else if nt == 0.0 {
        para.value
    } else if np == 0.0 {
        table.value
    } else {
        (np * para.value + nt * table.value) / (np + nt)
    };
    Ok(EvaluationReport {
        para_score: para.value,
        table_score: table.value,
        score,
        paragraph_scores: para.per_paragraph,
        table_scores: table.per_table,
        table_matching: table.matching,
        warnings: para.warnings,
    })
}
