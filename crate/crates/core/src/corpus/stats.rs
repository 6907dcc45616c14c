use std::collections::BTreeMap;
use std::fmt;

use super::CorpusItem;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TypeStats {
    pub count: usize,
    pub max_len: usize,
    pub min_len: usize,
    pub mean_len: f64,
}

/// Per-sentence-type length statistics, rows ordered by type name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorpusStats {
    pub rows: BTreeMap<String, TypeStats>,
}

impl CorpusStats {
    pub fn total(&self) -> usize {
        self.rows.values().map(|r| r.count).sum()
    }

    pub fn get(&self, sentence_type: &str) -> Option<&TypeStats> {
        self.rows.get(sentence_type)
    }
}

pub fn compute_stats<S: CorpusItem>(corpus: &[S]) -> CorpusStats {
    let mut acc: BTreeMap<String, (usize, usize, usize, usize)> = BTreeMap::new();
    for s in corpus {
        let n = s.token_count();
        let e = acc
            .entry(s.sentence_type().to_string())
            .or_insert((0, 0, usize::MAX, 0));
        e.0 += 1;
        e.1 = e.1.max(n);
        e.2 = e.2.min(n);
        e.3 += n;
    }
    let rows = acc
        .into_iter()
        .map(|(ty, (count, max_len, min_len, sum))| {
            (
                ty,
                TypeStats {
                    count,
                    max_len,
                    min_len,
                    mean_len: sum as f64 / count as f64,
                },
            )
        })
        .collect();
    CorpusStats { rows }
}

const HEADERS: [&str; 5] = ["Sentence Type", "Count", "Max Length", "Min Length", "Avg. Length"];

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut cells: Vec<[String; 5]> = vec![HEADERS.map(String::from)];
        for (ty, r) in &self.rows {
            cells.push([
                ty.clone(),
                r.count.to_string(),
                r.max_len.to_string(),
                r.min_len.to_string(),
                format!("{:.3}", r.mean_len),
            ]);
        }
        cells.push([
            "TOTAL".into(),
            self.total().to_string(),
            String::new(),
            String::new(),
            String::new(),
        ]);
        let widths: Vec<usize> = (0..5)
            .map(|c| cells.iter().map(|row| row[c].len()).max().unwrap_or(0))
            .collect();
        for (i, row) in cells.iter().enumerate() {
            let line = row
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(c, (cell, w))| if c == 0 { format!("{cell:<w$}") } else { format!("{cell:>w$}") })
                .collect::<Vec<_>>()
                .join(" | ");
            writeln!(f, "{}", line.trim_end())?;
            if i == 0 || i == cells.len() - 2 {
                let rule: usize = widths.iter().sum::<usize>() + 3 * (widths.len() - 1);
                writeln!(f, "{}", "-".repeat(rule))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abstraction::AbstractSentence;
    use crate::frontend::Origin;

    fn s(ty: &str, len: usize) -> AbstractSentence {
        AbstractSentence {
            tokens: vec!["X".into(); len],
            sentence_type: ty.into(),
            origin: Origin {
                file: String::new(),
                line: 0,
            },
            source_text: String::new(),
        }
    }

    #[test]
    fn degenerate_rows() {
        let stats = compute_stats(&[s("GO", 3), s("GO", 3), s("DIVIDE", 10)]);
        let go = stats.get("GO").unwrap();
        assert_eq!((go.max_len, go.min_len, go.mean_len, go.count), (3, 3, 3.0, 2));
        let div = stats.get("DIVIDE").unwrap();
        assert_eq!((div.max_len, div.min_len, div.mean_len), (10, 10, 10.0));
    }

    #[test]
    fn mean_of_two() {
        let stats = compute_stats(&[s("MOVE", 4), s("MOVE", 5)]);
        let r = stats.get("MOVE").unwrap();
        assert_eq!((r.max_len, r.min_len, r.mean_len), (5, 4, 4.5));
    }

    #[test]
    fn order_free() {
        let a = vec![s("A", 3), s("B", 7), s("A", 9), s("C", 4)];
        let mut b = a.clone();
        b.reverse();
        assert_eq!(compute_stats(&a), compute_stats(&b));
        assert_eq!(compute_stats(&a).total(), 4);
    }

    #[test]
    fn report_has_three_decimals() {
        let text = compute_stats(&[s("IF", 4), s("IF", 4), s("IF", 5)]).to_string();
        assert!(text.starts_with("Sentence Type | Count | Max Length | Min Length | Avg. Length"));
        assert!(text.contains("4.333"), "{text}");
        assert!(text.contains("TOTAL"));
    }
}
