use super::{BnError, Cpt, Dag, DiscreteBayesNet};

/// Estimates every CPT of `dag` from complete rows by smoothed counting.
///
/// Each row holds one category label per node, in `dag.nodes` order. For a
/// node with cardinality `k` and pseudocount `alpha`,
/// `P(c | parents) = (count(c, parents) + alpha) / (count(parents) + alpha * k)`.
/// A parent assignment that never occurs with `alpha == 0` gets the uniform
/// distribution.
pub fn fit_cpts<R, S>(dag: &Dag, rows: &[R], alpha: f64) -> Result<DiscreteBayesNet, BnError>
where
    R: AsRef<[S]>,
    S: AsRef<str>,
{
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(BnError::InvalidSmoothing(alpha));
    }
    if rows.is_empty() && alpha == 0.0 {
        return Err(BnError::EmptyData);
    }
    dag.topological_indices()?;

    let n = dag.nodes.len();
    let mut coded = Vec::with_capacity(rows.len());
    for (r, row) in rows.iter().enumerate() {
        let row = row.as_ref();
        if row.len() != n {
            return Err(BnError::RowWidth {
                row: r,
                expected: n,
                found: row.len(),
            });
        }
        let values = dag
            .nodes
            .iter()
            .zip(row)
            .map(|(node, label)| {
                node.category_index(label.as_ref())
                    .ok_or_else(|| BnError::RowCategory {
                        row: r,
                        node: node.name.clone(),
                        category: label.as_ref().to_string(),
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        coded.push(values);
    }

    let cards: Vec<usize> = dag.nodes.iter().map(|n| n.cardinality()).collect();
    let cpts = dag
        .nodes
        .iter()
        .enumerate()
        .map(|(i, node)| {
            let parents: Vec<usize> = dag
                .parents(&node.name)
                .iter()
                .map(|p| dag.node_index(p).expect("validated edge"))
                .collect();
            let n_rows: usize = parents.iter().map(|&p| cards[p]).product();
            let card = cards[i];
            let mut counts = vec![0.0f64; n_rows * card];
            for values in &coded {
                let row = parents.iter().fold(0, |acc, &p| acc * cards[p] + values[p]);
                counts[row * card + values[i]] += 1.0;
            }
            let rows = counts
                .chunks(card)
                .map(|c| normalize_counts(c, alpha))
                .collect();
            Cpt {
                node: node.name.clone(),
                parents: parents.iter().map(|&p| dag.nodes[p].name.clone()).collect(),
                rows,
            }
        })
        .collect();

    DiscreteBayesNet::new(dag.clone(), cpts)
}

fn normalize_counts(counts: &[f64], alpha: f64) -> Vec<f64> {
    let total: f64 = counts.iter().sum::<f64>() + alpha * counts.len() as f64;
    if total == 0.0 {
        return vec![1.0 / counts.len() as f64; counts.len()];
    }
    let mut row: Vec<f64> = counts.iter().map(|c| (c + alpha) / total).collect();
    // Push rounding drift into the largest entry so the row sums to one.
    let drift = 1.0 - row.iter().sum::<f64>();
    if drift != 0.0 {
        let (at, _) = row
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |best, (i, &v)| if v > best.1 { (i, v) } else { best });
        row[at] = (row[at] + drift).clamp(0.0, 1.0);
    }
    row
}
