use rust_decimal::Decimal;

use super::OrganizationError;
use crate::model::{id_order, Fact};

/// Exact cosine similarity.
pub fn compute_relevance(fact: &[f64], query: &[f64]) -> Result<f64, OrganizationError> {
    if fact.len() != query.len() {
        return Err(OrganizationError::DegenerateInput(format!(
            "dimension mismatch: {} vs {}",
            fact.len(),
            query.len()
        )));
    }
    let dot: f64 = fact.iter().zip(query).map(|(a, b)| a * b).sum();
    let na = fact.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = query.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(OrganizationError::ZeroVector);
    }
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Plain mean of member relevances, kept as an exact decimal (rounded to
/// 12 places so the wire form stays short).
pub fn mean_relevance(values: &[Decimal]) -> Decimal {
    if values.is_empty() {
        return Decimal::ZERO;
    }
    let sum: Decimal = values.iter().sum();
    (sum / Decimal::from(values.len())).round_dp(12).normalize()
}

/// Facts ordered by relevance descending, ties to the lower id.
pub fn by_relevance<'a>(facts: &[&'a Fact]) -> Vec<&'a Fact> {
    let mut sorted = facts.to_vec();
    sorted.sort_by(|a, b| b.relevance.cmp(&a.relevance).then_with(|| id_order(&a.id, &b.id)));
    sorted
}

/// Representative fact and up to three top facts.
pub fn select_representatives(facts: &[&Fact]) -> Option<(String, Vec<String>)> {
    let sorted = by_relevance(facts);
    let rep = sorted.first()?.id.clone();
    Some((rep, sorted.iter().take(3).map(|f| f.id.clone()).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FactStatus;

    fn fact(id: &str, rel: &str) -> Fact {
        Fact {
            id: id.into(),
            article_id: "a1".into(),
            paragraph_index: 0,
            content: String::new(),
            data_points: vec![],
            relevance: rel.parse().unwrap(),
            embedding: vec![],
            status: FactStatus::Validated,
        }
    }

    #[test]
    fn cosine_examples() {
        assert!((compute_relevance(&[0.3, 0.4], &[0.3, 0.4]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(compute_relevance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((compute_relevance(&[s, s], &[1.0, 0.0]).unwrap() - s).abs() < 1e-12);
        assert_eq!(compute_relevance(&[0.0, 0.0], &[1.0, 0.0]), Err(OrganizationError::ZeroVector));
    }

    #[test]
    fn representatives() {
        let fs = [fact("f1", "0.9"), fact("f2", "0.7"), fact("f3", "0.8"), fact("f4", "0.6")];
        let refs: Vec<&Fact> = fs.iter().collect();
        assert_eq!(select_representatives(&refs).unwrap(), ("f1".into(), vec!["f1".into(), "f3".into(), "f2".into()]));
        let fs = [fact("f5", "0.8"), fact("f2", "0.8"), fact("f3", "0.1")];
        let refs: Vec<&Fact> = fs.iter().collect();
        assert_eq!(select_representatives(&refs).unwrap().0, "f2");
        assert_eq!(select_representatives(&refs[..2]).unwrap().1.len(), 2);
    }

    #[test]
    fn mean_is_exact_to_twelve_places() {
        let vals: Vec<Decimal> = ["0.5", "0.4", "0.4"].iter().map(|s| s.parse().unwrap()).collect();
        assert_eq!(mean_relevance(&vals).to_string(), "0.433333333333");
    }
}
