use std::collections::BTreeMap;

use sha2::{Digest, Sha256};

use super::Row;

/// Hex SHA-256 of a canonical dump: tables by name, rows sorted by their
/// JSON encoding.
pub fn state_digest(tables: &BTreeMap<String, Vec<Row>>) -> String {
    let mut hasher = Sha256::new();
    for (name, rows) in tables {
        let mut encoded: Vec<String> = rows.iter().map(|r| serde_json::to_string(r).expect("cells serialize")).collect();
        encoded.sort();
        hasher.update(format!("table {name} {}\n", encoded.len()));
        for row in encoded {
            hasher.update(row);
            hasher.update("\n");
        }
    }
    hex::encode(hasher.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::Cell;

    #[test]
    fn row_order_does_not_matter() {
        let a = BTreeMap::from([("t".to_string(), vec![vec![Cell::Int(1)], vec![Cell::Int(2)]])]);
        let b = BTreeMap::from([("t".to_string(), vec![vec![Cell::Int(2)], vec![Cell::Int(1)]])]);
        assert_eq!(state_digest(&a), state_digest(&b));
    }

    #[test]
    fn contents_and_table_names_matter() {
        let a = BTreeMap::from([("t".to_string(), vec![vec![Cell::Int(1)]])]);
        let b = BTreeMap::from([("u".to_string(), vec![vec![Cell::Int(1)]])]);
        let c = BTreeMap::from([("t".to_string(), vec![vec![Cell::Text("1".into())]])]);
        assert_ne!(state_digest(&a), state_digest(&b));
        assert_ne!(state_digest(&a), state_digest(&c));
        assert_eq!(state_digest(&BTreeMap::new()).len(), 64);
    }
}
