//! CSV and JSON emitters. CSV output always has a header row, UTF-8 text and
//! LF line endings.

use serde::Serialize;

use crate::harness::{AbcRow, ScanRecord, SuiteReport};

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8")
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

/// `N,abs_sum,running_sup,slope`.
pub fn scan_csv(records: &[ScanRecord]) -> String {
    let mut w = writer();
    w.write_record(["N", "abs_sum", "running_sup", "slope"]).unwrap();
    for r in records {
        w.write_record([
            r.n.to_string(),
            r.abs_sum.to_string(),
            r.running_sup.to_string(),
            opt(&r.slope),
        ])
        .unwrap();
    }
    finish(w)
}

/// `trial,lhs,rhs,ratio`.
pub fn suite_csv(report: &SuiteReport) -> String {
    let mut w = writer();
    w.write_record(["trial", "lhs", "rhs", "ratio"]).unwrap();
    for r in &report.records {
        w.write_record([
            r.trial.to_string(),
            r.lhs.to_string(),
            r.rhs.to_string(),
            r.ratio.to_string(),
        ])
        .unwrap();
    }
    finish(w)
}

/// `n,v,v0,exponent`; unfactored rows leave `v0` and `exponent` empty.
pub fn abc_csv(rows: &[AbcRow]) -> String {
    let mut w = writer();
    w.write_record(["n", "v", "v0", "exponent"]).unwrap();
    for r in rows {
        w.write_record([r.n.to_string(), r.v.clone(), opt(&r.v0), opt(&r.exponent)])
            .unwrap();
    }
    finish(w)
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scan_csv_layout() {
        let recs = vec![
            ScanRecord { n: 2, abs_sum: 1.5, running_sup: 1.5, slope: None, q: None, thm2_ratio: None },
            ScanRecord { n: 4, abs_sum: 0.5, running_sup: 1.5, slope: Some(0.0), q: None, thm2_ratio: None },
        ];
        assert_eq!(scan_csv(&recs), "N,abs_sum,running_sup,slope\n2,1.5,1.5,\n4,0.5,1.5,0\n");
    }

    #[test]
    fn abc_csv_layout() {
        let rows = vec![AbcRow { n: 1, v: "2".into(), v0: Some("1".into()), exponent: Some(0.0), flagged: false }];
        assert_eq!(abc_csv(&rows), "n,v,v0,exponent\n1,2,1,0\n");
    }
}
