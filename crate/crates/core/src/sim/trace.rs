use std::io::Write;

use super::{Outcome, SimTrace};
use crate::error::Result;

pub const TRACE_HEADER: [&str; 8] =
    ["id", "type", "arrival", "criticality", "exit", "outcome", "partner_id", "partner_type"];

impl SimTrace {
    /// Writes one CSV row per agent; non-match fields are left empty.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(TRACE_HEADER)?;
        for r in &self.records {
            let (partner_id, partner_type) = match r.outcome {
                Outcome::Matched { partner, partner_ty } => (partner.to_string(), partner_ty.as_str().to_string()),
                _ => (String::new(), String::new()),
            };
            w.write_record([
                r.id.to_string(),
                r.ty.as_str().to_string(),
                r.arrival.to_string(),
                r.criticality.to_string(),
                r.exit.map(|e| e.to_string()).unwrap_or_default(),
                r.outcome.as_str().to_string(),
                partner_id,
                partner_type,
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

#[cfg(test)]
mod tests {
    use super::super::{AgentRecord, PoolSample};
    use super::*;
    use crate::compat::AgentType;

    #[test]
    fn writes_expected_rows() {
        let trace = SimTrace {
            records: vec![
                AgentRecord {
                    id: 0,
                    ty: AgentType::Hard,
                    row: 0,
                    arrival: 0.5,
                    criticality: 3.0,
                    exit: Some(1.25),
                    outcome: Outcome::Matched { partner: 1, partner_ty: AgentType::Easy },
                },
                AgentRecord {
                    id: 1,
                    ty: AgentType::Easy,
                    row: 0,
                    arrival: 1.25,
                    criticality: 2.0,
                    exit: Some(1.25),
                    outcome: Outcome::Matched { partner: 0, partner_ty: AgentType::Hard },
                },
                AgentRecord {
                    id: 2,
                    ty: AgentType::Easy,
                    row: 0,
                    arrival: 2.0,
                    criticality: 4.0,
                    exit: None,
                    outcome: Outcome::CensoredAtEnd,
                },
            ],
            pool_series: vec![PoolSample { time: 0.0, easy: 0, hard: 0 }],
            horizon_arrivals: 2,
            end_time: 2.0,
        };
        let text = trace.to_csv_string().unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "id,type,arrival,criticality,exit,outcome,partner_id,partner_type");
        assert_eq!(lines[1], "0,H,0.5,3,1.25,matched,1,E");
        assert_eq!(lines[3], "2,E,2,4,,censored,,");
    }
}
