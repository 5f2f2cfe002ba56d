use std::io::Write;

use super::PeriodRecord;
use crate::Result;

/// One row per entity and period, values in 6-decimal fixed point.
pub fn write_trajectory_csv<W: Write>(trajectory: &[PeriodRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "period",
        "entity",
        "incoming_order",
        "shipped",
        "on_hand",
        "backlog",
        "order_placed",
        "period_cost",
    ])?;
    for rec in trajectory {
        for (i, e) in rec.entities.iter().enumerate() {
            w.write_record([
                rec.period.to_string(),
                i.to_string(),
                format!("{:.6}", e.incoming_order),
                format!("{:.6}", e.shipped),
                format!("{:.6}", e.on_hand),
                format!("{:.6}", e.backlog),
                format!("{:.6}", e.order_placed),
                format!("{:.6}", e.period_cost),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
