//! Bundled reference measurements: the published CER/FLOPs tables for the
//! six strategies, the convergence-level ablation, the data-scale sweep,
//! and the two-encoder comparison.

use crate::ingest::{RunRecord, Source};
use crate::metrics::TestSetScore;
use thiserror::Error;

pub const WHISPER_MEDIUM: &str = "whisper-medium";
pub const WHISPER_MEDIUM_FT: &str = "whisper-medium-ft";
pub const WHISPER_LARGE_V2_FT: &str = "whisper-large-v2-ft";

const MEETING: &str = "TEST-MEETING";
const NET: &str = "TEST-NET";

struct Row {
    run_id: &'static str,
    strategy_id: &'static str,
    encoder_tag: &'static str,
    data_hours: f64,
    meeting: f64,
    net: f64,
    total_flops: f64,
}

const fn row(
    run_id: &'static str,
    strategy_id: &'static str,
    encoder_tag: &'static str,
    data_hours: f64,
    meeting: f64,
    net: f64,
    total_flops: f64,
) -> Row {
    Row { run_id, strategy_id, encoder_tag, data_hours, meeting, net, total_flops }
}

/// Final CER and total FLOPs of the six strategies at 10000 hours.
const TABLE_1: [Row; 6] = [
    row("t1-S1", "S1", WHISPER_MEDIUM, 10_000.0, 18.76, 16.84, 803.77),
    row("t1-S2", "S2", WHISPER_MEDIUM, 10_000.0, 12.20, 10.42, 1278.39),
    row("t1-S3", "S3", WHISPER_MEDIUM, 10_000.0, 12.37, 8.48, 1898.16),
    row("t1-S4", "S4", WHISPER_MEDIUM_FT, 10_000.0, 11.33, 8.38, 1162.58),
    row("t1-S5", "S5", WHISPER_MEDIUM_FT, 10_000.0, 9.54, 7.01, 1637.20),
    row("t1-S6", "S6", WHISPER_MEDIUM_FT, 10_000.0, 12.23, 8.58, 2102.03),
];

/// Alignment-stage convergence ablation on S5.
const TABLE_2: [Row; 2] = [
    row("t2-S5-full", "S5", WHISPER_MEDIUM_FT, 10_000.0, 9.54, 7.01, 1637.20),
    row("t2-S5-preliminary", "S5-preliminary", WHISPER_MEDIUM_FT, 10_000.0, 9.45, 7.00, 948.26),
];

/// Data-scale sweep: six strategies at 2000 to 10000 hours.
const TABLE_3: [Row; 24] = [
    row("t3-S1-2000h", "S1", WHISPER_MEDIUM, 2_000.0, 22.39, 19.33, 160.75),
    row("t3-S1-5000h", "S1", WHISPER_MEDIUM, 5_000.0, 22.66, 18.54, 401.88),
    row("t3-S1-8000h", "S1", WHISPER_MEDIUM, 8_000.0, 19.47, 17.34, 643.01),
    row("t3-S1-10000h", "S1", WHISPER_MEDIUM, 10_000.0, 18.76, 16.84, 803.77),
    row("t3-S2-2000h", "S2", WHISPER_MEDIUM, 2_000.0, 14.95, 12.75, 255.68),
    row("t3-S2-5000h", "S2", WHISPER_MEDIUM, 5_000.0, 13.06, 11.18, 639.19),
    row("t3-S2-8000h", "S2", WHISPER_MEDIUM, 8_000.0, 12.19, 10.50, 1022.71),
    row("t3-S2-10000h", "S2", WHISPER_MEDIUM, 10_000.0, 12.20, 10.42, 1278.39),
    row("t3-S3-2000h", "S3", WHISPER_MEDIUM, 2_000.0, 19.22, 12.34, 379.63),
    row("t3-S3-5000h", "S3", WHISPER_MEDIUM, 5_000.0, 14.47, 9.69, 949.08),
    row("t3-S3-8000h", "S3", WHISPER_MEDIUM, 8_000.0, 13.80, 9.48, 1518.53),
    row("t3-S3-10000h", "S3", WHISPER_MEDIUM, 10_000.0, 12.37, 8.48, 1898.16),
    row("t3-S4-2000h", "S4", WHISPER_MEDIUM_FT, 2_000.0, 12.57, 9.49, 519.57),
    row("t3-S4-5000h", "S4", WHISPER_MEDIUM_FT, 5_000.0, 12.04, 8.87, 760.69),
    row("t3-S4-8000h", "S4", WHISPER_MEDIUM_FT, 8_000.0, 11.30, 8.73, 1001.83),
    row("t3-S4-10000h", "S4", WHISPER_MEDIUM_FT, 10_000.0, 11.33, 8.38, 1162.58),
    row("t3-S5-preliminary-2000h", "S5-preliminary", WHISPER_MEDIUM_FT, 2_000.0, 10.77, 7.86, 476.70),
    row("t3-S5-preliminary-5000h", "S5-preliminary", WHISPER_MEDIUM_FT, 5_000.0, 9.81, 7.45, 653.54),
    row("t3-S5-preliminary-8000h", "S5-preliminary", WHISPER_MEDIUM_FT, 8_000.0, 9.63, 7.07, 830.37),
    row("t3-S5-preliminary-10000h", "S5-preliminary", WHISPER_MEDIUM_FT, 10_000.0, 9.45, 7.00, 948.26),
    row("t3-S6-2000h", "S6", WHISPER_MEDIUM_FT, 2_000.0, 18.88, 11.48, 738.44),
    row("t3-S6-5000h", "S6", WHISPER_MEDIUM_FT, 5_000.0, 14.53, 10.02, 1307.89),
    row("t3-S6-8000h", "S6", WHISPER_MEDIUM_FT, 8_000.0, 12.43, 8.57, 1877.34),
    row("t3-S6-10000h", "S6", WHISPER_MEDIUM_FT, 10_000.0, 12.23, 8.58, 2102.03),
];

/// Two-encoder comparison under the best strategy, across data scales.
const TABLE_4: [Row; 8] = [
    row("t4-whisper-medium-ft-2000h", "S5-preliminary", WHISPER_MEDIUM_FT, 2_000.0, 10.77, 7.86, 476.70),
    row("t4-whisper-medium-ft-5000h", "S5-preliminary", WHISPER_MEDIUM_FT, 5_000.0, 9.81, 7.45, 653.54),
    row("t4-whisper-medium-ft-8000h", "S5-preliminary", WHISPER_MEDIUM_FT, 8_000.0, 9.63, 7.07, 830.37),
    row("t4-whisper-medium-ft-10000h", "S5-preliminary", WHISPER_MEDIUM_FT, 10_000.0, 9.45, 7.00, 948.26),
    row("t4-whisper-large-v2-ft-2000h", "S5-preliminary", WHISPER_LARGE_V2_FT, 2_000.0, 8.94, 7.48, 789.50),
    row("t4-whisper-large-v2-ft-5000h", "S5-preliminary", WHISPER_LARGE_V2_FT, 5_000.0, 8.54, 7.09, 1040.57),
    row("t4-whisper-large-v2-ft-8000h", "S5-preliminary", WHISPER_LARGE_V2_FT, 8_000.0, 8.19, 6.78, 1291.64),
    row("t4-whisper-large-v2-ft-10000h", "S5-preliminary", WHISPER_LARGE_V2_FT, 10_000.0, 7.90, 6.81, 1459.02),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("unknown fixture table {0} (tables 1-4 are bundled)")]
pub struct UnknownTable(pub u8);

/// Returns the bundled records of one reference table.
pub fn load_fixtures(table: u8) -> Result<Vec<RunRecord>, UnknownTable> {
    let rows: &[Row] = match table {
        1 => &TABLE_1,
        2 => &TABLE_2,
        3 => &TABLE_3,
        4 => &TABLE_4,
        other => return Err(UnknownTable(other)),
    };
    Ok(rows
        .iter()
        .map(|r| RunRecord {
            run_id: r.run_id.to_string(),
            strategy_id: r.strategy_id.to_string(),
            encoder_tag: r.encoder_tag.to_string(),
            data_hours: r.data_hours,
            scores: vec![
                TestSetScore::new(MEETING, r.meeting),
                TestSetScore::new(NET, r.net),
            ],
            total_flops: r.total_flops,
            curve: None,
            source: Source::Fixture(table),
        })
        .collect())
}
